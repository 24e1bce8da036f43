"""
Pipeline module.

Runs the configured experiment stages (solve, analyze, certify, transfer),
evaluates threshold checks, and writes snapshots, CSV reports and the JSON
summary.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from signorinilab.analysis import (
    FunctionalKind,
    RegularityReport,
    beta_exponent,
    dyadic_ladder,
    hl_iteration_check,
    ratio_bound,
    regularity_report,
)
from signorinilab.certify import (
    GaugeReport,
    certify_caloric,
    certify_deskewed,
    certify_frozen,
    certify_signorini,
)
from signorinilab.field import ScalarField
from signorinilab.formatter import (
    kadabra_format_gauge_csv,
    kadabra_format_growth_csv,
    kadabra_format_summary,
    kadabra_format_transfer_csv,
)
from signorinilab.functionals import holder_seminorm
from signorinilab.grid import Cylinder, Grid, PPoint, build_grid
from signorinilab.parser import ExperimentConfig
from signorinilab.profiles import sample_profile
from signorinilab.snapshot import snorlax_load_snapshot, snorlax_store_snapshot
from signorinilab.solve import (
    CoefficientField,
    SolverConvergenceError,
    SolverSettings,
    SolveSpec,
    complementarity_residuals,
    heat_solve,
    signorini_solve,
)

logger = logging.getLogger(__name__)

STAGES = ("solve", "analyze", "certify", "transfer")

SNAPSHOT_NAME = "field.sgnl"
SUMMARY_NAME = "summary.json"


@dataclass
class PipelineResult:
    """Outcome of a pipeline run."""

    summary: Dict[str, Any]
    artifacts: List[Path] = field(default_factory=list)
    solution: Optional[ScalarField] = None

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("passed", False))


def _check(value: float, low: Optional[float] = None, high: Optional[float] = None) -> Dict[str, Any]:
    passed = (low is None or value >= low) and (high is None or value <= high)
    expected = f"[{'-inf' if low is None else low}, {'inf' if high is None else high}]"
    return {"value": float(value), "expected": expected, "passed": bool(passed)}


def solver_settings(config: ExperimentConfig) -> SolverSettings:
    return SolverSettings(
        tol=config.problem.tol,
        psor_omega=config.problem.psor_omega,
        max_sweeps=config.problem.max_sweeps,
    )


def build_coefficients(config: ExperimentConfig, grid: Grid) -> Optional[CoefficientField]:
    """CoefficientField described by the [coefficients] section, None for the identity."""
    spec = config.coefficients
    matrix = None if spec.matrix is None else np.array(spec.matrix)
    if spec.kind == "identity":
        return None
    if spec.kind == "constant":
        return CoefficientField.constant(grid, matrix)
    if spec.kind == "holder":
        return CoefficientField.holder(grid, spec.alpha, spec.amplitude, seed=config.run.seed)
    if spec.drift == "singular":
        return CoefficientField.drift(grid, spec.p, spec.magnitude, matrix)
    if spec.drift == "constant":
        b = np.zeros(grid.n)
        b[0] = spec.magnitude
        return CoefficientField.constant(grid, np.eye(grid.n) if matrix is None else matrix, b)
    return None if matrix is None else CoefficientField.constant(grid, matrix)


def boundary_data(config: ExperimentConfig) -> ScalarField:
    """Boundary data from the configured snapshot or named profile."""
    problem = config.problem
    if problem.snapshot is not None:
        return snorlax_load_snapshot(problem.snapshot)
    g = config.grid
    grid = build_grid(g.n, g.N, g.K, domain=g.domain)
    params: Dict[str, Any] = dict(problem.profile_params)
    if problem.profile == "elliptic_bump" and config.coefficients.matrix is not None:
        params["matrix"] = np.array(config.coefficients.matrix)
    return sample_profile(grid, problem.profile, **params)


def machamp_solve_stage(config: ExperimentConfig) -> Tuple[ScalarField, Dict[str, Any], Dict[str, Any]]:
    """
    Produce the field the later stages examine.

    Returns:
        (field, stage summary, checks)
    """
    data = boundary_data(config)
    kind = config.problem.kind
    settings = solver_settings(config)
    summary: Dict[str, Any] = {"kind": kind}
    checks: Dict[str, Dict[str, Any]] = {}
    if kind == "evaluate":
        return data, summary, checks

    coeffs = build_coefficients(config, data.grid)
    spec = SolveSpec(
        boundary_data=data,
        region=None,
        constrained=kind != "caloric",
        coefficients=coeffs if kind != "signorini" else None,
        psor_omega=settings.psor_omega,
        tol=settings.tol,
        max_sweeps=settings.max_sweeps,
    )
    u = heat_solve(spec) if kind == "caloric" else signorini_solve(spec)
    if spec.constrained:
        g = u.grid
        res = complementarity_residuals(u)
        summary["complementarity"] = {
            "negativity": res.negativity,
            "flux_negativity": res.flux_negativity,
            "product": res.product,
        }
        checks["complementarity_negativity"] = _check(res.negativity, high=1e-9)
        checks["complementarity_flux"] = _check(res.flux_negativity, high=10 * g.h)
        checks["complementarity_product"] = _check(res.product, high=10 * (g.h + settings.tol))
    return u, summary, checks


def _ladder(grid: Grid, r_min: Optional[float], r_max: float, per_octave: int) -> np.ndarray:
    return dyadic_ladder(8 * grid.h if r_min is None else r_min, r_max, per_octave)


def machamp_analyze_stage(
    config: ExperimentConfig, u: ScalarField
) -> Tuple[Dict[FunctionalKind, RegularityReport], Dict[str, Any], Dict[str, Dict[str, Any]]]:
    """Growth reports for every configured functional, with threshold checks."""
    spec = config.analysis
    g = u.grid
    radii = _ladder(g, spec.r_min, spec.r_max, spec.per_octave)
    contact_tol = 10 * config.problem.tol if spec.contact_tol is None else spec.contact_tol
    reports: Dict[FunctionalKind, RegularityReport] = {}
    summary: Dict[str, Any] = {"radii": [float(r) for r in radii]}
    checks: Dict[str, Dict[str, Any]] = {}

    for kind in spec.functionals:
        report = regularity_report(
            u,
            list(spec.centers),
            kind,
            radii,
            use_even_extension=spec.even_extension and kind == FunctionalKind.CAMPANATO_GRAD,
            contact_tol=contact_tol,
            threads=config.run.threads,
        )
        reports[kind] = report
        summary[kind.value] = {
            "exponents": [r.fitted_exponent for r in report.reports],
            "residuals": [r.fit_residual for r in report.reports],
            "implied_sigma": [r.implied_sigma for r in report.reports],
            "min_exponent": report.min_exponent,
            "median_exponent": report.median_exponent,
            "min_sigma": report.min_sigma,
            "median_sigma": report.median_sigma,
            "degenerate": report.degenerate,
        }
        low, high = spec.bounds.get(kind.value, (None, None))
        for i, growth in enumerate(report.reports):
            if low is not None or high is not None:
                checks[f"{kind.value}_exponent_{i}"] = _check(growth.fitted_exponent, low, high)
            if spec.sigma_min is not None or spec.sigma_max is not None:
                checks[f"{kind.value}_sigma_{i}"] = _check(
                    growth.implied_sigma, spec.sigma_min, spec.sigma_max
                )
            if spec.ratio_exponent is not None:
                bound = ratio_bound(growth.radii, growth.values, spec.ratio_exponent)
                checks[f"{kind.value}_ratio_{i}"] = _check(bound, high=spec.ratio_max)
            if spec.iteration is not None and kind == FunctionalKind.PHI:
                it = spec.iteration
                result = hl_iteration_check(
                    zip(growth.radii, growth.values),
                    a=it["a"],
                    gamma=it["gamma"],
                    beta=it["beta"],
                    b=it["b"],
                    eps=it["eps"],
                )
                summary.setdefault("iteration", []).append(
                    {"hypothesis": result.hypothesis, "needed_a": result.needed_a, "constant": result.constant}
                )
                checks[f"iteration_hypothesis_{i}"] = {
                    "value": result.hypothesis,
                    "expected": True,
                    "passed": bool(result.hypothesis),
                }

    if spec.even_extension:
        beta = beta_exponent(g.n, config.coefficients.alpha)
        summary["beta"] = {"exact": f"{beta.numerator}/{beta.denominator}", "value": float(beta)}
        grad = reports.get(FunctionalKind.CAMPANATO_GRAD)
        if grad is not None:
            checks["gradient_sigma_above_beta"] = _check(grad.min_sigma, low=float(beta))

    if spec.holder_sigma is not None:
        region = Cylinder(spec.centers[0], float(radii[-1]))
        estimate = holder_seminorm(
            u, region, spec.holder_sigma, rng=np.random.default_rng(config.run.seed)
        )
        summary["holder"] = {
            "exponent_space": estimate.exponent_space,
            "exponent_time": estimate.exponent_time,
            "seminorm": estimate.seminorm,
            "pairs": estimate.pairs_sampled,
        }
    return reports, summary, checks


def _center(point: Optional[PPoint], n: int) -> PPoint:
    return PPoint.origin(n) if point is None else point


def machamp_certify_stage(
    config: ExperimentConfig, u: ScalarField
) -> Tuple[GaugeReport, Dict[str, Any], Dict[str, Dict[str, Any]]]:
    """Gauge report of the field against the configured competitor family."""
    spec = config.certify
    g = u.grid
    center = _center(spec.center, g.n)
    radii = _ladder(g, spec.r_min, spec.r_max, spec.per_octave)
    settings = solver_settings(config)
    threads = config.run.threads
    if spec.mode == "signorini":
        report = certify_signorini(u, center, radii, spec.eps, spec.replacement, settings, threads)
    elif spec.mode == "caloric":
        report = certify_caloric(u, center, radii, None, spec.eps, settings, threads)
    else:
        coeffs = build_coefficients(config, g)
        if spec.mode == "frozen":
            report = certify_frozen(u, center, radii, coeffs, spec.eps, spec.replacement, settings, threads)
        else:
            report = certify_deskewed(
                u, center, radii, coeffs, 1.25 * spec.r_max, spec.eps, spec.replacement, settings, threads
            )
    summary = {
        "mode": spec.mode,
        "radii": list(report.radii),
        "omega_min": list(report.omega_min),
        "fitted_alpha": report.fitted_alpha,
        "fitted_C": report.fitted_C,
        "competitors_per_cylinder": report.competitors_per_cylinder,
    }
    checks: Dict[str, Dict[str, Any]] = {}
    if spec.alpha_min is not None:
        checks["gauge_alpha"] = _check(report.fitted_alpha, low=spec.alpha_min)
    if spec.omega_max is not None:
        checks["gauge_omega_max"] = _check(max(report.omega_min), high=spec.omega_max)
    return report, summary, checks


def machamp_transfer_stage(
    config: ExperimentConfig, u: ScalarField
) -> Tuple[Tuple[GaugeReport, GaugeReport], Dict[str, Any], Dict[str, Dict[str, Any]]]:
    """Frozen-coefficient gauge on elliptic cylinders against the deskewed field's gauge."""
    spec = config.transfer
    g = u.grid
    center = _center(spec.center, g.n)
    radii = _ladder(g, spec.r_min, spec.r_max, spec.per_octave)
    settings = solver_settings(config)
    coeffs = build_coefficients(config, g)
    frozen = certify_frozen(
        u, center, radii, coeffs, spec.eps, spec.replacement, settings, config.run.threads
    )
    deskewed = certify_deskewed(
        u, center, radii, coeffs, spec.R, spec.eps, spec.replacement, settings, config.run.threads
    )
    diffs = []
    for a, b in zip(frozen.omega_min, deskewed.omega_min):
        scale = max(abs(a), abs(b))
        diffs.append(abs(a - b) / scale if scale > 0 else 0.0)
    summary = {
        "radii": list(frozen.radii),
        "omega_frozen": list(frozen.omega_min),
        "omega_deskewed": list(deskewed.omega_min),
        "relative_difference": diffs,
    }
    checks = {"transfer_relative_difference": _check(max(diffs), high=spec.tolerance)}
    return (frozen, deskewed), summary, checks


def _write(path: Path, text: str, artifacts: List[Path]) -> None:
    path.write_text(text, encoding="utf-8")
    artifacts.append(path)


def machamp_run_pipeline(
    config: ExperimentConfig,
    stages: Sequence[str] = STAGES,
    field_in: Optional[ScalarField] = None,
) -> PipelineResult:
    """
    Run experiment stages and write their artifacts.

    Machamp's multiple arms represent handling multiple operations, making it
    perfect for orchestrating the stages of an experiment.

    Args:
        config: The experiment
        stages: Stages to run, in order; "solve" may be skipped when ``field_in`` is given
        field_in: Field to analyze instead of solving

    Returns:
        PipelineResult with the summary and written artifact paths

    Raises:
        SolverConvergenceError: After writing a partial summary flagged ``partial``
    """
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        raise ValueError(f"Unknown stages: {', '.join(unknown)}")
    out = Path(config.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: List[Path] = []
    g = config.grid
    summary: Dict[str, Any] = {
        "experiment": config.name,
        "problem": config.problem.kind,
        "grid": {"n": g.n, "N": g.N, "K": g.K, "domain": g.domain.value},
        "seed": config.run.seed,
        "stages": {},
        "partial": False,
    }
    checks: Dict[str, Dict[str, Any]] = {}
    u = field_in

    def finish(partial: bool) -> PipelineResult:
        summary["partial"] = partial
        summary["checks"] = checks
        summary["passed"] = (not partial) and all(c["passed"] for c in checks.values())
        summary["artifacts"] = sorted(p.name for p in artifacts) + [SUMMARY_NAME]
        _write(out / SUMMARY_NAME, kadabra_format_summary(summary), artifacts)
        return PipelineResult(summary=summary, artifacts=artifacts, solution=u)

    try:
        if u is None or "solve" in stages:
            u, stage, stage_checks = machamp_solve_stage(config)
            summary["stages"]["solve"] = stage
            checks.update(stage_checks)
            if config.output.snapshot:
                artifacts.append(snorlax_store_snapshot(u, out / SNAPSHOT_NAME))
        summary["grid"].update({"h": u.grid.h, "tau": u.grid.tau})

        if "analyze" in stages and config.analysis.enabled:
            reports, stage, stage_checks = machamp_analyze_stage(config, u)
            summary["stages"]["analyze"] = stage
            checks.update(stage_checks)
            for kind, report in reports.items():
                _write(out / f"growth_{kind.value}.csv", kadabra_format_growth_csv(report.reports), artifacts)

        if "certify" in stages and config.certify.enabled:
            report, stage, stage_checks = machamp_certify_stage(config, u)
            summary["stages"]["certify"] = stage
            checks.update(stage_checks)
            _write(out / "gauge.csv", kadabra_format_gauge_csv(report), artifacts)

        if "transfer" in stages and config.transfer.enabled:
            (frozen, deskewed), stage, stage_checks = machamp_transfer_stage(config, u)
            summary["stages"]["transfer"] = stage
            checks.update(stage_checks)
            _write(
                out / "transfer.csv",
                kadabra_format_transfer_csv(frozen.radii, frozen.omega_min, deskewed.omega_min),
                artifacts,
            )
    except SolverConvergenceError as exc:
        summary["error"] = {
            "type": "SolverConvergenceError",
            "residual": exc.residual,
            "time_index": exc.time_index,
            "sweeps": exc.sweeps,
        }
        finish(partial=True)
        raise

    logger.info("pipeline finished with %d checks", len(checks))
    return finish(partial=False)
