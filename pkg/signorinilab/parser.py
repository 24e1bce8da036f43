"""
Parser module for experiment configuration files.

Experiments are described in INI-style text with the sections [grid],
[problem], [coefficients], [analysis], [certify], [transfer], [output] and
[run]. Parsing produces a frozen ExperimentConfig.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from signorinilab.analysis import FunctionalKind
from signorinilab.grid import Domain, PPoint
from signorinilab.profiles import PROFILES

PROBLEM_KINDS = ("evaluate", "caloric", "signorini", "signorini_A", "signorini_drift")
COEFFICIENT_KINDS = ("identity", "constant", "holder", "drift")
DRIFT_KINDS = ("singular", "constant", "zero")
CERTIFY_MODES = ("signorini", "caloric", "frozen", "deskewed")


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""

    def __init__(self, message: str, section: Optional[str] = None, key: Optional[str] = None,
                 line: Optional[int] = None) -> None:
        location = ""
        if section is not None:
            location = f"[{section}]" + (f" {key}" if key else "")
        if line is not None:
            location = f"{location} (line {line})".strip()
        super().__init__(f"{location}: {message}" if location else message)
        self.section = section
        self.key = key
        self.line = line


@dataclass(frozen=True)
class GridSpec:
    n: int
    N: int
    K: int
    domain: Domain = Domain.BOX


@dataclass(frozen=True)
class ProblemSpec:
    kind: str
    profile: Optional[str] = None
    profile_params: Dict[str, float] = field(default_factory=dict)
    snapshot: Optional[Path] = None
    tol: float = 1e-10
    psor_omega: float = 1.5
    max_sweeps: int = 20000


@dataclass(frozen=True)
class CoefficientSpec:
    kind: str = "identity"
    matrix: Optional[Tuple[Tuple[float, ...], ...]] = None
    alpha: float = 0.5
    amplitude: float = 0.3
    p: Optional[float] = None
    magnitude: float = 1.0
    drift: str = "singular"


@dataclass(frozen=True)
class AnalysisSpec:
    enabled: bool = False
    functionals: Tuple[FunctionalKind, ...] = ()
    centers: Tuple[PPoint, ...] = ()
    r_min: Optional[float] = None
    r_max: float = 0.5
    per_octave: int = 4
    even_extension: bool = False
    contact_tol: Optional[float] = None
    bounds: Dict[str, Tuple[Optional[float], Optional[float]]] = field(default_factory=dict)
    sigma_min: Optional[float] = None
    sigma_max: Optional[float] = None
    ratio_exponent: Optional[float] = None
    ratio_max: Optional[float] = None
    holder_sigma: Optional[float] = None
    iteration: Optional[Dict[str, float]] = None


@dataclass(frozen=True)
class CertifySpec:
    enabled: bool = False
    mode: str = "signorini"
    center: Optional[PPoint] = None
    r_min: Optional[float] = None
    r_max: float = 0.5
    per_octave: int = 4
    eps: Optional[float] = None
    replacement: bool = True
    alpha_min: Optional[float] = None
    omega_max: Optional[float] = None


@dataclass(frozen=True)
class TransferSpec:
    enabled: bool = False
    center: Optional[PPoint] = None
    R: float = 0.5
    r_min: Optional[float] = None
    r_max: float = 0.4
    per_octave: int = 4
    eps: Optional[float] = None
    replacement: bool = False
    tolerance: float = 0.05


@dataclass(frozen=True)
class OutputSpec:
    directory: Path = Path("results")
    snapshot: bool = True


@dataclass(frozen=True)
class RunSpec:
    seed: int = 0
    threads: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    """A complete experiment definition."""

    name: str
    grid: GridSpec
    problem: ProblemSpec
    coefficients: CoefficientSpec = CoefficientSpec()
    analysis: AnalysisSpec = AnalysisSpec()
    certify: CertifySpec = CertifySpec()
    transfer: TransferSpec = TransferSpec()
    output: OutputSpec = OutputSpec()
    run: RunSpec = RunSpec()

    def with_overrides(
        self,
        seed: Optional[int] = None,
        out: Optional[Path] = None,
        threads: Optional[int] = None,
    ) -> "ExperimentConfig":
        """Apply command-line overrides."""
        run = self.run
        if seed is not None:
            run = dataclasses.replace(run, seed=seed)
        if threads is not None:
            if threads < 1:
                raise ConfigError("threads must be at least 1", "run", "threads")
            run = dataclasses.replace(run, threads=threads)
        output = self.output if out is None else dataclasses.replace(self.output, directory=out)
        return dataclasses.replace(self, run=run, output=output)


class _Section:
    """Typed accessors over one configparser section with keyed diagnostics."""

    def __init__(self, parser: configparser.ConfigParser, name: str) -> None:
        self.name = name
        self.present = parser.has_section(name)
        self.data = parser[name] if self.present else {}

    def raw(self, key: str, required: bool = False) -> Optional[str]:
        value = self.data.get(key)
        if value is None or not value.strip():
            if required:
                raise ConfigError(
                    f"missing required key '{key}'.\nExample:\n  [{self.name}]\n  {key} = ...",
                    self.name,
                    key,
                )
            return None
        return value.strip()

    def _convert(self, key: str, value: str, kind: type, what: str):
        try:
            return kind(value)
        except ValueError:
            raise ConfigError(f"expected {what}, got '{value}'", self.name, key) from None

    def get_int(self, key: str, default: Optional[int] = None, required: bool = False) -> Optional[int]:
        value = self.raw(key, required)
        return default if value is None else self._convert(key, value, int, "an integer")

    def get_float(self, key: str, default: Optional[float] = None, required: bool = False) -> Optional[float]:
        value = self.raw(key, required)
        return default if value is None else self._convert(key, value, float, "a number")

    def get_str(self, key: str, default: Optional[str] = None, required: bool = False) -> Optional[str]:
        value = self.raw(key, required)
        return default if value is None else value

    def get_bool(self, key: str, default: bool = False) -> bool:
        value = self.raw(key)
        if value is None:
            return default
        lowered = value.lower()
        if lowered in ("1", "yes", "true", "on"):
            return True
        if lowered in ("0", "no", "false", "off"):
            return False
        raise ConfigError(f"expected a boolean (true/false), got '{value}'", self.name, key)

    def get_choice(self, key: str, choices: Tuple[str, ...], default: Optional[str] = None,
                   required: bool = False) -> Optional[str]:
        value = self.get_str(key, default, required)
        if value is not None and value not in choices:
            raise ConfigError(
                f"unknown value '{value}'; expected one of: {', '.join(choices)}",
                self.name,
                key,
            )
        return value


def _parse_floats(text: str, section: str, key: str) -> Tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"expected numbers separated by commas, got '{text}'", section, key) from None


def _parse_point(text: str, n: int, section: str, key: str) -> PPoint:
    values = _parse_floats(text, section, key)
    if len(values) != n + 1:
        raise ConfigError(
            f"a space-time point needs {n + 1} numbers (x_1, ..., x_{n}, t), got '{text}'",
            section,
            key,
        )
    return PPoint(values[:n], values[n])


def _parse_matrix(text: str, n: int, section: str, key: str) -> Tuple[Tuple[float, ...], ...]:
    rows = tuple(_parse_floats(row, section, key) for row in text.split(";"))
    if len(rows) != n or any(len(row) != n for row in rows):
        raise ConfigError(
            f"expected a {n}x{n} matrix with rows separated by ';', got '{text}'.\n"
            "Example: matrix = 1.5, 0.4; 0.4, 0.8",
            section,
            key,
        )
    A = np.array(rows)
    if not np.allclose(A, A.T, atol=1e-12):
        raise ConfigError("matrix must be symmetric", section, key)
    if np.linalg.eigvalsh(A).min() <= 0:
        raise ConfigError("matrix must be positive definite", section, key)
    return rows


def _radius_window(sec: _Section, r_max_default: float) -> Tuple[Optional[float], float, int]:
    r_min = sec.get_float("r_min")
    r_max = sec.get_float("r_max", r_max_default)
    per_octave = sec.get_int("per_octave", 4)
    if r_max <= 0 or (r_min is not None and not 0 < r_min <= r_max):
        raise ConfigError("radius window must satisfy 0 < r_min <= r_max", sec.name, "r_min")
    if per_octave < 1:
        raise ConfigError("per_octave must be at least 1", sec.name, "per_octave")
    return r_min, r_max, per_octave


def _parse_grid(parser: configparser.ConfigParser) -> GridSpec:
    sec = _Section(parser, "grid")
    if not sec.present:
        raise ConfigError("missing section [grid] (keys n, N, K)", "grid")
    n = sec.get_int("n", required=True)
    N = sec.get_int("N", required=True)
    K = sec.get_int("K", required=True)
    if n < 2:
        raise ConfigError(f"spatial dimension must be at least 2, got {n}", "grid", "n")
    if N < 5 or N % 2 == 0:
        raise ConfigError(
            f"nodes per axis must be odd and >= 5, got {N}.\nExample: N = 65", "grid", "N"
        )
    if K < 2:
        raise ConfigError(f"need at least 2 time steps, got {K}", "grid", "K")
    domain = sec.get_choice("domain", tuple(d.value for d in Domain), "box")
    return GridSpec(n=n, N=N, K=K, domain=Domain(domain))


def _parse_problem(parser: configparser.ConfigParser, base: Path) -> ProblemSpec:
    sec = _Section(parser, "problem")
    if not sec.present:
        raise ConfigError("missing section [problem] (key kind)", "problem")
    kind = sec.get_choice("kind", PROBLEM_KINDS, required=True)
    snapshot_text = sec.get_str("snapshot")
    snapshot = None
    if snapshot_text is not None:
        snapshot = Path(snapshot_text)
        if not snapshot.is_absolute():
            snapshot = base / snapshot
        if not snapshot.exists():
            raise ConfigError(f"snapshot file not found: {snapshot}", "problem", "snapshot")
    profile = sec.get_str("profile", required=snapshot is None)
    if profile is not None and profile not in PROFILES:
        raise ConfigError(
            f"unknown profile '{profile}'; available: {', '.join(sorted(PROFILES))}",
            "problem",
            "profile",
        )
    params = {}
    for key in sec.data:
        if key.startswith("profile_"):
            params[key[len("profile_"):]] = sec.get_float(key)
    tol = sec.get_float("tol", 1e-10)
    omega = sec.get_float("psor_omega", 1.5)
    sweeps = sec.get_int("max_sweeps", 20000)
    if not tol > 0:
        raise ConfigError("solver tolerance must be positive", "problem", "tol")
    if not 0 < omega < 2:
        raise ConfigError("relaxation factor must lie in (0, 2)", "problem", "psor_omega")
    if sweeps < 1:
        raise ConfigError("max_sweeps must be at least 1", "problem", "max_sweeps")
    return ProblemSpec(
        kind=kind,
        profile=profile,
        profile_params=params,
        snapshot=snapshot,
        tol=tol,
        psor_omega=omega,
        max_sweeps=sweeps,
    )


def _parse_coefficients(parser: configparser.ConfigParser, n: int) -> CoefficientSpec:
    sec = _Section(parser, "coefficients")
    if not sec.present:
        return CoefficientSpec()
    kind = sec.get_choice("kind", COEFFICIENT_KINDS, "identity")
    matrix_text = sec.get_str("matrix")
    matrix = None if matrix_text is None else _parse_matrix(matrix_text, n, "coefficients", "matrix")
    if kind == "constant" and matrix is None:
        raise ConfigError("constant coefficients need a matrix", "coefficients", "matrix")
    alpha = sec.get_float("alpha", 0.5)
    if kind == "holder" and not 0 < alpha < 1:
        raise ConfigError(f"Hölder exponent must lie in (0, 1), got {alpha}", "coefficients", "alpha")
    p = sec.get_float("p")
    if kind == "drift":
        if p is None:
            raise ConfigError("drift coefficients need the integrability exponent p", "coefficients", "p")
        if not p > n:
            raise ConfigError(f"p must exceed n = {n}, got {p}", "coefficients", "p")
    return CoefficientSpec(
        kind=kind,
        matrix=matrix,
        alpha=alpha,
        amplitude=sec.get_float("amplitude", 0.3),
        p=p,
        magnitude=sec.get_float("magnitude", 1.0),
        drift=sec.get_choice("drift", DRIFT_KINDS, "singular"),
    )


def _parse_analysis(parser: configparser.ConfigParser, n: int) -> AnalysisSpec:
    sec = _Section(parser, "analysis")
    if not sec.present:
        return AnalysisSpec()
    kinds_text = sec.get_str("functionals", required=True)
    kinds = []
    for name in kinds_text.replace(",", " ").split():
        try:
            kinds.append(FunctionalKind(name))
        except ValueError:
            raise ConfigError(
                f"unknown functional '{name}'; expected one of: "
                f"{', '.join(k.value for k in FunctionalKind)}",
                "analysis",
                "functionals",
            ) from None
    centers_text = sec.get_str("centers", required=True)
    centers = tuple(
        _parse_point(part, n, "analysis", "centers") for part in centers_text.split(";") if part.strip()
    )
    r_min, r_max, per_octave = _radius_window(sec, 0.5)
    bounds = {}
    for kind in kinds:
        low = sec.get_float(f"{kind.value}_min")
        high = sec.get_float(f"{kind.value}_max")
        if low is not None or high is not None:
            bounds[kind.value] = (low, high)
    holder_sigma = sec.get_float("holder_sigma")
    if holder_sigma is not None and not 0 < holder_sigma <= 1:
        raise ConfigError("holder_sigma must lie in (0, 1]", "analysis", "holder_sigma")
    iteration = None
    gamma = sec.get_float("iteration_gamma")
    if gamma is not None:
        iteration = {
            "gamma": gamma,
            "beta": sec.get_float("iteration_beta", required=True),
            "a": sec.get_float("iteration_a", 1.0),
            "b": sec.get_float("iteration_b", 0.0),
            "eps": sec.get_float("iteration_eps", 0.0),
        }
    return AnalysisSpec(
        enabled=sec.get_bool("enabled", True),
        functionals=tuple(kinds),
        centers=centers,
        r_min=r_min,
        r_max=r_max,
        per_octave=per_octave,
        even_extension=sec.get_bool("even_extension", False),
        contact_tol=sec.get_float("contact_tol"),
        bounds=bounds,
        sigma_min=sec.get_float("sigma_min"),
        sigma_max=sec.get_float("sigma_max"),
        ratio_exponent=sec.get_float("ratio_exponent"),
        ratio_max=sec.get_float("ratio_max"),
        holder_sigma=holder_sigma,
        iteration=iteration,
    )


def _parse_certify(parser: configparser.ConfigParser, n: int) -> CertifySpec:
    sec = _Section(parser, "certify")
    if not sec.present:
        return CertifySpec()
    center_text = sec.get_str("center")
    r_min, r_max, per_octave = _radius_window(sec, 0.5)
    return CertifySpec(
        enabled=sec.get_bool("enabled", True),
        mode=sec.get_choice("mode", CERTIFY_MODES, "signorini"),
        center=None if center_text is None else _parse_point(center_text, n, "certify", "center"),
        r_min=r_min,
        r_max=r_max,
        per_octave=per_octave,
        eps=sec.get_float("eps"),
        replacement=sec.get_bool("replacement", True),
        alpha_min=sec.get_float("alpha_min"),
        omega_max=sec.get_float("omega_max"),
    )


def _parse_transfer(parser: configparser.ConfigParser, n: int) -> TransferSpec:
    sec = _Section(parser, "transfer")
    if not sec.present:
        return TransferSpec()
    center_text = sec.get_str("center")
    r_min, r_max, per_octave = _radius_window(sec, 0.4)
    R = sec.get_float("R", 0.5)
    if not r_max < R:
        raise ConfigError(f"r_max must be smaller than R = {R}", "transfer", "r_max")
    return TransferSpec(
        enabled=sec.get_bool("enabled", True),
        center=None if center_text is None else _parse_point(center_text, n, "transfer", "center"),
        R=R,
        r_min=r_min,
        r_max=r_max,
        per_octave=per_octave,
        eps=sec.get_float("eps"),
        replacement=sec.get_bool("replacement", False),
        tolerance=sec.get_float("tolerance", 0.05),
    )


def alakazam_parse_config(text: str, name: str = "experiment", base: Optional[Path] = None) -> ExperimentConfig:
    """
    Parse experiment configuration text.

    Alakazam's psychic abilities represent its capacity for complex analysis and
    data transformation, making it perfect for turning config text into a
    structured experiment.

    Args:
        text: INI-style configuration
        name: Experiment name used in reports
        base: Directory against which relative paths are resolved

    Returns:
        The ExperimentConfig

    Raises:
        ConfigError: On syntax errors, missing keys or invalid values
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";;"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=name)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("text before the first [section] header", line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"could not parse line: {exc.errors[0][1] if exc.errors else ''}", line=line) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None)) from None

    base = Path.cwd() if base is None else base
    grid = _parse_grid(parser)
    output_sec = _Section(parser, "output")
    run_sec = _Section(parser, "run")
    threads = run_sec.get_int("threads", 1)
    if threads < 1:
        raise ConfigError("threads must be at least 1", "run", "threads")
    return ExperimentConfig(
        name=name,
        grid=grid,
        problem=_parse_problem(parser, base),
        coefficients=_parse_coefficients(parser, grid.n),
        analysis=_parse_analysis(parser, grid.n),
        certify=_parse_certify(parser, grid.n),
        transfer=_parse_transfer(parser, grid.n),
        output=OutputSpec(
            directory=Path(output_sec.get_str("dir", "results")),
            snapshot=output_sec.get_bool("snapshot", True),
        ),
        run=RunSpec(seed=run_sec.get_int("seed", 0), threads=threads),
    )


def alakazam_load_config(path: Path) -> ExperimentConfig:
    """
    Read and parse a configuration file.

    Raises:
        ConfigError: If the file is missing or invalid
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file not found: {path}")
    return alakazam_parse_config(path.read_text(encoding="utf-8"), name=path.stem, base=path.parent)
