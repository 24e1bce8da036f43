"""
Formatter module for experiment reports.

Renders GrowthReports and GaugeReports as CSV with fixed columns and the run
summary as JSON. Output depends only on its input, so identical runs give
byte-identical files.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import csv
import io
import json
import math
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from signorinilab.analysis import GrowthReport
from signorinilab.certify import GaugeReport

SCHEMA_VERSION = 1


def _number(value: float) -> str:
    """Shortest round-trip text for a float; inf and nan spelled out."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def _center_columns(n: int) -> List[str]:
    return [f"center_x{i + 1}" for i in range(n)] + ["center_t"]


def _write_csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def growth_csv_header(n: int) -> List[str]:
    """Columns of a growth CSV."""
    return ["functional"] + _center_columns(n) + ["radius", "value", "fitted_exponent", "fit_residual", "implied_sigma"]


def kadabra_format_growth_csv(reports: Sequence[GrowthReport]) -> str:
    """
    Format GrowthReports as CSV, one row per (center, radius).

    Kadabra's transformation abilities make it perfect for turning reports into
    their persisted text form.

    Args:
        reports: Reports sharing the same spatial dimension

    Returns:
        CSV text with a header row

    Raises:
        ValueError: If no report is given
    """
    if not reports:
        raise ValueError("No growth reports to format")
    n = reports[0].center.n
    rows = []
    for report in reports:
        center = [_number(x) for x in report.center.x] + [_number(report.center.t)]
        for radius, value in zip(report.radii, report.values):
            rows.append(
                [report.functional_kind.value]
                + center
                + [
                    _number(radius),
                    _number(value),
                    _number(report.fitted_exponent),
                    _number(report.fit_residual),
                    _number(report.implied_sigma),
                ]
            )
    return _write_csv(growth_csv_header(n), rows)


def gauge_csv_header(n: int) -> List[str]:
    """Columns of a gauge CSV."""
    return _center_columns(n) + ["radius", "omega_min", "fitted_alpha", "fitted_C", "competitors"]


def kadabra_format_gauge_csv(report: GaugeReport) -> str:
    """Format a GaugeReport as CSV, one row per cylinder."""
    if not report.cylinders:
        raise ValueError("Gauge report has no cylinders")
    n = report.cylinders[0][0].n
    rows = []
    for (center, radius), omega in zip(report.cylinders, report.omega_min):
        rows.append(
            [_number(x) for x in center.x]
            + [_number(center.t), _number(radius), _number(omega)]
            + [
                _number(report.fitted_alpha),
                _number(report.fitted_C),
                str(report.competitors_per_cylinder),
            ]
        )
    return _write_csv(gauge_csv_header(n), rows)


def kadabra_format_transfer_csv(
    radii: Sequence[float], frozen: Sequence[float], deskewed: Sequence[float]
) -> str:
    """Side-by-side frozen and deskewed gauges with their relative difference."""
    rows = []
    for r, a, b in zip(radii, frozen, deskewed):
        scale = max(abs(a), abs(b))
        diff = abs(a - b) / scale if scale > 0 else 0.0
        rows.append([_number(r), _number(a), _number(b), _number(diff)])
    return _write_csv(["radius", "omega_frozen", "omega_deskewed", "relative_difference"], rows)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        return value if math.isfinite(value) else _number(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def kadabra_format_summary(summary: Dict[str, Any]) -> str:
    """
    Format the run summary as JSON with sorted keys and a schema version.

    Non-finite numbers are written as the strings "inf", "-inf" and "nan".
    """
    document = dict(summary)
    document["schema_version"] = SCHEMA_VERSION
    return json.dumps(_jsonable(document), indent=2, sort_keys=True) + "\n"
