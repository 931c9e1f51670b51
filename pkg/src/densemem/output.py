"""CSV / markdown writers for experiment records.

Floats are printed with 6 significant digits so identical runs give
byte-identical files.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

from .experiments import CapacityResult, ExperimentKind, ExperimentRecord

COLUMNS: dict[ExperimentKind, tuple[str, ...]] = {
    ExperimentKind.CONVERGENCE: (
        "N", "p", "alpha", "beta", "corruption", "m0", "trials",
        "success_rate", "mean_sweeps", "ci_low", "ci_high", "alpha_rate",
    ),
    ExperimentKind.BASIN: (
        "N", "p", "alpha", "beta", "corruption", "m0", "trials",
        "success_rate", "mean_sweeps", "ci_low", "ci_high", "alpha_rate",
    ),
    ExperimentKind.ADVERSARIAL: (
        "N", "p", "beta", "gamma", "adversary", "rho", "trials",
        "success_rate", "ci_low", "ci_high",
    ),
    ExperimentKind.UPDATE_COMPARE: (
        "N", "alpha3", "p", "m0", "mode", "beta", "trials",
        "success_rate", "mean_sweeps", "ci_low", "ci_high",
    ),
    ExperimentKind.PATTERN_COMPARE: (
        "N", "alpha", "p", "pattern_kind", "beta", "corruption", "trials",
        "success_rate", "mean_sweeps", "ci_low", "ci_high",
    ),
    ExperimentKind.REALDATA: (
        "source", "N", "p", "beta", "corruption", "trials",
        "success_rate", "mean_sweeps", "ci_low", "ci_high",
    ),
    ExperimentKind.CAPACITY: ("N", "p_max", "N_pow", "alpha_eff", "fit_c", "fit_delta", "fit_r2"),
}


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".6g")
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def record_row(rec: ExperimentRecord) -> dict[str, object]:
    pt = rec.point
    ci_low, ci_high = rec.ci if rec.ci is not None else (None, None)
    row = {
        "N": pt.N,
        "p": pt.p,
        "alpha": pt.loading,
        "alpha3": pt.loading,
        "beta": rec.beta_measured,
        "gamma": rec.theory.gamma if rec.theory else None,
        "corruption": pt.corruption,
        "m0": pt.m0 if pt.m0 is not None else (1 - 2 * pt.corruption if pt.corruption is not None else None),
        "rho": pt.rho,
        "adversary": pt.adversary,
        "mode": pt.mode,
        "pattern_kind": pt.pattern_kind,
        "source": pt.source,
        "trials": rec.trials,
        "success_rate": rec.success_rate,
        "mean_sweeps": rec.mean_sweeps,
        "ci_low": ci_low,
        "ci_high": ci_high,
        "alpha_rate": float(rec.theory.alpha_rate) if rec.theory else None,
    }
    return row


def capacity_rows(result: CapacityResult) -> list[dict[str, object]]:
    fit = result.fit
    return [
        {
            "N": pt.N,
            "p_max": pt.p_max,
            "N_pow": pt.N ** (result.n - 1),
            "alpha_eff": pt.alpha_eff,
            "fit_c": fit.prefactor if fit else None,
            "fit_delta": fit.exponent if fit else None,
            "fit_r2": fit.r_squared if fit else None,
        }
        for pt in result.points
    ]


def render(rows: Sequence[dict], columns: Sequence[str], fmt_name: str = "csv") -> str:
    if fmt_name == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row.get(c)) for c in columns])
        return buf.getvalue()
    if fmt_name == "markdown":
        lines = ["| " + " | ".join(columns) + " |", "|" + "|".join("---" for _ in columns) + "|"]
        for row in rows:
            lines.append("| " + " | ".join(fmt(row.get(c)) or "--" for c in columns) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown output format {fmt_name!r}")


def render_records(records, kind: ExperimentKind, fmt_name: str = "csv") -> str:
    """Text for a homogeneous record list, or for a CapacityResult."""
    kind = ExperimentKind(kind)
    if isinstance(records, CapacityResult):
        rows = capacity_rows(records)
    else:
        kinds = {r.point.kind for r in records}
        if kinds - {kind}:
            raise ValueError("records must all be of the requested kind")
        rows = [record_row(r) for r in records]
    return render(rows, COLUMNS[kind], fmt_name)


def write_records(records, kind: ExperimentKind, fmt_name: str, path) -> int:
    """Write rendered records to ``path``; returns bytes written."""
    data = render_records(records, kind, fmt_name).encode("utf-8")
    Path(path).write_bytes(data)
    return len(data)


def read_csv(path_or_text) -> list[dict[str, str]]:
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = Path(path_or_text).read_text(encoding="utf-8")
    return list(csv.DictReader(io.StringIO(text)))
