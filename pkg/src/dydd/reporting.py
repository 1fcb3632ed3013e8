"""Experiment reports and their CSV/JSON serialization.

CSV emits one row per subdomain with the exact column order
case, p, i, deg, i_ad, l_in, l_r, l_fin, E, T_DyDD, T_r, Oh_DyDD, T1, Tp,
speedup, efficiency, error, iterations; floats carry 6 significant digits.
JSON mirrors the report fields with floats rounded the same way, so
emit -> parse -> emit is byte-stable.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

from .errors import IoFailure

CSV_COLUMNS = [
    "case",
    "p",
    "i",
    "deg",
    "i_ad",
    "l_in",
    "l_r",
    "l_fin",
    "E",
    "T_DyDD",
    "T_r",
    "Oh_DyDD",
    "T1",
    "Tp",
    "speedup",
    "efficiency",
    "error",
    "iterations",
]

_FLOAT_FIELDS = ("E", "T_DyDD", "T_r", "Oh_DyDD", "T1", "Tp", "speedup", "efficiency", "error")


def fmt6(x: float) -> str:
    """6 significant digits, trailing zeros kept (1.0 -> '1.00000')."""
    return f"{float(x):#.6g}"


def round6(x: float) -> float:
    return float(f"{float(x):.6g}")


@dataclass
class ScenarioReport:
    """All per-experiment metrics; list fields hold one entry per subdomain."""

    case: str
    p: int
    n: int
    m: int
    deg: list[int]
    i_ad: list[list[int]]
    l_in: list[int]
    l_r: list[int]
    l_fin: list[int]
    E: float
    rounds: int
    balanced: bool
    T_DyDD: float
    T_r: float
    Oh_DyDD: float
    T1: float
    Tp: float
    speedup: float
    efficiency: float
    error: float
    iterations: int
    converged: bool = True

    def rounded(self) -> "ScenarioReport":
        """Copy with every float at the 6-significant-digit emission precision."""
        d = asdict(self)
        for key in _FLOAT_FIELDS:
            d[key] = round6(d[key])
        return ScenarioReport(**d)


def report_to_json(report: ScenarioReport) -> str:
    d = asdict(report.rounded())
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def report_from_json(text: str) -> ScenarioReport:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IoFailure(f"report is not valid JSON: {exc}") from exc
    try:
        return ScenarioReport(**obj)
    except TypeError as exc:
        raise IoFailure(f"report fields do not match: {exc}") from exc


def report_to_csv(report: ScenarioReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    r = report.rounded()
    for i in range(r.p):
        writer.writerow(
            [
                r.case,
                r.p,
                i + 1,
                r.deg[i],
                ";".join(str(v) for v in r.i_ad[i]),
                r.l_in[i],
                r.l_r[i],
                r.l_fin[i],
                fmt6(r.E),
                fmt6(r.T_DyDD),
                fmt6(r.T_r),
                fmt6(r.Oh_DyDD),
                fmt6(r.T1),
                fmt6(r.Tp),
                fmt6(r.speedup),
                fmt6(r.efficiency),
                fmt6(r.error),
                r.iterations,
            ]
        )
    return buf.getvalue()


def emit_report(report: ScenarioReport, fmt: str, path=None) -> str:
    """Serialize the report; write to path when given. Returns the text."""
    if fmt == "json":
        text = report_to_json(report)
    elif fmt == "csv":
        text = report_to_csv(report)
    else:
        raise IoFailure(f"unknown report format {fmt!r}")
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoFailure(f"cannot write report to {path}: {exc}") from exc
    return text
