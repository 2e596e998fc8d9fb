"""Report documents for the command line: JSON, CSV and plain-text tables."""
from __future__ import annotations

import csv
import io
import json
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

from core.bootstrap import VarianceEstimate
from core.strategies import StrategyReport
from core.utils import relative_error, within_relative

TEXT_COLUMNS = (
    "strategy", "status", "measured_bytes", "predicted_bytes", "match",
    "estimate", "oracle_estimate", "rel_err",
)


def _stamp(doc: Dict[str, Any], deterministic: bool) -> Dict[str, Any]:
    if not deterministic:
        doc["generated_at"] = datetime.now().isoformat()
    return doc


def measured_section(report: StrategyReport) -> Dict[str, Any]:
    return {
        "bytes": report.measured_bytes,
        "bytes_by_channel": dict(report.measured_bytes_by_channel),
        "peak_floats_per_rank": list(report.measured_peak_floats_per_rank),
        "points_per_rank": list(report.measured_points_per_rank),
    }


def oracle_section(report: StrategyReport, oracle: Optional[VarianceEstimate]) -> Dict[str, Any]:
    if oracle is None:
        return {"estimate": None, "rel_err": None}
    return {
        "estimate": oracle.value,
        "rel_err": relative_error(report.estimate.value, oracle.value),
    }


def simulation_document(
    spec: Dict[str, Any],
    report: StrategyReport,
    oracle: Optional[VarianceEstimate],
    deterministic: bool = False,
) -> Dict[str, Any]:
    """Fixed top-level layout: spec, estimate, measured, predicted, match, oracle."""
    doc = {
        "spec": spec,
        "estimate": report.estimate.value,
        "measured": measured_section(report),
        "predicted": report.predicted.to_dict(),
        "match": report.matches_prediction,
        "mismatches": report.mismatches(),
        "oracle": oracle_section(report, oracle),
    }
    return _stamp(doc, deterministic)


def verification_row(
    report: StrategyReport,
    oracle: VarianceEstimate,
    tolerance: float,
) -> Dict[str, Any]:
    rel_err = relative_error(report.estimate.value, oracle.value)
    bytes_match = report.measured_bytes == report.predicted.comm_bytes
    ok = report.matches_prediction and within_relative(report.estimate.value, oracle.value, tolerance)
    return {
        "strategy": report.kind.value,
        "status": "ok" if ok else "mismatch",
        "measured_bytes": report.measured_bytes,
        "predicted_bytes": report.predicted.comm_bytes,
        "match": bytes_match,
        "counters_match": report.matches_prediction,
        "estimate": report.estimate.value,
        "oracle_estimate": oracle.value,
        "rel_err": rel_err,
        "tolerance": tolerance,
        "detail": "; ".join(report.mismatches()),
    }


def failed_row(strategy: str, status: str, detail: str, predicted_bytes: Optional[int] = None) -> Dict[str, Any]:
    return {
        "strategy": strategy,
        "status": status,
        "measured_bytes": None,
        "predicted_bytes": predicted_bytes,
        "match": None,
        "counters_match": None,
        "estimate": None,
        "oracle_estimate": None,
        "rel_err": None,
        "tolerance": None,
        "detail": detail,
    }


def verification_document(
    spec: Dict[str, Any],
    rows: Sequence[Dict[str, Any]],
    deterministic: bool = False,
) -> Dict[str, Any]:
    doc = {
        "spec": spec,
        "rows": list(rows),
        "ok": all(row["status"] in ("ok", "infeasible", "not_applicable") for row in rows),
    }
    return _stamp(doc, deterministic)


def to_json(doc: Dict[str, Any]) -> str:
    return json.dumps(doc, indent=2)


def to_csv(rows: Sequence[Dict[str, Any]]) -> str:
    if not rows:
        return ""
    buffer = io.StringIO()
    fieldnames = list(dict.fromkeys(key for row in rows for key in row))
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    return buffer.getvalue()


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def to_text(rows: Sequence[Dict[str, Any]], columns: Sequence[str] = TEXT_COLUMNS) -> str:
    """Aligned table; missing columns render as '-'."""
    table: List[List[str]] = [list(columns)]
    table += [[_cell(row.get(c)) for c in columns] for row in rows]
    widths = [max(len(line[i]) for line in table) for i in range(len(columns))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() for line in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
