# backend/reporting.py - Detection report: aggregation of a tally plus table / JSON rendering
import json
import logging
from typing import Any, Dict, List, Optional

import pandas as pd

from anomaly_engine import aggregate_match_scores, outcome_rates_by_interval
from errors import EmptyWindowSet, UndefinedMetric
from metrics import ConfusionCounts, TallyResult, capturing_capability, overall_probability, precision, st_metric

logger = logging.getLogger("report")

REPORT_FORMAT_VERSION = 1
REPORT_FORMATS = ("table", "json", "pdf")


def _or_none(fn, *args) -> Optional[float]:
    try:
        return round(fn(*args), 6)
    except UndefinedMetric:
        return None


def _confusion(c: ConfusionCounts) -> Dict[str, int]:
    return {"tp": c.tp, "fn": c.fn, "fp": c.fp, "tn": c.tn, "total": c.total}


def _st(c: ConfusionCounts) -> Optional[Dict[str, Any]]:
    if c.tn <= 0 or c.fn <= 0:
        return None
    result = st_metric(c.tn, c.fn)
    return {
        "value": round(result.value, 6),
        "ratio": f"{result.ratio.numerator}/{result.ratio.denominator}",
        "verdict": result.verdict.value,
    }


def build_report(result: TallyResult, intervals: int = 10, label: Optional[str] = None) -> Dict[str, Any]:
    """Everything the renderers print, as plain JSON-ready data."""
    cap = result.capture
    attacks = {
        "signature": {"generated": cap.tsa, "captured": cap.tsa - cap.msa, "missed": cap.msa},
        "anomaly": {"generated": cap.taa, "captured": cap.taa - cap.maa, "missed": cap.maa},
        "total": {"generated": cap.tga, "captured": cap.tga - cap.msa - cap.maa, "missed": cap.msa + cap.maa},
    }

    match_scores = None
    if result.cells:
        try:
            match_scores = {k.value: round(v, 6) for k, v in aggregate_match_scores(result.cells).items()}
        except EmptyWindowSet:
            match_scores = None

    report = {
        "format_version": REPORT_FORMAT_VERSION,
        "label": label,
        "packets_received": result.events_total,
        "windows_evaluated": result.windows.total,
        "attacks": attacks,
        "confusion": {
            "windows": _confusion(result.windows),
            "events": _confusion(result.events),
        },
        "metrics": {
            "precision": _or_none(precision, result.windows),
            "overall_probability": _or_none(overall_probability, result.windows),
            "event_precision": _or_none(precision, result.events),
            "st": _st(result.windows),
            "capturing_capability": _or_none(capturing_capability, cap),
        },
        "per_category": [c.model_dump() for c in result.per_category],
        "match_scores": match_scores,
        "outcome_rates": outcome_rates_by_interval(result.cells, intervals) if result.cells else [],
    }
    logger.debug(f"Built report: {cap.tga} attacks generated, {report['metrics']}")
    return report


# ─── Renderers ───

def render_json(report: Dict[str, Any]) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _section(title: str, frame: pd.DataFrame) -> List[str]:
    body = frame.to_string(index=False) if not frame.empty else "(none)"
    return [title, "-" * len(title), body, ""]


def _fmt(value: Optional[float], suffix: str = "") -> str:
    return "n/a" if value is None else f"{value:.5f}{suffix}"


def render_table(report: Dict[str, Any]) -> str:
    m = report["metrics"]
    lines = [
        "Detection report" + (f" ({report['label']})" if report.get("label") else ""),
        "================",
        f"Packets received:      {report['packets_received']}",
        f"Windows evaluated:     {report['windows_evaluated']}",
        "",
    ]

    attacks = pd.DataFrame(
        [{"family": family, **counts} for family, counts in report["attacks"].items()],
        columns=["family", "generated", "captured", "missed"],
    )
    lines += _section("Attacks", attacks)

    confusion = pd.DataFrame(
        [{"unit": unit, **counts} for unit, counts in report["confusion"].items()],
        columns=["unit", "tp", "fn", "fp", "tn", "total"],
    )
    lines += _section("Confusion counts", confusion)

    st = m["st"]
    lines += [
        "Metrics",
        "-------",
        f"Precision (windows):         {_fmt(m['precision'])}",
        f"Overall probability:         {_fmt(m['overall_probability'])}",
        f"Precision (events):          {_fmt(m['event_precision'])}",
        f"ST:                          " + ("n/a" if st is None else f"{st['value']:.5f} ({st['ratio']}) {st['verdict']}"),
        f"Capturing capability:        {_fmt(m['capturing_capability'], ' %')}",
        "",
    ]

    lines += _section("Per category", pd.DataFrame(report["per_category"],
                                                   columns=["family", "category", "generated", "captured"]))
    lines += _section("Outcome rates by interval (%)", pd.DataFrame(report["outcome_rates"]))
    return "\n".join(lines).rstrip("\n") + "\n"


def render(report: Dict[str, Any], fmt: str) -> bytes:
    if fmt == "json":
        return render_json(report).encode("utf-8")
    if fmt == "table":
        return render_table(report).encode("utf-8")
    if fmt == "pdf":
        from pdf_report import generate_pdf
        return generate_pdf(report)
    raise ValueError(f"unknown report format {fmt!r}")
