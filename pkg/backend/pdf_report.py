"""Detection report PDF.

Summary page with the headline capture rate, then attack, confusion and per-category
tables, then outcome rates over time when there are windows to score. Output is byte-stable for a given
report (fixed creation date, no wall-clock text).
"""
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple

# ─── Color palette (RGB) ───
INK = (24, 27, 35)
INK_SOFT = (88, 96, 110)
INK_MUTED = (148, 156, 168)
HAIRLINE = (228, 230, 234)
SURFACE = (246, 247, 250)

GOOD = (15, 145, 100)
WARN = (200, 126, 20)
BAD = (200, 60, 60)

PAGE_W = 210
MARGIN_X = 16

FIXED_CREATION_DATE = datetime(2000, 1, 1, tzinfo=timezone.utc)


def _safe(text, max_len: int = 500) -> str:
    if text is None:
        return ""
    s = str(text)[:max_len]
    return s.encode("latin-1", errors="replace").decode("latin-1")


def _capture_color(pct: Optional[float]) -> Tuple[int, int, int]:
    if pct is None:
        return INK_MUTED
    if pct >= 99:
        return GOOD
    if pct >= 90:
        return WARN
    return BAD


def _fmt(value: Optional[float], digits: int = 5, suffix: str = "") -> str:
    return "n/a" if value is None else f"{value:.{digits}f}{suffix}"


# ─── Text styles: (font style, size, colour, line height) ───
STYLES: Dict[str, Tuple[str, float, Tuple[int, int, int], float]] = {
    "eyebrow": ("B", 7.5, INK_MUTED, 4),
    "title": ("B", 22, INK, 10),
    "heading": ("B", 13, INK, 7),
    "figure": ("B", 20, INK, 10),
    "th": ("B", 8, INK_SOFT, 6),
    "td": ("", 9, INK, 5.5),
    "note": ("", 8, INK_SOFT, 4),
    "footer": ("", 7.5, INK_MUTED, 5),
}


def _text(pdf, style: str, text, w: float = 0, newline: bool = True, colour=None, **cell):
    font_style, size, default_colour, height = STYLES[style]
    pdf.set_font("Helvetica", font_style, size)
    pdf.set_text_color(*(colour or default_colour))
    pdf.cell(w, height, _safe(text), ln=newline, **cell)


def _rule(pdf, y: Optional[float] = None, gap: float = 4):
    y = pdf.get_y() if y is None else y
    pdf.set_draw_color(*HAIRLINE)
    pdf.set_line_width(0.2)
    pdf.line(MARGIN_X, y, PAGE_W - MARGIN_X, y)
    pdf.set_y(y + gap)


def _section(pdf, title: str):
    pdf.set_x(MARGIN_X)
    _text(pdf, "heading", title)


def _kpi(pdf, x, y, w, label, value, sub: str = "", tone: Tuple[int, int, int] = INK):
    for dy, style, text, colour in ((0, "eyebrow", label.upper(), None), (5, "figure", value, tone),
                                    (17, "note", sub, None)):
        if text == "":
            continue
        pdf.set_xy(x, y + dy)
        _text(pdf, style, text, w, newline=False, colour=colour)


def _table(pdf, headers: Sequence[str], rows: List[Sequence[Any]], widths: Optional[Sequence[float]] = None):
    widths = widths or [(PAGE_W - 2 * MARGIN_X) / len(headers)] * len(headers)
    pdf.set_fill_color(*SURFACE)
    for style, cells in [("th", headers)] + [("td", row) for row in rows]:
        pdf.set_x(MARGIN_X)
        for value, w in zip(cells, widths):
            _text(pdf, style, str(value)[:60], w, newline=False, fill=style == "th")
        pdf.ln(STYLES[style][3])
    _rule(pdf, pdf.get_y() + 1)


# ─── Page builders ───
def _page_summary(pdf, data: Dict[str, Any]):
    pdf.add_page()
    m, st = data["metrics"], data["metrics"].get("st")
    ea = m.get("capturing_capability")
    total = data["attacks"]["total"]

    pdf.set_xy(MARGIN_X, 28)
    _text(pdf, "eyebrow", "INTRUSION DETECTION REPORT")
    pdf.set_x(MARGIN_X)
    _text(pdf, "title", data.get("label") or "Detection run")
    pdf.ln(6)

    y = pdf.get_y()
    col = (PAGE_W - 2 * MARGIN_X) / 3
    tiles = [
        ("Capturing capability", _fmt(ea, 3, "%"), f"{total['captured']} of {total['generated']} attacks",
         _capture_color(ea)),
        ("Packets received", data["packets_received"], f"{data['windows_evaluated']} windows evaluated", INK),
        ("ST", "n/a" if st is None else f"{st['value']:.4f}", "" if st is None else st["verdict"], INK),
    ]
    for i, (label, value, sub, tone) in enumerate(tiles):
        _kpi(pdf, MARGIN_X + i * col, y, col, label, value, sub, tone)

    _rule(pdf, y + 30)
    _section(pdf, "Window metrics")
    _table(pdf, ["Metric", "Value"], [
        ["Precision (windows)", _fmt(m.get("precision"))],
        ["Overall probability", _fmt(m.get("overall_probability"))],
        ["Precision (events)", _fmt(m.get("event_precision"))],
        ["ST ratio", "n/a" if st is None else st["ratio"]],
    ], widths=[90, 88])

    scores = data.get("match_scores")
    if scores:
        _section(pdf, "Match scores")
        _table(pdf, ["Outcome", "Share"], [[k, _fmt(v, 4)] for k, v in sorted(scores.items())], widths=[90, 88])


def _page_counts(pdf, data: Dict[str, Any]):
    pdf.add_page()
    _section(pdf, "Attacks generated and captured")
    _table(pdf, ["Family", "Generated", "Captured", "Missed"],
           [[family, c["generated"], c["captured"], c["missed"]] for family, c in data["attacks"].items()])

    _section(pdf, "Confusion counts")
    _table(pdf, ["Unit", "TP", "FN", "FP", "TN", "Total"],
           [[unit, c["tp"], c["fn"], c["fp"], c["tn"], c["total"]] for unit, c in data["confusion"].items()])

    _section(pdf, "Per category")
    _table(pdf, ["Family", "Category", "Generated", "Captured"],
           [[c["family"], c["category"], c["generated"], c["captured"]] for c in data["per_category"]])


def _page_intervals(pdf, rates: List[Dict[str, Any]]):
    pdf.add_page()
    _section(pdf, "Outcome rates by interval (%)")
    _table(pdf, ["Windows", "Count", "TP", "FN", "FP", "TN"], [
        [f"{r['first_window']}-{r['last_window']}", r["windows"], r["TruePositive"],
         r["FalseNegative"], r["FalsePositive"], r["TrueNegative"]]
        for r in rates
    ])


def generate_pdf(data: Dict[str, Any]) -> bytes:
    """Render a reporting.build_report dict."""
    from fpdf import FPDF

    label = data.get("label") or "run"

    class Report(FPDF):
        def footer(self):
            self.set_y(-14)
            _text(self, "footer", f"{label}    |    Detection report    |    page {self.page_no()}",
                  newline=False, align="C")

    pdf = Report()
    pdf.set_creation_date(FIXED_CREATION_DATE)
    pdf.set_auto_page_break(auto=True, margin=20)

    _page_summary(pdf, data)
    _page_counts(pdf, data)
    if data.get("outcome_rates"):
        _page_intervals(pdf, data["outcome_rates"])

    return bytes(pdf.output())
