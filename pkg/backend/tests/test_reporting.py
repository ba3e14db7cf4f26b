import json

import pytest

from commands.state import version_string
from metrics import tally
from reporting import REPORT_FORMAT_VERSION, build_report, render, render_json, render_table


@pytest.fixture
def report(small_truth, small_alerts):
    return build_report(tally(small_alerts, small_truth), intervals=2, label="unit")


def test_sections(report):
    assert report["format_version"] == 1
    assert report["label"] == "unit"
    assert report["packets_received"] == 5
    assert report["windows_evaluated"] == 4
    assert report["attacks"]["total"] == {"generated": 4, "captured": 2, "missed": 2}
    assert report["confusion"]["windows"] == {"tp": 1, "fn": 1, "fp": 1, "tn": 1, "total": 4}
    assert report["metrics"]["precision"] == 0.5
    assert report["metrics"]["capturing_capability"] == 50.0
    assert report["metrics"]["st"] == {"value": 1.0, "ratio": "1/1", "verdict": "Boundary"}
    assert report["match_scores"]["TruePositive"] == 0.25
    assert [r["windows"] for r in report["outcome_rates"]] == [2, 2]


def test_version_string_names_report_format(report):
    assert report["format_version"] == REPORT_FORMAT_VERSION
    assert f"report v{REPORT_FORMAT_VERSION})" in version_string()


def test_undefined_metrics_are_null(small_truth):
    report = build_report(tally([], small_truth))
    assert report["metrics"]["precision"] is None
    assert report["metrics"]["event_precision"] is None
    assert report["metrics"]["capturing_capability"] == 0.0


def test_json_is_stable(report):
    text = render_json(report)
    assert json.loads(text) == report
    assert text == render_json(json.loads(text))


def test_table(report):
    text = render_table(report)
    for heading in ("Attacks", "Confusion counts", "Metrics", "Per category", "Outcome rates by interval"):
        assert heading in text
    assert "Boundary" in text


def test_pdf_is_byte_stable(report):
    first = render(report, "pdf")
    assert first.startswith(b"%PDF")
    assert render(report, "pdf") == first


def test_unknown_format(report):
    with pytest.raises(ValueError):
        render(report, "xml")
