# backend/anomaly_engine.py - Lower layer: windowed pick-detect against an adaptive EWMA baseline
import enum
import logging
from collections import Counter
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from errors import EmptyWindowSet
from policy import AnomalyConfig
from schemas import AttackClass, NetworkEvent

logger = logging.getLogger("anomaly")

# Metrics the baseline tracks. payload_delta is itself measured against the baseline.
BASELINE_METRICS = ("packet_rate", "byte_rate", "unacked_ratio", "max_duration", "failed_logins", "mean_payload")

# ─── Evidence tags ───
EV_DOS = "dos_unacked_ratio"
EV_PROBE = "probe_payload_delta"
EV_U2R = "u2r_max_duration"
EV_R2L = "r2l_failed_logins"

CLASS_SEVERITY = {
    AttackClass.U2R: 5,
    AttackClass.R2L: 4,
    AttackClass.DOS: 4,
    AttackClass.PROBE: 3,
}


class WindowMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    window_index: int
    packet_rate: float = Field(default=0.0, ge=0)
    byte_rate: float = Field(default=0.0, ge=0)
    unacked_ratio: float = Field(default=0.0, ge=0, le=1)
    max_duration: float = Field(default=0.0, ge=0)
    failed_logins: int = Field(default=0, ge=0)
    payload_delta: float = 0.0
    mean_payload: float = Field(default=0.0, ge=0)
    service_events: int = Field(default=0, ge=0)


class AdaptiveBaseline(BaseModel):
    """Per-metric EWMA. `mean` is None until the first window seeds it."""
    model_config = ConfigDict(frozen=True)

    mean: Optional[Dict[str, float]] = None
    alpha: float = Field(default=0.2, gt=0, le=1)
    k: float = Field(default=1.0, gt=0)
    warmup_windows: int = Field(default=20, ge=0)
    windows_seen: int = Field(default=0, ge=0)

    @classmethod
    def from_config(cls, config: AnomalyConfig) -> "AdaptiveBaseline":
        return cls(alpha=config.alpha, k=config.k, warmup_windows=config.warmup_windows)

    @property
    def warmed_up(self) -> bool:
        return self.windows_seen >= self.warmup_windows

    def mean_of(self, metric: str) -> Optional[float]:
        return None if self.mean is None else self.mean.get(metric)


class Outcome(str, enum.Enum):
    TRUE_POSITIVE = "TruePositive"
    FALSE_NEGATIVE = "FalseNegative"
    FALSE_POSITIVE = "FalsePositive"
    TRUE_NEGATIVE = "TrueNegative"


class OutcomeCell(BaseModel):
    model_config = ConfigDict(frozen=True)

    outcome: Outcome
    window_index: int
    evidence: List[str] = Field(default_factory=list)


class Detection(BaseModel):
    model_config = ConfigDict(frozen=True)

    alarm: bool
    evidence: List[str] = Field(default_factory=list)


# ─── Metrics ───

def compute_window_metrics(events: Sequence[NetworkEvent], window_index: int, window_secs: float,
                           baseline: Optional[AdaptiveBaseline] = None) -> WindowMetrics:
    if not events:
        return WindowMetrics(window_index=window_index)

    payloads = np.array([ev.payload_bytes for ev in events], dtype=float)
    acked = [ev.acked for ev in events if ev.acked is not None]
    durations = [ev.duration for ev in events if ev.duration is not None]
    mean_payload = float(payloads.mean())

    base_payload = baseline.mean_of("mean_payload") if baseline is not None else None
    return WindowMetrics(
        window_index=window_index,
        packet_rate=len(events) / window_secs,
        byte_rate=float(payloads.sum()) / window_secs,
        unacked_ratio=(acked.count(False) / len(acked)) if acked else 0.0,
        max_duration=max(durations) if durations else 0.0,
        failed_logins=sum(1 for ev in events if ev.fields.get("login") == "failed"),
        payload_delta=0.0 if base_payload is None else mean_payload - base_payload,
        mean_payload=mean_payload,
        service_events=sum(1 for ev in events if "service" in ev.fields),
    )


def update_baseline(b: AdaptiveBaseline, m: WindowMetrics) -> AdaptiveBaseline:
    """mean' = (1 - alpha) * mean + alpha * m; the first window seeds the mean directly.

    An empty window carries no payload sizes, so it leaves mean_payload where it was.
    """
    empty = m.packet_rate == 0
    mean = dict(b.mean or {})
    for metric in BASELINE_METRICS:
        if metric == "mean_payload" and empty:
            continue
        value = float(getattr(m, metric))
        prev = mean.get(metric)
        mean[metric] = value if prev is None else (1 - b.alpha) * prev + b.alpha * value
    return b.model_copy(update={"mean": mean, "windows_seen": b.windows_seen + 1})


def skip_empty_windows(b: AdaptiveBaseline, n: int) -> AdaptiveBaseline:
    """The baseline after n empty windows, in closed form. Empty windows never alarm, so each one is an update."""
    if n <= 0:
        return b
    if b.mean is None:
        b, n = update_baseline(b, WindowMetrics(window_index=0)), n - 1
    decay = (1 - b.alpha) ** n
    mean = {metric: value if metric == "mean_payload" else value * decay for metric, value in b.mean.items()}
    return b.model_copy(update={"mean": mean, "windows_seen": b.windows_seen + n})


# ─── Per-class heuristics ───

def heuristic_dos(m: WindowMetrics, thresh: float = 0.5) -> bool:
    return m.unacked_ratio > thresh


def heuristic_probe(m: WindowMetrics, delta_thresh: float = 256.0) -> bool:
    return m.payload_delta > delta_thresh


def heuristic_u2r(m: WindowMetrics, dur_thresh: float = 300.0) -> bool:
    return m.max_duration > dur_thresh


def heuristic_r2l(m: WindowMetrics, login_thresh: int = 5) -> bool:
    return m.failed_logins >= login_thresh and m.service_events > 0


def pick_detect(b: AdaptiveBaseline, m: WindowMetrics, config: Optional[AnomalyConfig] = None) -> Detection:
    """Alarm iff a tracked metric exceeds (1 + k) x its baseline mean or any heuristic fires.

    Metrics whose mean is still zero (or unseeded) are left to the heuristics.
    """
    config = config or AnomalyConfig(alpha=b.alpha, k=b.k, warmup_windows=b.warmup_windows)
    evidence: List[str] = []

    for metric in BASELINE_METRICS:
        mean = b.mean_of(metric)
        if mean is not None and mean > 0 and getattr(m, metric) > (1 + b.k) * mean:
            evidence.append(metric)

    if heuristic_dos(m, config.unacked_thresh):
        evidence.append(EV_DOS)
    if heuristic_probe(m, config.delta_thresh):
        evidence.append(EV_PROBE)
    if heuristic_u2r(m, config.dur_thresh):
        evidence.append(EV_U2R)
    if heuristic_r2l(m, config.login_thresh):
        evidence.append(EV_R2L)

    return Detection(alarm=bool(evidence), evidence=evidence)


def classify_alarm_class(evidence: Iterable[str]) -> AttackClass:
    evidence = set(evidence)
    if EV_U2R in evidence or "max_duration" in evidence:
        return AttackClass.U2R
    if EV_R2L in evidence or "failed_logins" in evidence:
        return AttackClass.R2L
    if EV_PROBE in evidence:
        return AttackClass.PROBE
    return AttackClass.DOS


# ─── Evaluation ───

def classify_outcome(alarm: bool, ground_truth_attack: bool) -> Outcome:
    if ground_truth_attack:
        return Outcome.TRUE_POSITIVE if alarm else Outcome.FALSE_NEGATIVE
    return Outcome.FALSE_POSITIVE if alarm else Outcome.TRUE_NEGATIVE


def aggregate_match_scores(cells: Sequence[OutcomeCell], d: Optional[int] = None) -> Dict[Outcome, float]:
    """Per-outcome share of the d evaluated windows."""
    d = len(cells) if d is None else d
    if d <= 0 or not cells:
        raise EmptyWindowSet("no windows to aggregate")
    if d != len(cells):
        raise ValueError(f"d={d} does not match {len(cells)} cells")
    counts = Counter(cell.outcome for cell in cells)
    return {outcome: counts.get(outcome, 0) / d for outcome in Outcome}


def outcome_rates_by_interval(cells: Sequence[OutcomeCell], intervals: int = 10) -> List[Dict]:
    """Split the windows into `intervals` consecutive slices and report outcome percentages per slice."""
    if intervals < 1:
        raise ValueError("intervals must be >= 1")
    ordered = sorted(cells, key=lambda c: c.window_index)
    rows = []
    for n, chunk in enumerate(np.array_split(np.arange(len(ordered)), intervals), start=1):
        if len(chunk) == 0:
            continue
        part = [ordered[i] for i in chunk]
        scores = aggregate_match_scores(part)
        rows.append({
            "interval": n,
            "first_window": part[0].window_index,
            "last_window": part[-1].window_index,
            "windows": len(part),
            **{outcome.value: round(share * 100, 4) for outcome, share in scores.items()},
        })
    return rows
