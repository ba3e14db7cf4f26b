# backend/metrics.py - Confusion bookkeeping and the closed-form detection metrics
import enum
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, NamedTuple, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from anomaly_engine import OutcomeCell, classify_outcome
from attack_sim import GroundTruthRecord, TruthUnit
from errors import DomainError, StrictModeViolation, TruthMismatch, UndefinedMetric
from schemas import Alert, Layer

logger = logging.getLogger("metrics")

Number = Union[int, float, Fraction]

EVENT_LAYERS = (Layer.DHCP_VERIFIER.value, Layer.SIGNATURE.value)


class ConfusionCounts(BaseModel):
    model_config = ConfigDict(frozen=True)

    tp: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    tn: int = Field(default=0, ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


class CaptureCounts(BaseModel):
    model_config = ConfigDict(frozen=True)

    tsa: int = Field(ge=0)  # signature-based attacks generated
    taa: int = Field(ge=0)  # anomaly-based attacks generated
    msa: int = Field(default=0, ge=0)
    maa: int = Field(default=0, ge=0)
    tga: int = Field(ge=0)

    @model_validator(mode="after")
    def _bounds(self):
        if self.msa > self.tsa or self.maa > self.taa:
            raise ValueError("cannot miss more attacks than were generated")
        if self.tga != self.tsa + self.taa:
            raise ValueError("tga must equal tsa + taa")
        return self


# ─── Closed-form metrics ───

def precision(c: ConfusionCounts) -> float:
    if c.tp + c.fp == 0:
        raise UndefinedMetric("precision needs at least one alarm (tp + fp > 0)")
    return c.tp / (c.tp + c.fp)


def overall_probability(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise UndefinedMetric("overall probability of an empty count set")
    return (c.tp + c.tn) / c.total


def capturing_capability(c: CaptureCounts) -> float:
    """Percentage of generated attacks that were captured."""
    if c.tga == 0:
        raise UndefinedMetric("no attacks were generated")
    return ((c.tsa + c.taa) - (c.msa + c.maa)) * 100 / c.tga


class STVerdict(str, enum.Enum):
    NO_ATTACK = "NoAttack"
    ATTACK = "Attack"
    BOUNDARY = "Boundary"


class STResult(NamedTuple):
    ratio: Fraction
    verdict: STVerdict

    @property
    def value(self) -> float:
        return float(self.ratio)


def _is_odd_prime(n: int) -> bool:
    if n < 3 or n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _check_strict(tn: Number, fn: Number) -> None:
    if Fraction(tn).denominator != 1 or Fraction(fn).denominator != 1:
        raise StrictModeViolation("strict mode takes whole counts")
    tn, fn = int(tn), int(fn)
    if not (1 < fn < tn):
        raise StrictModeViolation(f"strict mode needs 1 < fn < tn, got fn={fn}, tn={tn}")
    if fn % 2:
        raise StrictModeViolation(f"strict mode needs an even fn, got {fn}")
    if not _is_odd_prime(tn):
        raise StrictModeViolation(f"strict mode needs tn to be an odd prime, got {tn}")


def st_metric(tn: Number, fn: Number, d: Number = 1, b: Number = 1, strict: bool = False) -> STResult:
    """ST = (tn / (tn + d)) / (fn / (fn + b)), exact. Above 1 reads as no attack, below 1 as attack."""
    if tn <= 0 or fn <= 0:
        raise DomainError(f"tn and fn must be positive, got tn={tn}, fn={fn}")
    if d < 0 or b < 0:
        raise DomainError(f"offsets must be non-negative, got d={d}, b={b}")
    if strict:
        _check_strict(tn, fn)
    tn, fn, d, b = Fraction(tn), Fraction(fn), Fraction(d), Fraction(b)
    ratio = (tn / (tn + d)) / (fn / (fn + b))
    if ratio > 1:
        verdict = STVerdict.NO_ATTACK
    elif ratio < 1:
        verdict = STVerdict.ATTACK
    else:
        verdict = STVerdict.BOUNDARY
    return STResult(ratio, verdict)


def identity_checks(c: ConfusionCounts) -> Dict[str, bool]:
    """Algebraic identities behind the four-outcome derivation, evaluated exactly."""
    tp, fn, fp, tn = (Fraction(v) for v in (c.tp, c.fn, c.fp, c.tn))
    checks = {
        "tp_expansion": tp * (tp + fp) == tp ** 2 + tp * fp,
        "total_is_sum": Fraction(c.total) == tp + fn + fp + tn,
        "regrouping": (tp + fp) + (fn + tn) == (tp + fn) + (fp + tn),
        "fn_cancels": (tp + fn) - fn == tp and fn - fn == 0,
        "fp_cancels": (tn + fp) - fp == tn and fp - fp == 0,
    }
    if tp + fp:
        checks["precision_inverse"] = Fraction(c.tp, c.tp + c.fp) * (tp + fp) == tp
    if c.total:
        checks["op_inverse"] = Fraction(c.tp + c.tn, c.total) * c.total == tp + tn
    if tp + fn:
        checks["attack_split"] = tp / (tp + fn) + fn / (tp + fn) == 1
    if fp + tn:
        checks["benign_split"] = fp / (fp + tn) + tn / (fp + tn) == 1
    return checks


# ─── Tally ───

class CategoryCount(BaseModel):
    family: str        # "signature" (per event) or "anomaly" (per window)
    category: str
    generated: int
    captured: int


class TallyResult(BaseModel):
    windows: ConfusionCounts
    events: ConfusionCounts
    capture: CaptureCounts
    per_category: List[CategoryCount] = Field(default_factory=list)
    cells: List[OutcomeCell] = Field(default_factory=list)
    events_total: int = 0


def _counts(frame: pd.DataFrame) -> ConfusionCounts:
    attack, alarm = frame["is_attack"], frame["alarm"]
    return ConfusionCounts(
        tp=int((attack & alarm).sum()),
        fn=int((attack & ~alarm).sum()),
        fp=int((~attack & alarm).sum()),
        tn=int((~attack & ~alarm).sum()),
    )


def _join(units: pd.DataFrame, alerted_ids: Iterable[int], what: str) -> pd.DataFrame:
    """Left-join truth units with the set of alerted ids; alerted ids outside the truth raise TruthMismatch."""
    alerted = pd.DataFrame({"id": pd.Series(sorted(set(alerted_ids)), dtype="int64")})
    orphan = alerted.merge(units[["id"]], on="id", how="left", indicator=True)
    missing = orphan.loc[orphan["_merge"] == "left_only", "id"].tolist()
    if missing:
        raise TruthMismatch(f"alerts reference {what} ids absent from the truth file: {missing[:10]}")
    joined = units.merge(alerted, on="id", how="left", indicator=True)
    joined["alarm"] = joined["_merge"] == "both"
    return joined.drop(columns="_merge")


def _truth_frame(truth: Sequence[GroundTruthRecord]) -> pd.DataFrame:
    frame = pd.DataFrame(
        [r.model_dump(mode="json") for r in truth],
        columns=["unit", "id", "is_attack", "attack_class", "category", "expected_layer"],
    )
    return frame.astype({"id": "int64", "is_attack": bool})


def tally(alerts: Sequence[Alert], truth: Sequence[GroundTruthRecord]) -> TallyResult:
    frame = _truth_frame(truth)
    windows = frame[frame["unit"] == TruthUnit.WINDOW.value].reset_index(drop=True)
    events = frame[frame["unit"] == TruthUnit.EVENT.value].reset_index(drop=True)

    window_alarms = _join(windows, (a.window_index for a in alerts if a.window_index is not None), "window")
    event_alarms = _join(events, (a.event_id for a in alerts if a.event_id is not None), "event")

    # Attacks the anomaly layer is meant to catch are judged per window, not per event
    judged = event_alarms[~event_alarms["is_attack"] | event_alarms["expected_layer"].isin(EVENT_LAYERS)]

    sig_attacks = judged[judged["is_attack"]]
    win_attacks = window_alarms[window_alarms["is_attack"]]
    capture = CaptureCounts(
        tsa=len(sig_attacks),
        taa=len(win_attacks),
        msa=int((~sig_attacks["alarm"]).sum()),
        maa=int((~win_attacks["alarm"]).sum()),
        tga=len(sig_attacks) + len(win_attacks),
    )

    per_category: List[CategoryCount] = []
    for family, attacks in (("signature", sig_attacks), ("anomaly", win_attacks)):
        if attacks.empty:
            continue
        grouped = attacks.groupby("category").agg(generated=("id", "size"), captured=("alarm", "sum"))
        for category, row in grouped.sort_index().iterrows():
            per_category.append(CategoryCount(family=family, category=str(category),
                                              generated=int(row["generated"]), captured=int(row["captured"])))

    cells = [
        OutcomeCell(outcome=classify_outcome(bool(alarm), bool(attack)), window_index=int(wid))
        for wid, attack, alarm in zip(window_alarms["id"], window_alarms["is_attack"], window_alarms["alarm"])
    ]

    result = TallyResult(
        windows=_counts(window_alarms),
        events=_counts(judged),
        capture=capture,
        per_category=per_category,
        cells=cells,
        events_total=len(events),
    )
    logger.info(f"Tallied {len(alerts)} alerts against {len(windows)} windows and {len(events)} events")
    return result
