# selftest: metric identities, worked values, codec vectors, built-in rule exemplars
import json
import logging
import os
from typing import Callable, List, Tuple

import numpy as np

from commands.state import EXIT_OK, RunConfig
from dhcp_codec import DhcpMessage, decode_hex, encode_hex
from errors import SelfTestFailure
from metrics import CaptureCounts, ConfusionCounts, STVerdict, capturing_capability, identity_checks, \
    overall_probability, precision, st_metric
from policy import DATA_DIR, DEFAULT_RULES_PATH
from schemas import EventKind, NetworkEvent
from signature_engine import compile_rules, load_rules, match_event

logger = logging.getLogger("selftest")

GOLDEN_PATH = os.path.join(DATA_DIR, "dhcp_golden.json")
IDENTITY_VECTORS = 1000
IDENTITY_SEED = 7
TOLERANCE = 1e-4


def register(subparsers) -> None:
    p = subparsers.add_parser("selftest", help="check metric identities, codec vectors and built-in rules")
    p.add_argument("--vectors", type=int, default=IDENTITY_VECTORS, help="random count vectors for identity checks")
    p.add_argument("--seed", type=int, default=IDENTITY_SEED, help="seed for the count vectors")
    p.set_defaults(handler=handle, inputs=lambda a: [GOLDEN_PATH, DEFAULT_RULES_PATH], outputs=lambda a: [])


def _close(actual: float, expected: float, tol: float = TOLERANCE) -> bool:
    return abs(actual - expected) <= tol


# ─── Checks ───

def check_identities(vectors: int, seed: int) -> List[str]:
    rng = np.random.Generator(np.random.PCG64(seed))
    failures = []
    for tp, fn, fp, tn in rng.integers(0, 100_000, size=(vectors, 4)):
        counts = ConfusionCounts(tp=int(tp), fn=int(fn), fp=int(fp), tn=int(tn))
        broken = [name for name, ok in identity_checks(counts).items() if not ok]
        if broken:
            failures.append(f"identities {broken} fail for {counts.model_dump()}")
    return failures


def check_worked_values() -> List[str]:
    failures = []

    st = st_metric(3, 2)
    if st.value != 1.125 or st.verdict != STVerdict.NO_ATTACK:
        failures.append(f"ST(3, 2) = {st.ratio} {st.verdict.value}, expected 9/8 NoAttack")
    if st_metric(5, 4).ratio.as_integer_ratio() != (25, 24):
        failures.append("ST(5, 4) is not 25/24")
    if st_metric(7, 7).verdict != STVerdict.BOUNDARY:
        failures.append("ST(7, 7) is not on the boundary")

    capture = CaptureCounts(tsa=42003, taa=45002, msa=2, maa=1, tga=87005)
    ea = capturing_capability(capture)
    if not _close(ea, 99.9966, 1e-3):
        failures.append(f"capturing capability {ea:.5f}, expected 99.9966")

    counts = ConfusionCounts(tp=18574, fp=9475, tn=4859, fn=12093)
    p, op = precision(counts), overall_probability(counts)
    if not _close(p, 0.66219):
        failures.append(f"precision {p:.5f}, expected 0.66219")
    if not _close(op, 0.52072):
        failures.append(f"overall probability {op:.5f}, expected 0.52072")
    return failures


def check_codec_vectors(path: str = GOLDEN_PATH) -> List[str]:
    with open(path, "r", encoding="utf-8") as f:
        vectors = json.load(f)["vectors"]
    failures = []
    for v in vectors:
        expected = DhcpMessage.model_validate(v["message"])
        if decode_hex(v["hex"]) != expected:
            failures.append(f"{v['name']}: decode differs from the stored message")
        if encode_hex(expected) != v["hex"]:
            failures.append(f"{v['name']}: encode differs from the stored bytes")
    return failures


# Built-in rule exemplars: three known attacks and a declined request that must fall through
EXEMPLAR_STREAM: Tuple[Tuple[dict, List[Tuple[str, str]]], ...] = (
    ({"service": "telnet", "username": "root"}, [("R1", "PolicyViolation")]),
    ({"status_code": "645"}, [("R2", "U2R")]),
    ({"attachment_name": "freepics.exe"}, [("R3", "Malware")]),
    ({"status_code": "403"}, []),
)


def check_rule_exemplars(path: str = DEFAULT_RULES_PATH) -> List[str]:
    db = compile_rules(load_rules(path))
    failures = []
    for event_id, (fields, expected) in enumerate(EXEMPLAR_STREAM, start=1):
        ev = NetworkEvent(event_id=event_id, timestamp=float(event_id), kind=EventKind.APP_LOG, fields=fields)
        got = [(rule_id, cls.value) for rule_id, cls in match_event(db, ev)]
        if got != expected:
            failures.append(f"event {fields}: matched {got}, expected {expected}")
    return failures


def handle(args, config: RunConfig) -> int:
    suites: List[Tuple[str, Callable[[], List[str]]]] = [
        ("identities", lambda: check_identities(args.vectors, args.seed)),
        ("worked values", check_worked_values),
        ("codec vectors", check_codec_vectors),
        ("rule exemplars", check_rule_exemplars),
    ]
    failures: List[str] = []
    for name, suite in suites:
        found = suite()
        logger.info(f"{name}: {'ok' if not found else f'{len(found)} failures'}")
        failures += found
    if failures:
        for f in failures[:20]:
            logger.error(f)
        raise SelfTestFailure(f"{len(failures)} self-test checks failed")
    logger.info("All self-test checks passed")
    return EXIT_OK
