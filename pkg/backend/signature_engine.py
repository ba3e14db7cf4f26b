# backend/signature_engine.py - Middle layer: known-attack signatures over named event fields
import enum
import json
import logging
import re
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from errors import BadPattern, DuplicateRuleId
from schemas import SIGNATURE_CLASSES, AttackClass, NetworkEvent

logger = logging.getLogger("signatures")

FIELDS_PREFIX = "fields."
EVENT_SELECTORS = {"kind", "src", "dst", "src_mac", "payload_bytes", "acked", "duration"}


class Matcher(str, enum.Enum):
    EQUALS = "Equals"
    CONTAINS = "Contains"
    REGEX = "Regex"


class FieldCondition(BaseModel):
    model_config = ConfigDict(frozen=True)

    field_selector: str
    matcher: Matcher
    pattern: str


class SignatureRule(BaseModel):
    """One known-attack pattern. `also` holds extra conditions that must all hold."""
    model_config = ConfigDict(frozen=True)

    rule_id: str = Field(min_length=1)
    field_selector: str
    matcher: Matcher
    pattern: str
    attack_class: AttackClass
    severity: int = Field(ge=1, le=5)
    also: Tuple[FieldCondition, ...] = ()
    description: str = ""

    @field_validator("attack_class")
    @classmethod
    def _signature_class(cls, v: AttackClass) -> AttackClass:
        if v not in SIGNATURE_CLASSES:
            raise ValueError(f"{v.value} is not a signature attack class")
        return v

    def conditions(self) -> Tuple[FieldCondition, ...]:
        head = FieldCondition(field_selector=self.field_selector, matcher=self.matcher, pattern=self.pattern)
        return (head,) + self.also


# ─── Field access ───

def select_field(ev: NetworkEvent, selector: str) -> Optional[str]:
    """String view of one event field; None when the event does not carry it."""
    if selector.startswith(FIELDS_PREFIX):
        return ev.fields.get(selector[len(FIELDS_PREFIX):])
    if selector == "kind":
        return ev.kind.value
    if selector == "acked":
        return None if ev.acked is None else ("true" if ev.acked else "false")
    if selector == "payload_bytes":
        return str(ev.payload_bytes)
    if selector == "duration":
        return None if ev.duration is None else f"{ev.duration:.6f}".rstrip("0").rstrip(".")
    if selector in ("src", "dst", "src_mac"):
        return getattr(ev, selector)
    return None


def _check_selector(rule_id: str, selector: str) -> None:
    if selector.startswith(FIELDS_PREFIX):
        if len(selector) > len(FIELDS_PREFIX):
            return
    elif selector in EVENT_SELECTORS:
        return
    raise BadPattern(f"rule {rule_id}: unknown field selector {selector!r}")


def _compile_condition(rule_id: str, cond: FieldCondition) -> Callable[[NetworkEvent], bool]:
    _check_selector(rule_id, cond.field_selector)
    if not cond.pattern:
        raise BadPattern(f"rule {rule_id}: empty pattern")

    if cond.matcher == Matcher.REGEX:
        try:
            regex = re.compile(cond.pattern)
        except re.error as e:
            raise BadPattern(f"rule {rule_id}: regex {cond.pattern!r} does not compile: {e}")
        test = lambda value: regex.search(value) is not None
    elif cond.matcher == Matcher.CONTAINS:
        test = lambda value: cond.pattern in value
    else:
        test = lambda value: value == cond.pattern

    selector = cond.field_selector

    def check(ev: NetworkEvent) -> bool:
        value = select_field(ev, selector)
        return value is not None and test(value)

    return check


# ─── Rule database ───

class RuleDatabase:
    """Compiled, immutable rule set. Iteration order is rule_id order."""

    def __init__(self, compiled: Dict[str, Tuple[SignatureRule, Tuple[Callable, ...]]]):
        self._rules = tuple(compiled[rid] for rid in sorted(compiled))

    def __len__(self) -> int:
        return len(self._rules)

    def __iter__(self):
        return (rule for rule, _ in self._rules)

    @property
    def rule_ids(self) -> List[str]:
        return [rule.rule_id for rule, _ in self._rules]

    def get(self, rule_id: str) -> Optional[SignatureRule]:
        for rule, _ in self._rules:
            if rule.rule_id == rule_id:
                return rule
        return None

    def _match(self, ev: NetworkEvent) -> List[SignatureRule]:
        return [rule for rule, checks in self._rules if all(check(ev) for check in checks)]


def compile_rules(rules: Iterable[SignatureRule]) -> RuleDatabase:
    compiled: Dict[str, Tuple[SignatureRule, Tuple[Callable, ...]]] = {}
    for rule in rules:
        if rule.rule_id in compiled:
            raise DuplicateRuleId(f"rule_id {rule.rule_id} defined twice")
        compiled[rule.rule_id] = (rule, tuple(_compile_condition(rule.rule_id, c) for c in rule.conditions()))
    logger.debug(f"Compiled {len(compiled)} signature rules")
    return RuleDatabase(compiled)


def match_event(db: RuleDatabase, ev: NetworkEvent) -> List[Tuple[str, AttackClass]]:
    """Every matching rule as (rule_id, attack_class), in rule_id order. Empty means fall through."""
    return [(rule.rule_id, rule.attack_class) for rule in db._match(ev)]


def summarize_matches(db: RuleDatabase, matches: List[Tuple[str, AttackClass]]) -> Tuple[AttackClass, int, Dict]:
    """Alert fields for a non-empty match list: class of the lowest rule_id, highest severity, all rules as evidence."""
    rules = [db.get(rule_id) for rule_id, _ in matches]
    evidence = {
        "rules": [
            {"rule_id": r.rule_id, "attack_class": r.attack_class.value, "severity": r.severity}
            for r in rules
        ]
    }
    return rules[0].attack_class, max(r.severity for r in rules), evidence


def load_rules(path: str) -> List[SignatureRule]:
    """Read a JSON-lines rule file."""
    rules: List[SignatureRule] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rules.append(SignatureRule.model_validate(json.loads(line)))
            except (json.JSONDecodeError, ValidationError) as e:
                raise BadPattern(f"{path}:{lineno}: unreadable rule: {e}")
    logger.info(f"Loaded {len(rules)} signature rules from {path}")
    return rules
