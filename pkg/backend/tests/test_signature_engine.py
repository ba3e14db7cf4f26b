import pytest
from pydantic import ValidationError

from errors import BadPattern, DuplicateRuleId
from policy import DEFAULT_RULES_PATH
from schemas import AttackClass, EventKind, NetworkEvent
from signature_engine import Matcher, SignatureRule, compile_rules, load_rules, match_event, select_field, \
    summarize_matches


def app_log(fields, event_id=1, **kw) -> NetworkEvent:
    return NetworkEvent(event_id=event_id, timestamp=1.0, kind=EventKind.APP_LOG, fields=fields, **kw)


def rule(rule_id, selector="fields.service", matcher=Matcher.EQUALS, pattern="telnet",
         attack_class=AttackClass.R2L, severity=3, **kw) -> SignatureRule:
    return SignatureRule(rule_id=rule_id, field_selector=selector, matcher=matcher, pattern=pattern,
                         attack_class=attack_class, severity=severity, **kw)


@pytest.fixture(scope="module")
def builtin():
    return compile_rules(load_rules(DEFAULT_RULES_PATH))


class TestBuiltinRules:

    def test_three_rules(self, builtin):
        assert builtin.rule_ids == ["R1", "R2", "R3"]

    @pytest.mark.parametrize("fields, expected", [
        ({"service": "telnet", "username": "root"}, [("R1", AttackClass.POLICY_VIOLATION)]),
        ({"status_code": "645"}, [("R2", AttackClass.U2R)]),
        ({"attachment_name": "freepics.exe"}, [("R3", AttackClass.MALWARE)]),
        ({"status_code": "403"}, []),
        ({"service": "ssh", "username": "root"}, []),
        ({"service": "telnet", "username": "alice"}, []),
    ])
    def test_exemplars(self, builtin, fields, expected):
        assert match_event(builtin, app_log(fields)) == expected

    def test_matching_is_repeatable(self, builtin):
        ev = app_log({"status_code": "645"})
        assert match_event(builtin, ev) == match_event(builtin, ev)


class TestCompile:

    def test_empty_database(self):
        db = compile_rules([])
        assert len(db) == 0
        assert match_event(db, app_log({"service": "telnet"})) == []

    def test_duplicate_rule_id(self):
        with pytest.raises(DuplicateRuleId):
            compile_rules([rule("R1"), rule("R1", pattern="ftp")])

    @pytest.mark.parametrize("kw", [
        {"selector": "nonsense"},
        {"selector": "fields."},
        {"pattern": ""},
        {"matcher": Matcher.REGEX, "pattern": "(unclosed"},
    ])
    def test_bad_pattern(self, kw):
        with pytest.raises(BadPattern):
            compile_rules([rule("R1", **kw)])

    def test_non_signature_class_rejected(self):
        with pytest.raises(ValidationError):
            rule("R1", attack_class=AttackClass.ROGUE_DHCP)

    def test_order_independent(self):
        rules = [rule("B", pattern="telnet"), rule("A", matcher=Matcher.CONTAINS, pattern="tel")]
        ev = app_log({"service": "telnet"})
        assert match_event(compile_rules(rules), ev) == match_event(compile_rules(reversed(rules)), ev)
        assert [r for r, _ in match_event(compile_rules(rules), ev)] == ["A", "B"]

    def test_adding_a_rule_keeps_matches(self):
        ev = app_log({"service": "telnet"})
        before = match_event(compile_rules([rule("R1")]), ev)
        after = match_event(compile_rules([rule("R1"), rule("R9", pattern="ftp")]), ev)
        assert set(before) <= set(after)


class TestMatchers:

    def test_contains(self):
        db = compile_rules([rule("R1", selector="fields.path", matcher=Matcher.CONTAINS, pattern="/etc/passwd")])
        assert match_event(db, app_log({"path": "/../../etc/passwd"})) == [("R1", AttackClass.R2L)]

    def test_regex(self):
        db = compile_rules([rule("R1", selector="fields.query", matcher=Matcher.REGEX, pattern=r"union\s+select")])
        assert match_event(db, app_log({"query": "1 union   select pw"}))
        assert not match_event(db, app_log({"query": "select 1"}))

    def test_event_selectors(self):
        ev = NetworkEvent(event_id=1, timestamp=0.0, kind=EventKind.TCP, src="10.0.0.66", acked=False,
                          duration=2.5, payload_bytes=40)
        assert select_field(ev, "kind") == "Tcp"
        assert select_field(ev, "acked") == "false"
        assert select_field(ev, "duration") == "2.5"
        assert select_field(ev, "payload_bytes") == "40"
        assert select_field(ev, "src") == "10.0.0.66"
        assert select_field(ev, "dst") is None
        assert select_field(ev, "fields.user") is None

    @pytest.mark.parametrize("duration, text", [(1234567.0, "1234567"), (3600.125, "3600.125"), (0.0, "0")])
    def test_duration_keeps_every_digit(self, duration, text):
        ev = NetworkEvent(event_id=1, timestamp=0.0, kind=EventKind.TCP, duration=duration)
        assert select_field(ev, "duration") == text
        db = compile_rules([rule("R1", selector="duration", pattern=text)])
        assert match_event(db, ev) == [("R1", AttackClass.R2L)]

    def test_missing_field_never_matches(self):
        db = compile_rules([rule("R1", selector="dst", matcher=Matcher.REGEX, pattern=".*")])
        assert match_event(db, app_log({})) == []

    def test_all_conditions_must_hold(self, builtin):
        assert builtin.get("R1").also
        assert match_event(builtin, app_log({"username": "root"})) == []


def test_summarize_matches():
    db = compile_rules([
        rule("R5", severity=2, attack_class=AttackClass.R2L),
        rule("R7", matcher=Matcher.CONTAINS, pattern="tel", severity=4, attack_class=AttackClass.POLICY_VIOLATION),
    ])
    matches = match_event(db, app_log({"service": "telnet"}))
    attack_class, severity, evidence = summarize_matches(db, matches)
    assert attack_class == AttackClass.R2L
    assert severity == 4
    assert [r["rule_id"] for r in evidence["rules"]] == ["R5", "R7"]


def test_load_rules_bad_line(tmp_path):
    path = tmp_path / "rules.jsonl"
    path.write_text('{"rule_id": "R1"}\n')
    with pytest.raises(BadPattern):
        load_rules(str(path))
