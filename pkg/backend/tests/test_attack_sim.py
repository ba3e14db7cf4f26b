import json
import time
from collections import Counter

import pytest

from attack_sim import (
    AttackKind, AttackPhase, NetworkSettings, ScenarioSpec, TruthUnit, generate, load_scenario_spec, load_truth,
    replay, validate_spec, window_count, window_truth, write_scenario,
)
from dhcp_codec import MsgType
from errors import InvalidSpec, MalformedEventFile
from export_engine import dump_jsonl
from pipeline import detect_stream
from schemas import AttackClass, EventKind, Layer
from tests.conftest import DEMO_SPEC
from tests.helpers import ROGUE


def spec(attacks=(), seed=11, duration=60.0, **kw) -> ScenarioSpec:
    return ScenarioSpec(seed=seed, duration=duration, benign_rate=20.0, attacks=list(attacks), **kw)


def phase(kind, start, end, **kw) -> AttackPhase:
    return AttackPhase(kind=kind, start=start, end=end, **kw)


class TestValidation:

    def test_fractional_benign_count(self):
        with pytest.raises(InvalidSpec):
            validate_spec(ScenarioSpec(seed=1, duration=10, benign_rate=2.5))

    def test_phase_outside_duration(self):
        with pytest.raises(InvalidSpec):
            validate_spec(spec([phase(AttackKind.SMURF, 50, 70)]))

    def test_empty_phase(self):
        with pytest.raises(InvalidSpec):
            validate_spec(spec([phase(AttackKind.SMURF, 20, 20)]))

    def test_shared_server_id(self):
        net = NetworkSettings(rogue_server_id="10.0.0.1")
        with pytest.raises(InvalidSpec):
            validate_spec(spec(network=net))

    def test_window_count(self):
        assert window_count(ScenarioSpec(seed=1, duration=10.5, benign_rate=0)) == 11
        assert window_count(ScenarioSpec(seed=1, duration=10.0, benign_rate=0)) == 10

    def test_load_rejects_unknown_keys(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"seed": 1, "duration": 5, "benign_rate": 1, "colour": "red"}))
        with pytest.raises(InvalidSpec):
            load_scenario_spec(str(path))

    def test_load_missing(self, tmp_path):
        with pytest.raises(InvalidSpec):
            load_scenario_spec(str(tmp_path / "absent.json"))

    def test_demo_spec_is_valid(self):
        validate_spec(load_scenario_spec(DEMO_SPEC))


class TestGeneration:

    def test_same_seed_same_stream(self):
        s = spec([phase(AttackKind.ROGUE_RACE, 25, 35), phase(AttackKind.SYN_FLOOD, 40, 44)])
        (e1, t1), (e2, t2) = generate(s), generate(s)
        assert dump_jsonl(e1) == dump_jsonl(e2)
        assert dump_jsonl(t1) == dump_jsonl(t2)

    def test_seed_changes_stream(self):
        assert dump_jsonl(generate(spec(seed=1))[0]) != dump_jsonl(generate(spec(seed=2))[0])

    def test_exact_benign_count_per_window(self):
        events, _ = generate(spec(duration=10.0, network=NetworkSettings(dhcp_rate=0)))
        per_window = Counter(int(ev.timestamp) for ev in events)
        assert per_window == {w: 20 for w in range(10)}

    def test_ids_and_order(self):
        events, truth = generate(spec([phase(AttackKind.SMURF, 30, 32)]))
        assert [ev.event_id for ev in events] == list(range(1, len(events) + 1))
        assert all(a.timestamp <= b.timestamp for a, b in zip(events, events[1:]))
        assert [r.id for r in truth if r.unit == TruthUnit.EVENT] == [ev.event_id for ev in events]

    def test_window_truth(self):
        s = spec([phase(AttackKind.PROBE, 10.5, 12), phase(AttackKind.ROGUE_RACE, 20, 30)])
        windows = window_truth(s)
        assert len(windows) == 60
        assert [w.id for w in windows if w.is_attack] == [10, 11]
        assert windows[10].category == AttackClass.PROBE
        assert windows[10].expected_layer == Layer.ANOMALY

    def test_rogue_race_labels(self):
        events, truth = generate(spec([phase(AttackKind.ROGUE_RACE, 25, 35)]))
        labels = {r.id: r for r in truth if r.unit == TruthUnit.EVENT}
        rogue = [ev for ev in events if ev.kind == EventKind.DHCP and ev.dhcp_message().server_id == ROGUE]
        assert len(rogue) == 20  # an Offer and an Ack per transaction
        assert all(labels[ev.event_id].attack_class == AttackKind.ROGUE_RACE for ev in rogue)
        assert all(labels[ev.event_id].expected_layer == Layer.DHCP_VERIFIER for ev in rogue)

    def test_rogue_wins_the_race(self):
        events, _ = generate(spec([phase(AttackKind.ROGUE_RACE, 25, 30)]))
        offers = [(ev.timestamp, ev.dhcp_message()) for ev in events
                  if ev.kind == EventKind.DHCP and ev.dhcp_message().msg_type == MsgType.OFFER]
        rogue = [(ts, m) for ts, m in offers if m.server_id == ROGUE]
        assert len(rogue) == 5
        for ts, m in rogue:
            legit = [t for t, o in offers if o.xid == m.xid and o.server_id != ROGUE]
            assert legit and all(ts < t for t in legit)

    def test_gateway_rewrite_points_at_attacker(self):
        events, _ = generate(spec([phase(AttackKind.GATEWAY_REWRITE_SNIFF, 25, 30)]))
        rogue = [ev.dhcp_message() for ev in events
                 if ev.kind == EventKind.DHCP and ev.dhcp_message().server_id == ROGUE]
        assert rogue and all(str(m.gateway) == "10.0.0.66" for m in rogue)

    def test_starvation_macs(self):
        events, truth = generate(spec([phase(AttackKind.STARVATION, 10, 20, params={"macs": 60})]))
        labelled = {r.id for r in truth if r.unit == TruthUnit.EVENT and r.attack_class == AttackKind.STARVATION}
        discovers = [ev for ev in events if ev.event_id in labelled
                     and ev.dhcp_message().msg_type == MsgType.DISCOVER]
        assert len({ev.dhcp_message().client_mac for ev in discovers}) == 60

    def test_known_signature_trio(self):
        events, truth = generate(spec([phase(AttackKind.KNOWN_SIGNATURE, 5, 8)]))
        labelled = [r for r in truth if r.unit == TruthUnit.EVENT and r.is_attack]
        assert Counter(r.category for r in labelled) == {
            AttackClass.POLICY_VIOLATION: 3, AttackClass.U2R: 3, AttackClass.MALWARE: 3,
        }
        assert all(r.expected_layer == Layer.SIGNATURE for r in labelled)


class TestFiles:

    def test_write_and_replay(self, tmp_path):
        events, truth = generate(spec(duration=5.0))
        ev_path, truth_path = str(tmp_path / "events.jsonl"), str(tmp_path / "truth.jsonl")
        write_scenario(events, truth, ev_path, truth_path)
        assert list(replay(ev_path)) == events
        assert load_truth(truth_path) == truth

    def test_truncated_file(self, tmp_path):
        events, _ = generate(spec(duration=2.0))
        path = tmp_path / "events.jsonl"
        path.write_text(dump_jsonl(events).rstrip("\n"))
        with pytest.raises(MalformedEventFile):
            list(replay(str(path)))

    def test_garbage_line(self, tmp_path):
        path = tmp_path / "events.jsonl"
        path.write_text('{"event_id": 1, "timestamp": 0.1, "kind": "Tcp"}\n{oops\n')
        with pytest.raises(MalformedEventFile):
            list(replay(str(path)))


class TestDetectionOnScenarios:

    def test_benign_stream_raises_nothing(self, demo_policy):
        events, _ = generate(spec(duration=120.0))
        assert detect_stream(events, demo_policy).alerts == []

    def test_rogue_messages_are_all_flagged(self, demo_policy):
        s = spec([phase(AttackKind.ROGUE_RACE, 5, 30, params={"rate": 2.0}), phase(AttackKind.STARVATION, 35, 45)])
        events, _ = generate(s)
        server = detect_stream(events, demo_policy)
        flagged = {a.event_id for a in server.alerts if a.layer == Layer.DHCP_VERIFIER}
        server_messages = [(ev.event_id, ev.dhcp_message()) for ev in events if ev.kind == EventKind.DHCP
                           and ev.dhcp_message().is_server_message]
        assert server_messages
        for event_id, msg in server_messages:
            assert (event_id in flagged) == (msg.server_id == ROGUE)

    def test_hundred_thousand_events_in_five_seconds(self, demo_policy):
        s = ScenarioSpec(seed=3, duration=1000.0, benign_rate=100.0, attacks=[
            phase(AttackKind.ROGUE_RACE, 100, 400, params={"rate": 1.0}), phase(AttackKind.STARVATION, 500, 510),
        ])
        events, _ = generate(s)
        assert len(events) >= 100_000
        started = time.perf_counter()
        detect_stream(events, demo_policy)
        assert time.perf_counter() - started < 5.0

    @pytest.mark.parametrize("kind", [AttackKind.SYN_FLOOD, AttackKind.SMURF, AttackKind.DNS_FLOOD])
    def test_floods_are_caught(self, demo_policy, kind):
        s = spec([phase(kind, 30, 40)])
        events, truth = generate(s)
        alarmed = {a.window_index for a in detect_stream(events, demo_policy).alerts if a.layer == Layer.ANOMALY}
        attack_windows = [r.id for r in truth if r.unit == TruthUnit.WINDOW and r.is_attack]
        assert attack_windows == list(range(30, 40))
        assert min(alarmed) <= 31
        assert len(alarmed & set(attack_windows)) >= 0.95 * len(attack_windows)
