# backend/pipeline.py - Detecting server: verifier → signatures → anomaly, in short-circuit order
import logging
import math
from collections import deque
from typing import Deque, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from anomaly_engine import (
    CLASS_SEVERITY, AdaptiveBaseline, classify_alarm_class, compute_window_metrics, pick_detect, skip_empty_windows,
    update_baseline,
)
from dhcp_codec import DhcpMessage, MsgType
from errors import MalformedPacket, OutOfOrderEvent, PolicyInvariantError, StaleVersion
from policy import DetectionPolicy
from schemas import Alert, AttackClass, Diagnostic, EventKind, Layer, NetworkEvent
from signature_engine import match_event, summarize_matches
from verifier import (
    CLIENT_LEASE_TYPES, LeasePoolModel, ServerVerdict, classify_server_message, detect_gateway_rewrite,
    detect_offer_race, detect_starvation, race_key,
)

logger = logging.getLogger("pipeline")

ROGUE_SEVERITY = 5
STARVATION_SEVERITY = 4
RACE_TTL_SECS = 10.0  # offer groups idle this long are dropped


def update_policy(current: DetectionPolicy, new: DetectionPolicy) -> DetectionPolicy:
    if new.version <= current.version:
        raise StaleVersion(f"policy v{new.version} does not supersede v{current.version}")
    # Window indices are counted in units of window_secs for the whole stream
    if new.anomaly.window_secs != current.anomaly.window_secs:
        raise PolicyInvariantError(f"policy v{new.version} changes window_secs "
                                   f"({current.anomaly.window_secs} -> {new.anomaly.window_secs})")
    return new


class DetectingServer:
    """Owns the stream state. Feed events in order, then call finish()."""

    def __init__(self, policy: DetectionPolicy):
        self.policy = policy
        self.policy_history: List[DetectionPolicy] = [policy]
        self._fingerprints = policy.fingerprint_set()
        self._rules = policy.rule_database()
        self.baseline = AdaptiveBaseline.from_config(policy.anomaly)

        self.alerts: List[Alert] = []
        self.diagnostics: List[Diagnostic] = []

        self._window_index: Optional[int] = None
        self._window_events: List[NetworkEvent] = []
        self._last_ts: Optional[float] = None
        self._last_event_id: Optional[int] = None

        self._lease_requests: Deque[Tuple[float, DhcpMessage]] = deque()
        self._pool = LeasePoolModel(policy.verifier.pool_size)
        self._races: Dict[Hashable, List[Tuple[float, DhcpMessage]]] = {}
        self._reported_races = set()

    @property
    def window_secs(self) -> float:
        return self.policy.anomaly.window_secs

    # ─── Policy ───

    def apply_policy(self, new: DetectionPolicy) -> None:
        """Swap in a newer policy between events. The learned baseline is kept."""
        accepted = update_policy(self.policy, new)
        fingerprints = accepted.fingerprint_set()
        rules = accepted.rule_database()

        self.policy, self._fingerprints, self._rules = accepted, fingerprints, rules
        self.policy_history.append(accepted)
        self.baseline = self.baseline.model_copy(update={
            "alpha": accepted.anomaly.alpha,
            "k": accepted.anomaly.k,
            "warmup_windows": accepted.anomaly.warmup_windows,
        })
        self._pool = LeasePoolModel(accepted.verifier.pool_size)
        self.diagnostics.append(Diagnostic(
            kind="policy_update",
            event_id=self._last_event_id,
            detail={"version": accepted.version, "rules": len(rules)},
        ))
        logger.info(f"Policy v{accepted.version} active ({len(rules)} rules, {len(fingerprints)} authorised servers)")

    # ─── Alerts ───

    def _emit(self, layer: Layer, attack_class: AttackClass, severity: int, timestamp: float,
              evidence: Dict, event_id: Optional[int] = None, window_index: Optional[int] = None) -> Alert:
        alert = Alert(
            alert_id=len(self.alerts) + 1,
            event_id=event_id,
            window_index=window_index,
            timestamp=timestamp,
            layer=layer,
            attack_class=attack_class,
            severity=severity,
            evidence=evidence,
            policy_version=self.policy.version,
        )
        self.alerts.append(alert)
        return alert

    # ─── Event path ───

    def _check_order(self, ev: NetworkEvent) -> None:
        if self._last_ts is not None and ev.timestamp < self._last_ts:
            raise OutOfOrderEvent(f"event {ev.event_id} at t={ev.timestamp} precedes t={self._last_ts}")
        if self._last_event_id is not None and ev.event_id <= self._last_event_id:
            raise OutOfOrderEvent(f"event id {ev.event_id} does not follow {self._last_event_id}")

    def _advance_windows(self, ts: float) -> None:
        index = math.floor(ts / self.window_secs)
        if self._window_index is None:
            self._window_index = index
        if self._window_index < index:
            self.close_window()
        gap = index - self._window_index
        if gap > 0:
            self.baseline = skip_empty_windows(self.baseline, gap)
            logger.debug(f"Windows {self._window_index}-{index - 1}: empty")
            self._window_index = index
            self._expire_races()

    def process_event(self, ev: NetworkEvent) -> Optional[Alert]:
        self._check_order(ev)
        self._advance_windows(ev.timestamp)
        self._last_ts, self._last_event_id = ev.timestamp, ev.event_id

        if ev.kind == EventKind.DHCP:
            alert = self._verify_dhcp(ev)
            if alert is not None:
                return alert

        matches = match_event(self._rules, ev)
        if matches:
            attack_class, severity, evidence = summarize_matches(self._rules, matches)
            return self._emit(Layer.SIGNATURE, attack_class, severity, ev.timestamp, evidence, event_id=ev.event_id)

        self._window_events.append(ev)
        return None

    def _verify_dhcp(self, ev: NetworkEvent) -> Optional[Alert]:
        try:
            msg = ev.dhcp_message()
        except MalformedPacket as e:
            logger.warning(f"Event {ev.event_id}: undecodable DHCP payload ({e})")
            self.diagnostics.append(Diagnostic(kind="malformed_dhcp", event_id=ev.event_id, detail={"error": str(e)}))
            return None
        if msg is None:
            return None

        if msg.is_server_message:
            if msg.msg_type == MsgType.OFFER:
                self._track_race(ev, msg)
            verdict = classify_server_message(msg, self._fingerprints,
                                              strict_mac=self.policy.verifier.strict_mac, src_mac=ev.src_mac)
            if verdict == ServerVerdict.ROGUE:
                rewrite = detect_gateway_rewrite(msg, self._fingerprints)
                evidence = {
                    "msg_type": msg.msg_type.value,
                    "xid": msg.xid,
                    "server_id": str(msg.server_id) if msg.server_id else None,
                    "gateway": str(msg.gateway) if msg.gateway else None,
                    "gateway_rewrite": rewrite,
                }
                attack_class = AttackClass.GATEWAY_REWRITE if rewrite else AttackClass.ROGUE_DHCP
                return self._emit(Layer.DHCP_VERIFIER, attack_class, ROGUE_SEVERITY, ev.timestamp, evidence,
                                  event_id=ev.event_id)
            return None

        if msg.msg_type in CLIENT_LEASE_TYPES:
            return self._check_starvation(ev, msg)
        return None

    def _check_starvation(self, ev: NetworkEvent, msg: DhcpMessage) -> Optional[Alert]:
        cfg = self.policy.verifier
        self._lease_requests.append((ev.timestamp, msg))
        while self._lease_requests and self._lease_requests[0][0] < ev.timestamp - cfg.starvation_window_secs:
            self._lease_requests.popleft()

        finding = detect_starvation(self._lease_requests, self._pool, cfg.min_distinct_macs)
        if finding is None:
            return None
        evidence = {"client_mac": msg.client_mac, **finding.model_dump()}
        return self._emit(Layer.DHCP_VERIFIER, AttackClass.STARVATION, STARVATION_SEVERITY, ev.timestamp, evidence,
                          event_id=ev.event_id)

    def _track_race(self, ev: NetworkEvent, msg: DhcpMessage) -> None:
        key = race_key(ev.timestamp, msg)
        group = self._races.setdefault(key, [])
        group.append((ev.timestamp, msg))
        if key in self._reported_races:
            return
        finding = detect_offer_race(group, self._fingerprints)
        if finding is not None:
            self._reported_races.add(key)
            self.diagnostics.append(Diagnostic(
                kind="offer_race",
                event_id=ev.event_id,
                detail={"xid": msg.xid, "client_mac": msg.client_mac, **finding.model_dump(mode="json")},
            ))

    def _expire_races(self) -> None:
        if self._last_ts is None:
            return
        horizon = self._last_ts - RACE_TTL_SECS
        for key in [k for k, group in self._races.items() if group[-1][0] < horizon]:
            del self._races[key]
            self._reported_races.discard(key)

    # ─── Window path ───

    def close_window(self) -> List[Alert]:
        """Evaluate the current window (possibly empty) and move on to the next one."""
        if self._window_index is None:
            return []
        index = self._window_index
        metrics = compute_window_metrics(self._window_events, index, self.window_secs, self.baseline)
        detection = pick_detect(self.baseline, metrics, self.policy.anomaly)

        emitted: List[Alert] = []
        if not self.baseline.warmed_up:
            if detection.alarm:
                self.diagnostics.append(Diagnostic(
                    kind="warmup_suppressed", window_index=index, detail={"triggers": detection.evidence},
                ))
            self.baseline = update_baseline(self.baseline, metrics)
        elif detection.alarm:
            attack_class = classify_alarm_class(detection.evidence)
            emitted.append(self._emit(
                Layer.ANOMALY, attack_class, CLASS_SEVERITY[attack_class], index * self.window_secs,
                {"triggers": detection.evidence, "metrics": metrics.model_dump(exclude={"window_index"})},
                window_index=index,
            ))
        else:
            self.baseline = update_baseline(self.baseline, metrics)

        logger.debug(f"Window {index}: {len(self._window_events)} events, alarm={detection.alarm} {detection.evidence}")
        self._window_events = []
        self._window_index = index + 1
        self._expire_races()
        return emitted

    def finish(self) -> List[Alert]:
        """Close the last open window. The server accepts no further events afterwards."""
        emitted = self.close_window()
        self._window_index = None
        return emitted


def detect_stream(events: Iterable[NetworkEvent], policy: DetectionPolicy,
                  policy_updates: Sequence[Tuple[int, DetectionPolicy]] = ()) -> DetectingServer:
    """Run a whole stream. Each (event_id, policy) update is applied before the first event with id >= event_id."""
    server = DetectingServer(policy)
    pending = sorted(policy_updates, key=lambda u: u[0])
    for ev in events:
        while pending and ev.event_id >= pending[0][0]:
            server.apply_policy(pending.pop(0)[1])
        server.process_event(ev)
    server.finish()
    for event_id, _ in pending:
        logger.warning(f"Policy update at event {event_id} never applied: stream ended first")
    logger.info(f"Processed stream: {len(server.alerts)} alerts, {len(server.diagnostics)} diagnostics")
    return server
