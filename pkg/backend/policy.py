# backend/policy.py - Detection policy: defaults, thresholds and the policy-file loader
import json
import logging
import os
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from errors import BadPattern, DuplicateFingerprint, DuplicateRuleId, PolicyInvariantError, PolicyParseError
from signature_engine import RuleDatabase, SignatureRule, compile_rules, load_rules
from verifier import FingerprintSet, ServerFingerprint, load_fingerprints

logger = logging.getLogger("pipeline")

# ─── Anomaly layer defaults ───
DEFAULT_ALPHA = 0.2            # EWMA smoothing factor
DEFAULT_K = 1.0                # alarm when a volume metric exceeds (1 + k) x baseline mean
DEFAULT_WARMUP_WINDOWS = 20    # windows that only train the baseline
DEFAULT_WINDOW_SECS = 1.0

# ─── Per-class heuristic thresholds ───
DEFAULT_UNACKED_THRESH = 0.5   # DOS: share of flows never acknowledged
DEFAULT_DELTA_THRESH = 256.0   # Probe: growth of mean payload over baseline, bytes
DEFAULT_DUR_THRESH = 300.0     # U2R: longest connection, seconds
DEFAULT_LOGIN_THRESH = 5       # R2L: failed logins alongside a remote service

# ─── DHCP verifier ───
DEFAULT_STARVATION_WINDOW_SECS = 10.0
DEFAULT_POOL_SIZE = 50

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
DEFAULT_RULES_PATH = os.path.join(DATA_DIR, "default_rules.jsonl")


class AnomalyConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(default=DEFAULT_ALPHA, gt=0, le=1)
    k: float = Field(default=DEFAULT_K, gt=0)
    warmup_windows: int = Field(default=DEFAULT_WARMUP_WINDOWS, ge=0)
    window_secs: float = Field(default=DEFAULT_WINDOW_SECS, gt=0)
    unacked_thresh: float = Field(default=DEFAULT_UNACKED_THRESH, ge=0, le=1)
    delta_thresh: float = Field(default=DEFAULT_DELTA_THRESH, ge=0)
    dur_thresh: float = Field(default=DEFAULT_DUR_THRESH, ge=0)
    login_thresh: int = Field(default=DEFAULT_LOGIN_THRESH, ge=1)


class VerifierConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    strict_mac: bool = False
    starvation_window_secs: float = Field(default=DEFAULT_STARVATION_WINDOW_SECS, gt=0)
    pool_size: int = Field(default=DEFAULT_POOL_SIZE, ge=1)
    min_distinct_macs: Optional[int] = Field(default=None, ge=1)  # None means pool_size


class DetectionPolicy(BaseModel):
    """Everything the detecting server needs: whitelist, rules, thresholds, and a version."""
    model_config = ConfigDict(frozen=True)

    version: int = Field(default=1, ge=1)
    fingerprints: Tuple[ServerFingerprint, ...] = ()
    rules: Tuple[SignatureRule, ...] = ()
    anomaly: AnomalyConfig = Field(default_factory=AnomalyConfig)
    verifier: VerifierConfig = Field(default_factory=VerifierConfig)

    def fingerprint_set(self) -> FingerprintSet:
        return FingerprintSet(self.fingerprints)

    def rule_database(self) -> RuleDatabase:
        return compile_rules(self.rules)


def _resolve(base_dir: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def _read_document(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise PolicyParseError(f"cannot read policy {path}: {e}")
    if not text.strip():
        raise PolicyParseError(f"policy {path} is empty")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise PolicyParseError(f"policy {path} is not JSON: {e}")
    if not isinstance(doc, dict):
        raise PolicyParseError(f"policy {path} must be a JSON object")
    return doc


def _rule_source(doc: Dict[str, Any], base_dir: str, rules_path: Optional[str]) -> List[Any]:
    try:
        if rules_path:
            return load_rules(rules_path)
        if "rules" in doc:
            return list(doc["rules"] or [])
        return load_rules(_resolve(base_dir, doc.get("rules_file") or DEFAULT_RULES_PATH))
    except OSError as e:
        raise PolicyParseError(f"cannot read rule file: {e}")
    except BadPattern as e:
        raise PolicyInvariantError(str(e))


def _fingerprint_source(doc: Dict[str, Any], base_dir: str, fingerprints_path: Optional[str]) -> List[Any]:
    if fingerprints_path:
        return load_fingerprints(fingerprints_path)
    if "fingerprints" in doc:
        return list(doc["fingerprints"] or [])
    if doc.get("fingerprints_file"):
        return load_fingerprints(_resolve(base_dir, doc["fingerprints_file"]))
    return []


def load_policy(path: str, rules_path: Optional[str] = None,
                fingerprints_path: Optional[str] = None) -> DetectionPolicy:
    """Parse and validate a policy document; the returned policy's rules are known to compile."""
    doc = _read_document(path)
    base_dir = os.path.dirname(os.path.abspath(path))

    raw = {
        "version": doc.get("version", 1),
        "fingerprints": _fingerprint_source(doc, base_dir, fingerprints_path),
        "rules": _rule_source(doc, base_dir, rules_path),
        "anomaly": doc.get("anomaly") or {},
        "verifier": doc.get("verifier") or {},
    }
    try:
        policy = DetectionPolicy.model_validate(raw)
        policy.fingerprint_set()
        policy.rule_database()
    except ValidationError as e:
        raise PolicyInvariantError(f"policy {path}: {e}")
    except (DuplicateFingerprint, DuplicateRuleId, BadPattern) as e:
        raise PolicyInvariantError(f"policy {path}: {e}")

    logger.info(f"Loaded policy v{policy.version} from {path}: "
                f"{len(policy.rules)} rules, {len(policy.fingerprints)} authorised servers")
    return policy
