# backend/database.py - Alert archive: detection runs, the policies they used, and their alerts
import logging
from typing import Dict, List, Optional, Sequence

from sqlalchemy import JSON, Column, Float, ForeignKey, Integer, String, create_engine
from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import declarative_base, relationship, sessionmaker

from errors import ArchiveError, UsageError
from policy import DetectionPolicy
from schemas import Alert

logger = logging.getLogger("archive")

Base = declarative_base()

_sessions: Dict[str, sessionmaker] = {}


# --- Database Models ---

class DetectionRun(Base):
    __tablename__ = "detection_runs"
    id = Column(Integer, primary_key=True, index=True)
    label = Column(String, nullable=True)
    alert_count = Column(Integer, default=0)

    policies = relationship("PolicyRecord", back_populates="run", cascade="all, delete-orphan")
    alerts = relationship("AlertRecord", back_populates="run", cascade="all, delete-orphan",
                          order_by="AlertRecord.alert_id")


class PolicyRecord(Base):
    __tablename__ = "policy_records"
    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("detection_runs.id"), index=True)
    version = Column(Integer)
    document = Column(JSON)

    run = relationship("DetectionRun", back_populates="policies")


class AlertRecord(Base):
    __tablename__ = "alert_records"
    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("detection_runs.id"), index=True)
    alert_id = Column(Integer)
    event_id = Column(Integer, nullable=True)
    window_index = Column(Integer, nullable=True)
    timestamp = Column(Float)
    layer = Column(String, index=True)
    attack_class = Column(String, index=True)
    severity = Column(Integer)
    evidence = Column(JSON, default=dict)
    policy_version = Column(Integer)

    run = relationship("DetectionRun", back_populates="alerts")


def get_session_factory(url: str) -> sessionmaker:
    """One engine per URL; tables are created on first use."""
    if url not in _sessions:
        connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {}
        try:
            engine = create_engine(url, connect_args=connect_args)
            Base.metadata.create_all(bind=engine)
        except SQLAlchemyError as e:
            raise ArchiveError(f"cannot open archive {url}: {e}")
        _sessions[url] = sessionmaker(autocommit=False, autoflush=False, bind=engine)
    return _sessions[url]


def archive_run(url: str, alerts: Sequence[Alert], policies: Sequence[DetectionPolicy],
                label: Optional[str] = None) -> int:
    """Persist one detect run and return its run id."""
    db = get_session_factory(url)()
    try:
        run = DetectionRun(label=label, alert_count=len(alerts))
        run.policies = [
            PolicyRecord(version=p.version, document=p.model_dump(mode="json")) for p in policies
        ]
        run.alerts = [
            AlertRecord(
                alert_id=a.alert_id, event_id=a.event_id, window_index=a.window_index,
                timestamp=a.timestamp, layer=a.layer.value, attack_class=a.attack_class.value,
                severity=a.severity, evidence=a.evidence, policy_version=a.policy_version,
            )
            for a in alerts
        ]
        db.add(run)
        db.commit()
        logger.info(f"Archived run {run.id}: {len(alerts)} alerts, {len(policies)} policy versions")
        return run.id
    except SQLAlchemyError as e:
        db.rollback()
        raise ArchiveError(f"archiving run failed: {e}")
    finally:
        db.close()


def load_run_alerts(url: str, run_id: int) -> List[Alert]:
    db = get_session_factory(url)()
    try:
        run = db.get(DetectionRun, run_id)
        if run is None:
            raise UsageError(f"archive {url} has no run {run_id}")
        return [
            Alert(
                alert_id=r.alert_id, event_id=r.event_id, window_index=r.window_index,
                timestamp=r.timestamp, layer=r.layer, attack_class=r.attack_class,
                severity=r.severity, evidence=r.evidence or {}, policy_version=r.policy_version,
            )
            for r in run.alerts
        ]
    except SQLAlchemyError as e:
        raise ArchiveError(f"reading run {run_id} failed: {e}")
    finally:
        db.close()


def list_runs(url: str) -> List[Dict]:
    db = get_session_factory(url)()
    try:
        runs = db.query(DetectionRun).order_by(DetectionRun.id).all()
        return [
            {"id": r.id, "label": r.label, "alert_count": r.alert_count,
             "policy_versions": sorted(p.version for p in r.policies)}
            for r in runs
        ]
    except SQLAlchemyError as e:
        raise ArchiveError(f"listing runs failed: {e}")
    finally:
        db.close()
