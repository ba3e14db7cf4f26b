# backend/export_engine.py - JSON-lines and CSV export for events, truth, alerts and diagnostics
import csv
import io
import json
import logging
from typing import Iterable, Iterator, List, Type, TypeVar

from pydantic import BaseModel, ValidationError

from errors import IdsError, MalformedEventFile
from schemas import Alert

logger = logging.getLogger("report")

M = TypeVar("M", bound=BaseModel)


def dump_jsonl(records: Iterable[BaseModel]) -> str:
    """One compact JSON document per line, fields in declaration order, None fields omitted."""
    return "".join(r.model_dump_json(exclude_none=True) + "\n" for r in records)


def write_jsonl(path: str, records: Iterable[BaseModel]) -> int:
    text = dump_jsonl(records)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    return text.count("\n")


def iter_jsonl(path: str, model: Type[M], error: Type[IdsError] = MalformedEventFile) -> Iterator[M]:
    """Stream records from a JSON-lines file; any unreadable line raises `error`."""
    try:
        f = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise error(f"cannot open {path}: {e}")
    with f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            if not line.endswith("\n"):
                raise error(f"{path}:{lineno}: truncated final line")
            try:
                yield model.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValidationError) as e:
                raise error(f"{path}:{lineno}: {e}")


def read_jsonl(path: str, model: Type[M], error: Type[IdsError] = MalformedEventFile) -> List[M]:
    return list(iter_jsonl(path, model, error))


def _make_csv(rows: List[List]) -> bytes:
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    return output.getvalue().encode("utf-8")


def export_alerts_to_csv(alerts: Iterable[Alert], path: str) -> int:
    """Flat alert table; evidence is kept as a JSON string column."""
    rows: List[List] = [["alert_id", "event_id", "window_index", "timestamp", "layer",
                         "attack_class", "severity", "policy_version", "evidence"]]
    for a in alerts:
        rows.append([
            a.alert_id,
            "" if a.event_id is None else a.event_id,
            "" if a.window_index is None else a.window_index,
            f"{a.timestamp:.6f}",
            a.layer.value,
            a.attack_class.value,
            a.severity,
            a.policy_version,
            json.dumps(a.evidence, sort_keys=True),
        ])
    with open(path, "wb") as f:
        f.write(_make_csv(rows))
    logger.info(f"Exported {len(rows) - 1} alerts to {path}")
    return len(rows) - 1
