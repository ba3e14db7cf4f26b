# detect: events + policy -> alert log (and optional diagnostics, CSV, archive)
import logging
import os
from typing import List, Tuple

from attack_sim import replay
from commands.state import EXIT_OK, RunConfig
from database import archive_run
from errors import UsageError
from export_engine import export_alerts_to_csv, write_jsonl
from pipeline import detect_stream
from policy import DetectionPolicy, load_policy

logger = logging.getLogger("cli")


def _update_paths(args) -> List[str]:
    return [spec.split(":", 1)[1] for spec in args.policy_update if ":" in spec]


def register(subparsers) -> None:
    p = subparsers.add_parser("detect", help="run the three detection layers over an event stream")
    p.add_argument("--events", required=True, help="events input (JSON-lines)")
    p.add_argument("--policy", required=True, help="policy document (JSON)")
    p.add_argument("--out", required=True, help="alert log output (JSON-lines)")
    p.add_argument("--rules", default=None, help="signature rules (JSON-lines), overrides the policy's")
    p.add_argument("--fingerprints", default=None, help="authorised DHCP servers (JSON-lines), overrides the policy's")
    p.add_argument("--diagnostics", default=None, help="diagnostics output (JSON-lines)")
    p.add_argument("--archive", default=None, metavar="URL", help="also archive the run (SQLAlchemy URL)")
    p.add_argument("--policy-update", action="append", default=[], metavar="EVENT_ID:PATH",
                   help="swap in a newer policy before the given event id (repeatable)")
    p.add_argument("--csv", default=None, help="also export alerts as CSV")
    p.set_defaults(
        handler=handle,
        inputs=lambda a: [x for x in (a.events, a.rules, a.fingerprints) if x] + _update_paths(a),
        outputs=lambda a: [x for x in (a.out, a.diagnostics, a.csv) if x],
        policy_path=lambda a: a.policy,
    )


def parse_policy_updates(specs: List[str]) -> List[Tuple[int, DetectionPolicy]]:
    updates = []
    for spec in specs:
        event_id, sep, path = spec.partition(":")
        if not sep or not path or not event_id.isdigit():
            raise UsageError(f"--policy-update expects EVENT_ID:PATH, got {spec!r}")
        updates.append((int(event_id), load_policy(path)))
    return updates


def handle(args, config: RunConfig) -> int:
    policy = load_policy(args.policy, rules_path=args.rules, fingerprints_path=args.fingerprints)
    updates = parse_policy_updates(args.policy_update)

    server = detect_stream(replay(args.events), policy, updates)

    write_jsonl(args.out, server.alerts)
    if args.diagnostics:
        write_jsonl(args.diagnostics, server.diagnostics)
    if args.csv:
        export_alerts_to_csv(server.alerts, args.csv)
    if args.archive:
        run_id = archive_run(args.archive, server.alerts, server.policy_history, label=os.path.basename(args.events))
        logger.info(f"Run archived as id {run_id}")

    logger.info(f"{len(server.alerts)} alerts written to {args.out}")
    return EXIT_OK
