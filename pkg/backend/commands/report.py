# report: alert log (file or archive) + truth -> table / json / pdf
import logging
import os

from attack_sim import load_truth
from commands.state import EXIT_OK, RunConfig
from database import list_runs, load_run_alerts
from errors import MalformedEventFile, UsageError
from export_engine import read_jsonl
from metrics import tally
from reporting import REPORT_FORMATS, build_report, render
from schemas import Alert

logger = logging.getLogger("cli")


def register(subparsers) -> None:
    p = subparsers.add_parser("report", help="score an alert log against ground truth")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--alerts", help="alert log (JSON-lines)")
    source.add_argument("--archive", metavar="URL", help="read alerts from an archived run")
    p.add_argument("--run-id", type=int, default=None, help="archived run to report on (with --archive)")
    p.add_argument("--truth", required=True, help="ground-truth sidecar (JSON-lines)")
    p.add_argument("--format", choices=REPORT_FORMATS, default="table")
    p.add_argument("--out", required=True, help="report output file")
    p.add_argument("--intervals", type=int, default=10, help="time slices for the outcome-rate table")
    p.set_defaults(
        handler=handle,
        inputs=lambda a: [x for x in (a.alerts, a.truth) if x],
        outputs=lambda a: [a.out],
    )


def handle(args, config: RunConfig) -> int:
    if args.intervals < 1:
        raise UsageError("--intervals must be at least 1")
    if args.archive:
        if args.run_id is None:
            runs = list_runs(args.archive)
            listing = "; ".join(f"{r['id']} ({r['label']}, {r['alert_count']} alerts)" for r in runs) or "none"
            raise UsageError(f"--archive needs --run-id; archived runs: {listing}")
        alerts = load_run_alerts(args.archive, args.run_id)
        label = f"run {args.run_id}"
    else:
        if args.run_id is not None:
            raise UsageError("--run-id only applies with --archive")
        alerts = read_jsonl(args.alerts, Alert, MalformedEventFile)
        label = os.path.basename(args.alerts)

    result = tally(alerts, load_truth(args.truth))
    report = build_report(result, intervals=args.intervals, label=label)
    with open(args.out, "wb") as f:
        f.write(render(report, args.format))
    logger.info(f"{args.format} report written to {args.out}")
    return EXIT_OK
