# simulate: scenario spec -> events.jsonl + truth.jsonl
import logging

from pydantic import ValidationError

from attack_sim import ScenarioSpec, generate, load_scenario_spec, write_scenario
from commands.state import EXIT_OK, RunConfig
from errors import InvalidSpec

logger = logging.getLogger("cli")


def register(subparsers) -> None:
    p = subparsers.add_parser("simulate", help="generate a labelled event stream from a scenario spec")
    p.add_argument("--spec", required=True, help="scenario spec (JSON)")
    p.add_argument("--out", required=True, help="events output (JSON-lines)")
    p.add_argument("--truth", required=True, help="ground-truth output (JSON-lines)")
    p.add_argument("--seed", type=int, default=None, help="override the spec's seed")
    p.set_defaults(handler=handle, inputs=lambda a: [a.spec], outputs=lambda a: [a.out, a.truth])


def handle(args, config: RunConfig) -> int:
    spec = load_scenario_spec(args.spec)
    if config.seed is not None:
        try:
            spec = ScenarioSpec.model_validate({**spec.model_dump(), "seed": config.seed})
        except ValidationError as e:
            raise InvalidSpec(f"--seed {config.seed}: {e.errors()[0]['msg']}")

    events, truth = generate(spec)
    write_scenario(events, truth, args.out, args.truth)
    return EXIT_OK
