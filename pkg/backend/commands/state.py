# Shared CLI constants and the validated run configuration.
import enum
import os
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from reporting import REPORT_FORMAT_VERSION

TOOL_NAME = "ids-engine"
TOOL_VERSION = "1.0.0"

# File format versions; bumped whenever a field changes meaning
EVENT_FORMAT_VERSION = 1
TRUTH_FORMAT_VERSION = 1
ALERT_FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

LOG_FORMAT = "[%(name)s] %(levelname)s %(message)s"


def version_string() -> str:
    return (f"{TOOL_NAME} {TOOL_VERSION} (events v{EVENT_FORMAT_VERSION}, truth v{TRUTH_FORMAT_VERSION}, "
            f"alerts v{ALERT_FORMAT_VERSION}, report v{REPORT_FORMAT_VERSION})")


class Subcommand(str, enum.Enum):
    SIMULATE = "simulate"
    DETECT = "detect"
    REPORT = "report"
    SELFTEST = "selftest"


class RunConfig(BaseModel):
    """One invocation. Every input path must exist when the run starts."""
    model_config = ConfigDict(frozen=True)

    subcommand: Subcommand
    inputs: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    policy: Optional[str] = None
    seed: Optional[int] = None
    verbosity: int = 0  # -1 quiet, 0 normal, 1 verbose

    @model_validator(mode="after")
    def _inputs_exist(self):
        missing = [p for p in self.inputs + ([self.policy] if self.policy else []) if not os.path.isfile(p)]
        if missing:
            raise ValueError(f"input file not found: {', '.join(missing)}")
        return self
