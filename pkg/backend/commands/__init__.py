# Sub-command modules. Each exposes register(subparsers) and handle(args, config).
from commands import detect, report, selftest, simulate

COMMANDS = (simulate, detect, report, selftest)
