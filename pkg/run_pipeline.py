#!/usr/bin/env python3
"""Launcher for the full experiment: `python run_pipeline.py --config configs/full.ini`.

Equivalent to `python -m phase_transfer all ...`; any other subcommand can be
given explicitly as the first argument.
"""

import sys

from phase_transfer.cli import main
from phase_transfer.pipeline import STAGES

SUBCOMMANDS = set(STAGES) | {"all", "circuit-demo"}

if __name__ == "__main__":
    argv = sys.argv[1:]
    if not argv or argv[0] not in SUBCOMMANDS | {"-h", "--help", "--version"}:
        argv = ["all"] + argv
    sys.exit(main(argv))
