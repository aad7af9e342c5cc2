#!/usr/bin/env python3
"""Run the flexpm command line from a source checkout: ``python scripts/flexpm_cli.py <command> ...``."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from flexpm.harness.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
