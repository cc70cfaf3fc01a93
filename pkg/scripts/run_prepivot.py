#!/usr/bin/env python3
"""
Lightweight wrapper for running the prepivot CLI without installing the package.

Usage examples:
    python scripts/run_prepivot.py enumerate --design cre --n 6 --n1 3
    python scripts/run_prepivot.py test --data study.csv --design cre --statistic hotelling
    python scripts/run_prepivot.py simulate --scenario table1 --n 1000 --sims 200
"""

from __future__ import annotations

import sys
from pathlib import Path

# Ensure the src directory is importable without installing the package.
PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from prepivot.cli import main


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main(sys.argv[1:]))
