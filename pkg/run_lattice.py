#!/usr/bin/env python3
"""
latticeclimber - Main entry point for attacks, sweeps, benches and lattice reports.

Usage:
    python run_lattice.py gen --kind canonical --name d --output data/instances/config_d.json
    python run_lattice.py attack data/instances/config_d.json --attack lca
    python run_lattice.py sweep-angle --r 0.9 --epsilon 1.0 --points 50
    python run_lattice.py bench-random --bias-setting 0 --trials 100
    python run_lattice.py oracle data/instances/config_d.json
"""

import sys
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent / "src"))

from latticeclimber.cli import main

if __name__ == "__main__":
    sys.exit(main())
