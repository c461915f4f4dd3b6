#!/usr/bin/env python3
"""Per-direction recovery quality against the dense oracle.

The stock setting asks every method for the top 50 triplets of a 200x200
matrix of numerical rank 100, where an undersized sketch visibly degrades
while the Krylov route stays at q ~ 1. Extra `krysvd triplets` flags win
over the defaults, e.g.

    python3 scripts/triplet_quality.py --methods fsvd,rsvd-default --format tsv
"""

import sys

from krysvd.cli import main

DEFAULTS = [
    "triplets",
    "--size", "200x200",
    "--rank-true", "100",
    "--r", "50",
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
