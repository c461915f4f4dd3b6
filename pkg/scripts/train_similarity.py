#!/usr/bin/env python3
"""Bilinear similarity training benchmark on the fixed-rank manifold.

Trains rank-5 scoring matrices on a 64x32 synthetic paired-domain task for
2000 steps, three seeds, with both retraction backends so their per-step
cost and final accuracy can be compared line by line. Extra `krysvd rsl`
flags win over the defaults, e.g.

    python3 scripts/train_similarity.py --d1 512 --d2 512 --steps 100
"""

import sys

from krysvd.cli import main

DEFAULTS = [
    "rsl",
    "--d1", "64",
    "--d2", "32",
    "--rank", "5",
    "--r-true", "5",
    "--steps", "2000",
    "--batch", "32",
    "--n-seeds", "3",
    "--backends", "fsvd,dense",
    "--eval-every", "200",
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
