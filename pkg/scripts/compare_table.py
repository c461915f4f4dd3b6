#!/usr/bin/env python3
"""Method-by-size timing and accuracy table at desk scale.

Runs every factorization method over a couple of synthetic low-rank sizes
and prints the comparison table. Any extra `krysvd compare` flag can be
appended and wins over the defaults here, e.g.

    python3 scripts/compare_table.py --sizes 2000x1000 --repeats 5 --out t.csv
"""

import sys

from krysvd.cli import main

DEFAULTS = [
    "compare",
    "--sizes", "500x500,1000x1000",
    "--rank-true", "100",
    "--r", "20",
    "--repeats", "3",
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
