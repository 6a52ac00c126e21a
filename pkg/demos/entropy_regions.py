"""Scan (lambda, t1) under entropy attention cost and write a plot-ready CSV.

Usage: python demos/entropy_regions.py [N] [OUT.csv]

Prints a character map of the grid: '.' marks cells where some voter's
signal breaks strict obedience, 'x' where the skewness condition holds
and 'o' where it fails.
"""

import sys

from nari import ModelSpec
from nari.statics import Axis, region_scan

n = int(sys.argv[1]) if len(sys.argv) > 1 else 25
out = sys.argv[2] if len(sys.argv) > 2 else "entropy_regions.csv"

xs, ys = Axis("lambda", 0.5, 3.0, n), Axis("t1", 0.01, 0.5, n)
grid = region_scan(ModelSpec.baseline(0.05, 1.0, cost="entropy"), xs, ys)
with open(out, "w", newline="\n") as fh:
    fh.write(grid.to_csv())

print("t1 (rows, top = largest) vs lambda (columns, left = 0.5)")
for j in reversed(range(ys.n)):
    row = "".join("." if not c.assumption2 else ("x" if c.star else "o") for c in (grid.cells[i][j] for i in range(xs.n)))
    print(f"{ys.values()[j]:6.3f} {row}")
print(f"wrote {out}")
