"""Polarization shrinks as attention gets more expensive.

Costlier attention makes every signal less informative, which narrows
each voter's latitude and so the equilibrium interval.
"""

from nari import ModelSpec
from nari.statics import lambda_sweep

spec = ModelSpec.baseline(0.05, 0.6)
res = lambda_sweep(spec, [0.55, 0.6, 0.7, 0.8, 0.9, 1.0])
print(f"{'technology':13s} {'lambda':>7s} {'a*':>9s}")
for r in res["rows"]:
    a = "n/a" if r["a_star"] is None else f"{r['a_star']:.6f}"
    print(f"{r['technology']:13s} {r['lambda']:7.2f} {a:>9s}")
print("strictly decreasing:", res["strictly_decreasing"])
