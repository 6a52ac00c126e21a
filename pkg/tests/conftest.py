import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from nari import ModelSpec  # noqa: E402


@pytest.fixture
def worked():
    """Three types, t(1)=0.05, lambda=0.6, distance utility, quadratic cost, uniform q."""
    return ModelSpec.baseline(0.05, 0.6)


def random_symmetric_q(rng, K, q0=None):
    """Symmetric positive populations; avoids masses that sum to exactly 1/2."""
    while True:
        side = rng.uniform(0.2, 1.0, size=K)
        if q0 is None:
            mid = rng.uniform(0.2, 1.0)
            tot = 2 * side.sum() + mid
            side, mid = side / tot, mid / tot
        else:
            side = side / (2 * side.sum()) * (1 - q0)
            mid = q0
        q = tuple(side[::-1]) + (mid,) + tuple(side)
        s = sum(q)
        q = tuple(x / s for x in q)
        n = len(q)
        q = tuple(q[n - 1 - i] if i > n // 2 else q[i] for i in range(n))
        # exact symmetry and sum within 1e-12
        if abs(sum(q) - 1.0) > 1e-12:
            continue
        masses = {round(sum(c), 9) for r in range(n + 1) for c in _subsets(q, r)}
        if 0.5 not in masses:
            return q


def _subsets(q, r):
    import itertools

    return itertools.combinations(q, r)


def random_bliss(rng, K, tmax):
    inner = np.sort(rng.uniform(0.1, 1.0, size=K))
    inner = inner / inner[-1] * tmax
    # strictly increasing with distinct entries
    inner = np.maximum.accumulate(inner + np.arange(K) * 1e-6)
    inner = inner / inner[-1] * tmax
    return tuple(-x for x in inner[::-1]) + (0.0,) + tuple(inner)


def random_spec(rng, K=None, cost="quadratic", lam_range=(0.55, 1.5), tmax_scale=0.9, q0=None):
    """A spec meeting the quadratic-cost reduction of uniform strict obedience."""
    K = int(rng.integers(1, 3)) if K is None else K
    lam = float(rng.uniform(*lam_range))
    if cost == "quadratic":
        tmax = float(rng.uniform(0.02, tmax_scale / (8 * lam)))
    else:
        tmax = float(rng.uniform(0.01, 0.05))
    return ModelSpec(K, random_symmetric_q(rng, K, q0), random_bliss(rng, K, tmax), "distance", 10.0, cost, lam)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and hasattr(mod, "RESULTS"):
            lines = [mod.RESULTS[k] for k in sorted(mod.RESULTS)]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
