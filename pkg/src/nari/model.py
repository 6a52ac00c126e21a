"""Economic environment: voter types, utilities, attention technology.

Types are indexed ``k = -K, ..., K`` and every per-type array is stored in
that order, so ``spec.q[spec.index(k)]`` is the population of type ``k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Union

import numpy as np

__all__ = [
    "AttentionSpec",
    "CostKind",
    "ModelError",
    "ModelSpec",
    "StateModel",
    "Technology",
    "UtilityKind",
    "ValidationReport",
    "attention_spec",
    "policy_value_diff",
    "validate_model",
]


class ModelError(ValueError):
    """Raised when model primitives violate a structural premise."""


class UtilityKind(str, Enum):
    DISTANCE = "distance"
    QUADRATIC = "quadratic"


class CostKind(str, Enum):
    QUADRATIC = "quadratic"
    ENTROPY = "entropy"


class Technology(str, Enum):
    BROADCAST = "broadcast"
    PERSONALIZED = "personalized"
    COMPETITIVE = "competitive"


@dataclass(frozen=True)
class StateModel:
    """Binary valence state with a uniform prior."""

    support: tuple[int, int] = (-1, 1)
    prior: tuple[float, float] = (0.5, 0.5)

    @property
    def prior_mean(self) -> float:
        return self.support[0] * self.prior[0] + self.support[1] * self.prior[1]


# --------------------------------------------------------------------------
# attention cost functions h(mu)

_LN2 = math.log(2.0)


def _h_quadratic(mu):
    return np.square(mu) if isinstance(mu, np.ndarray) else mu * mu


def _hp_quadratic(mu):
    return 2.0 * mu


def _hp_inv_quadratic(y):
    return 0.5 * y


def _hpp_quadratic(mu):
    return 2.0 + 0.0 * mu


def _xlog2x(p: float) -> float:
    return 0.0 if p <= 0.0 else p * math.log2(p)


def _h_entropy(mu):
    if isinstance(mu, np.ndarray):
        from scipy.special import xlogy

        p = (1.0 + mu) / 2.0
        return 1.0 + (xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / _LN2
    p = (1.0 + mu) / 2.0
    return 1.0 + _xlog2x(p) + _xlog2x(1.0 - p)


def _hp_entropy(mu):
    if isinstance(mu, np.ndarray):
        with np.errstate(divide="ignore"):
            return np.arctanh(mu) / _LN2
    if mu >= 1.0:
        return math.inf
    if mu <= -1.0:
        return -math.inf
    return math.atanh(mu) / _LN2


def _hp_inv_entropy(y):
    if isinstance(y, np.ndarray):
        return np.tanh(y * _LN2)
    return math.tanh(y * _LN2)


def _hpp_entropy(mu):
    return 1.0 / ((1.0 - mu * mu) * _LN2)


@dataclass(frozen=True)
class AttentionSpec:
    """Posterior-separable attention cost ``I = sum_z pi_z h(mu_z)``.

    ``h_prime_inv`` inverts the (strictly increasing) derivative and is
    what the signal solvers use to locate tangency points.
    """

    cost_kind: CostKind
    h: Callable = field(repr=False, compare=False)
    h_prime: Callable = field(repr=False, compare=False)
    h_prime_inv: Callable = field(repr=False, compare=False)
    h_second: Callable = field(repr=False, compare=False)

    def check_convexity(self, n: int = 1000, seed: int = 0) -> bool:
        """Midpoint-type strict convexity on random triples in [-1, 1]."""
        rng = np.random.default_rng(seed)
        x = np.sort(rng.uniform(-1.0, 1.0, size=(n, 3)), axis=1)
        lo, mid, hi = x[:, 0], x[:, 1], x[:, 2]
        keep = (mid - lo > 1e-6) & (hi - mid > 1e-6)
        lo, mid, hi = lo[keep], mid[keep], hi[keep]
        w = (mid - lo) / (hi - lo)
        chord = (1.0 - w) * self.h(lo) + w * self.h(hi)
        return bool(np.all(self.h(mid) < chord))


_ATTENTION = {
    CostKind.QUADRATIC: AttentionSpec(
        CostKind.QUADRATIC, _h_quadratic, _hp_quadratic, _hp_inv_quadratic, _hpp_quadratic
    ),
    CostKind.ENTROPY: AttentionSpec(
        CostKind.ENTROPY, _h_entropy, _hp_entropy, _hp_inv_entropy, _hpp_entropy
    ),
}


def attention_spec(kind: Union[CostKind, str]) -> AttentionSpec:
    return _ATTENTION[CostKind(kind)]


# --------------------------------------------------------------------------
# model specification

UtilityFn = Callable[[object, float], object]


@dataclass(frozen=True)
class ModelSpec:
    """Voters, preferences, policy space and attention technology.

    Args:
        K: types run over ``-K..K``.
        q: populations ordered ``k=-K..K``; positive, symmetric, summing to 1.
        t: bliss points ordered ``k=-K..K``; strictly increasing, odd.
        utility: ``"distance"``, ``"quadratic"`` or a callable ``u(a, t_k)``.
            Callables are accepted as-is; checking them against the
            standing assumptions is left to :func:`validate_model`.
        a_bar: policies live in ``[-a_bar, a_bar]``.
        cost: attention cost kind.
        lam: marginal attention cost.
    """

    K: int
    q: tuple[float, ...]
    t: tuple[float, ...]
    utility: Union[UtilityKind, UtilityFn] = UtilityKind.DISTANCE
    a_bar: float = 10.0
    cost: CostKind = CostKind.QUADRATIC
    lam: float = 0.6

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(x) for x in self.q))
        object.__setattr__(self, "t", tuple(float(x) for x in self.t))
        object.__setattr__(self, "cost", CostKind(self.cost))
        if not callable(self.utility):
            object.__setattr__(self, "utility", UtilityKind(self.utility))
        K, q, t = self.K, self.q, self.t
        if not isinstance(K, (int, np.integer)) or K < 1:
            raise ModelError("K must be a positive integer")
        n = 2 * K + 1
        if len(q) != n or len(t) != n:
            raise ModelError(f"expected {n} populations and bliss points, got {len(q)} and {len(t)}")
        if not all(x > 0.0 for x in q):
            raise ModelError("populations must be strictly positive")
        if abs(math.fsum(q) - 1.0) > 1e-12:
            raise ModelError("populations must sum to 1")
        if any(q[i] != q[n - 1 - i] for i in range(n)):
            raise ModelError("populations not symmetric")
        if any(t[i] != -t[n - 1 - i] for i in range(n)):
            raise ModelError("bliss not odd-symmetric")
        if any(t[i + 1] <= t[i] for i in range(n - 1)):
            raise ModelError("bliss not strictly increasing")
        if not self.a_bar > 0.0:
            raise ModelError("a_bar must be positive")
        if not max(abs(x) for x in t) < self.a_bar:
            raise ModelError("bliss points must lie inside (-a_bar, a_bar)")
        if not self.lam > 0.0:
            raise ModelError("lambda must be positive")

    # -- indexing helpers
    @property
    def types(self) -> range:
        return range(-self.K, self.K + 1)

    @property
    def n_types(self) -> int:
        return 2 * self.K + 1

    def index(self, k: int) -> int:
        return k + self.K

    def pop(self, k: int) -> float:
        return self.q[k + self.K]

    def bliss(self, k: int) -> float:
        return self.t[k + self.K]

    @property
    def attention(self) -> AttentionSpec:
        return attention_spec(self.cost)

    # -- preferences
    def u(self, a, k: int):
        """Utility of policy ``a`` (scalar or array) to type ``k``."""
        tk = self.t[k + self.K]
        if self.utility is UtilityKind.DISTANCE:
            return -np.abs(tk - a) if isinstance(a, np.ndarray) else -abs(tk - a)
        if self.utility is UtilityKind.QUADRATIC:
            return -(tk - a) ** 2
        return self.utility(a, tk)

    def v(self, aL, aR, k: int):
        """Differential valuation ``u(aR, k) - u(aL, k)`` (no range checks)."""
        return self.u(aR, k) - self.u(aL, k)

    def v_sym(self, a: float, k: int) -> float:
        """``v(-a, a, k)`` for the symmetric profile."""
        return self.v(-a, a, k)

    def with_(self, **changes) -> "ModelSpec":
        return replace(self, **changes)

    # -- serialization
    def to_dict(self) -> dict:
        if callable(self.utility):
            raise ModelError("custom utility callables cannot be serialized")
        return {
            "K": int(self.K),
            "q": list(self.q),
            "t": list(self.t),
            "utility": self.utility.value,
            "a_bar": self.a_bar,
            "cost": self.cost.value,
            "lambda": self.lam,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(
            K=int(d["K"]),
            q=tuple(d["q"]),
            t=tuple(d["t"]),
            utility=d.get("utility", "distance"),
            a_bar=float(d.get("a_bar", 10.0)),
            cost=d.get("cost", "quadratic"),
            lam=float(d.get("lambda", d.get("lam", 0.6))),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))

    @classmethod
    def baseline(
        cls,
        t1: float = 0.05,
        lam: float = 0.6,
        q0: float = 1.0 / 3.0,
        cost: Union[CostKind, str] = CostKind.QUADRATIC,
        utility: Union[UtilityKind, str] = UtilityKind.DISTANCE,
        a_bar: float = 10.0,
    ) -> "ModelSpec":
        """Three-type model with ``t = (-t1, 0, t1)`` and ``q(0) = q0``."""
        qe = (1.0 - q0) / 2.0
        return cls(1, (qe, q0, qe), (-t1, 0.0, t1), utility, a_bar, cost, lam)


def policy_value_diff(spec: ModelSpec, aL, aR, k: int):
    """``v(<aL, aR>, k)``, rejecting policies outside ``[-a_bar, a_bar]``."""
    for a in (aL, aR):
        if np.any(np.abs(a) > spec.a_bar):
            raise ModelError(f"policy {a!r} outside [-a_bar, a_bar]")
    if k not in spec.types:
        raise ModelError(f"unknown type {k}")
    return spec.v(aL, aR, k)


# --------------------------------------------------------------------------
# validation of the utility premises


@dataclass
class ClauseResult:
    name: str
    passed: bool
    witness: tuple | None = None


@dataclass
class ValidationReport:
    clauses: list[ClauseResult]
    warnings: list[str]
    attention_convex: bool

    @property
    def passed(self) -> bool:
        return self.attention_convex and all(c.passed for c in self.clauses)

    def clause(self, name: str) -> ClauseResult:
        return next(c for c in self.clauses if c.name == name)


def _first(mask: np.ndarray):
    idx = np.argwhere(mask)
    return tuple(idx[0]) if len(idx) else None


def validate_model(spec: Union[ModelSpec, dict], n_grid: int = 201, tol: float = 1e-12) -> ValidationReport:
    """Check the utility premises on a policy grid.

    Built-in utilities pass by construction; a custom callable gets the
    same grid checks and the witnessing ``(a, a', k)`` of any failure.
    Accepts a raw dict, in which case structural errors surface as
    :class:`ModelError`.
    """
    if isinstance(spec, dict):
        spec = ModelSpec.from_dict(spec)
    grid = np.linspace(-spec.a_bar, spec.a_bar, n_grid)
    grid = np.union1d(grid, np.asarray(spec.t))
    U = np.array([[float(spec.u(float(a), k)) for a in grid] for k in spec.types])
    clauses = []

    finite = bool(np.all(np.isfinite(U)))
    clauses.append(ClauseResult("continuity", finite, None if finite else _first(~np.isfinite(U))))

    witness = None
    for i, k in enumerate(spec.types):
        for j in range(1, len(grid) - 1):
            a0, a1, a2 = grid[j - 1], grid[j], grid[j + 1]
            w = (a1 - a0) / (a2 - a0)
            if U[i, j] < (1 - w) * U[i, j - 1] + w * U[i, j + 1] - tol:
                witness = (float(a0), float(a2), k)
                break
        if witness:
            break
    clauses.append(ClauseResult("concavity", witness is None, witness))

    witness = None
    for k in spec.types:
        for a in grid:
            if abs(spec.u(float(a), k) - spec.u(float(-a), -k)) > 1e-10:
                witness = (float(a), float(-a), k)
                break
        if witness:
            break
    clauses.append(ClauseResult("symmetry", witness is None, witness))

    witness = None
    for i, k in enumerate(spec.types):
        tk = spec.bliss(k)
        d = np.diff(U[i])
        left = grid[1:] <= tk
        right = grid[:-1] >= tk
        bad = (left & (d <= 0)) | (right & (d >= 0))
        if bad.any():
            j = int(np.argmax(bad))
            witness = (float(grid[j]), float(grid[j + 1]), k)
            break
    clauses.append(ClauseResult("inverted_v", witness is None, witness))

    witness = None
    sub = grid[:: max(1, len(grid) // 41)]
    for a in sub:
        for ap in sub:
            if a <= ap:
                continue
            diffs = [spec.u(float(a), k) - spec.u(float(ap), k) for k in spec.types]
            if any(diffs[i + 1] < diffs[i] - 1e-10 for i in range(len(diffs) - 1)):
                witness = (float(a), float(ap), None)
                break
        if witness:
            break
    if witness is None:
        for a in sub[sub > 0]:
            for k in spec.types:
                d = spec.u(float(a), k) - spec.u(float(-a), k)
                ok = d > 0 if k > 0 else (d < 0 if k < 0 else abs(d) <= 1e-12)
                if not ok:
                    witness = (float(a), float(-a), k)
                    break
            if witness:
                break
    clauses.append(ClauseResult("increasing_differences", witness is None, witness))

    warnings = []
    vmax = max(abs(spec.v_sym(float(a), k)) for a in grid[grid >= 0] for k in spec.types)
    if vmax >= 1.0:
        warnings.append(f"|v| reaches {vmax:.6g} >= 1; voters' policy preferences may be too extreme")
    return ValidationReport(clauses, warnings, spec.attention.check_convexity())
