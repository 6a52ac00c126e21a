"""Susceptibility, policy latitudes, influential coalitions and equilibria."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Optional, Union

import numpy as np
from scipy.optimize import brentq, linprog, minimize_scalar

from .model import ModelSpec, Technology
from .optimizer import (
    DEFAULT_TOL,
    AssumptionViolation,
    SignalSolveResult,
    Tolerances,
    signal_profile,
)
from .signals import NULL, conditionals

__all__ = [
    "ConfigKind",
    "ConfigurationError",
    "ConsistencyResult",
    "EquilibriumSet",
    "HalfTie",
    "LatitudeReport",
    "NewsConfiguration",
    "BruteForceResult",
    "brute_force_equilibrium",
    "build_canonical_configuration",
    "check_consistency",
    "coalition",
    "enumerate_influential",
    "equilibrium_set",
    "influential_family",
    "is_influential",
    "policy_latitude",
    "repels",
    "solve_consistent_b",
    "susceptibility",
]

Coalition = frozenset
MAX_ENUM_TYPES = 15
HALF_TOL = 1e-12


class ConfigurationError(ValueError):
    pass


class HalfTie(ValueError):
    """A column mass equals 1/2, where the rounding test is undefined."""


def coalition(members: Iterable[int]) -> frozenset:
    c = frozenset(int(k) for k in members)
    if not c:
        raise ValueError("coalition must be nonempty")
    return c


def _coalition_key(c: frozenset) -> tuple:
    return (len(c), tuple(sorted(c)))


# --------------------------------------------------------------------------
# news configurations


def _sigma(col: np.ndarray) -> np.ndarray:
    """Symmetry operator: flip recommendations and reverse the type order."""
    return (1 - col)[::-1]


class ConfigKind(str, Enum):
    BROADCAST_STAR = "broadcast_star"
    INDEPENDENT_STAR_STAR = "independent_star_star"


@dataclass(eq=False)
class NewsConfiguration:
    """Joint recommendation profiles ``chi`` (types x columns) with
    state-conditional column probabilities ``b_plus`` and ``b_minus``."""

    chi: np.ndarray
    b_plus: np.ndarray
    b_minus: np.ndarray

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=np.int8)
        if chi.ndim != 2 or chi.shape[0] % 2 != 1:
            raise ConfigurationError("chi must have an odd number of rows (one per type)")
        if not np.isin(chi, (0, 1)).all():
            raise ConfigurationError("chi entries must be 0 or 1")
        self.chi = chi
        self.b_plus = np.asarray(self.b_plus, dtype=float)
        self.b_minus = np.asarray(self.b_minus, dtype=float)
        M = chi.shape[1]
        if len({tuple(c) for c in chi.T}) != M:
            raise ConfigurationError("columns of chi must be distinct")
        for name, b in (("b_plus", self.b_plus), ("b_minus", self.b_minus)):
            if b.shape != (M,):
                raise ConfigurationError(f"{name} must have one entry per column")
            if not (b > 0).all():
                raise ConfigurationError(f"{name} entries must be positive")
            if abs(math.fsum(b) - 1.0) > 1e-10:
                raise ConfigurationError(f"{name} must sum to 1")
        ok, why = self.symmetry_check()
        if not ok:
            raise ConfigurationError(f"configuration not symmetric: {why}")

    @property
    def K(self) -> int:
        return (self.chi.shape[0] - 1) // 2

    @property
    def n_columns(self) -> int:
        return self.chi.shape[1]

    def partner(self) -> Optional[np.ndarray]:
        """Index of the column that each column maps to under the symmetry operator."""
        lookup = {tuple(c): i for i, c in enumerate(self.chi.T)}
        out = []
        for c in self.chi.T:
            j = lookup.get(tuple(_sigma(c)))
            if j is None:
                return None
            out.append(j)
        return np.array(out)

    def symmetry_check(self, tol: float = 1e-12) -> tuple[bool, str]:
        p = self.partner()
        if p is None:
            return False, "column set not closed under the symmetry operator"
        gap = np.max(np.abs(self.b_plus - self.b_minus[p]))
        if gap > tol:
            return False, f"b_plus and mirrored b_minus differ by {gap:.3g}"
        return True, ""

    def columns(self) -> set:
        return {tuple(int(x) for x in c) for c in self.chi.T}

    def is_richer_than(self, other: "NewsConfiguration") -> bool:
        return other.columns() <= self.columns()

    def to_dict(self) -> dict:
        return {
            "chi": self.chi.astype(int).tolist(),
            "b_plus": [float(x) for x in self.b_plus],
            "b_minus": [float(x) for x in self.b_minus],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NewsConfiguration":
        return cls(np.array(d["chi"]), np.array(d["b_plus"]), np.array(d["b_minus"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "NewsConfiguration":
        return cls.from_dict(json.loads(text))


def _endorsement_probs(spec: ModelSpec, technology, a: float, tol: Tolerances = DEFAULT_TOL):
    """Stacked ``P(R | omega = +1)`` and ``P(R | omega = -1)`` across types."""
    prof = signal_profile(spec, technology, a, tol)
    plus, minus = [], []
    for k in spec.types:
        sig = prof[k].signal
        if sig is NULL:
            raise ConfigurationError(f"degenerate signal for type {k} at a={a!r}")
        p, m = conditionals(sig)
        plus.append(p)
        minus.append(m)
    return np.array(plus), np.array(minus)


def build_canonical_configuration(
    kind: Union[ConfigKind, str], spec: ModelSpec, technology, a: float, tol: Tolerances = DEFAULT_TOL
) -> NewsConfiguration:
    """Common-recommendation (``chi*``) or conditionally independent (``chi**``) configuration.

    ``chi*`` uses the median type's signal, which under broadcasting is the
    common signal.
    """
    kind = ConfigKind(kind)
    plus, minus = _endorsement_probs(spec, technology, a, tol)
    n = spec.n_types
    if kind is ConfigKind.BROADCAST_STAR:
        chi = np.array([[0, 1]] * n)
        p, m = plus[spec.K], minus[spec.K]
        return NewsConfiguration(chi, [1.0 - p, p], [1.0 - m, m])
    cols = np.array(list(itertools.product((0, 1), repeat=n))).T
    bp = np.prod(np.where(cols == 1, plus[:, None], 1.0 - plus[:, None]), axis=0)
    bm = np.prod(np.where(cols == 1, minus[:, None], 1.0 - minus[:, None]), axis=0)
    # enforce the symmetry pairing exactly (products differ only by rounding)
    cfg_cols = {tuple(c): i for i, c in enumerate(cols.T)}
    part = np.array([cfg_cols[tuple(_sigma(c))] for c in cols.T])
    bm = bp[part]
    return NewsConfiguration(cols, bp / bp.sum(), bm / bm.sum())


@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    residual_plus: float
    residual_minus: float

    def __bool__(self):
        return self.consistent


def check_consistency(
    config: NewsConfiguration, spec: ModelSpec, technology, a: float, tol: float = 1e-10
) -> ConsistencyResult:
    """Whether ``chi b+`` and ``chi b-`` reproduce the per-type endorsement probabilities."""
    if config.chi.shape[0] != spec.n_types:
        raise ConfigurationError(f"chi has {config.chi.shape[0]} rows; model has {spec.n_types} types")
    plus, minus = _endorsement_probs(spec, technology, a)
    rp = float(np.max(np.abs(config.chi @ config.b_plus - plus)))
    rm = float(np.max(np.abs(config.chi @ config.b_minus - minus)))
    return ConsistencyResult(rp <= tol and rm <= tol, rp, rm)


def solve_consistent_b(
    chi: np.ndarray, spec: ModelSpec, technology, a: float, residual_tol: float = 1e-8
) -> Optional[NewsConfiguration]:
    """Probability vectors making ``chi`` consistent, or ``None`` if there are none.

    ``b+`` maximizes its smallest entry subject to ``chi b+ = pi+``; ``b-``
    is its mirror image, which is consistent whenever the column set is
    closed under the symmetry operator and the marginals are symmetric.
    """
    chi = np.asarray(chi, dtype=np.int8)
    plus, _ = _endorsement_probs(spec, technology, a)
    n, M = chi.shape
    # variables: b (M) and s; maximize s
    c = np.zeros(M + 1)
    c[-1] = -1.0
    A_eq = np.zeros((n + 1, M + 1))
    A_eq[:n, :M] = chi
    A_eq[n, :M] = 1.0
    b_eq = np.concatenate([plus, [1.0]])
    A_ub = np.hstack([-np.eye(M), np.ones((M, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(M), A_eq=A_eq, b_eq=b_eq, bounds=[(0, 1)] * M + [(None, 1)])
    if res.status != 0 or res.x[-1] <= 1e-12:
        return None
    bp = np.clip(res.x[:M], 0.0, None)
    bp = bp / bp.sum()
    lookup = {tuple(col): i for i, col in enumerate(chi.T)}
    try:
        part = np.array([lookup[tuple(_sigma(col))] for col in chi.T])
    except KeyError:
        return None
    try:
        cfg = NewsConfiguration(chi, bp, bp[part])
    except ConfigurationError:
        return None
    chk = check_consistency(cfg, spec, technology, a, tol=residual_tol)
    return cfg if chk.consistent else None


# --------------------------------------------------------------------------
# influence


def _as_chi(chi) -> np.ndarray:
    return chi.chi if isinstance(chi, NewsConfiguration) else np.asarray(chi, dtype=np.int8)


def _rounded(mass: np.ndarray) -> np.ndarray:
    if np.any(np.abs(mass - 0.5) <= HALF_TOL):
        raise HalfTie("a column of the news configuration carries population mass exactly 1/2")
    return mass > 0.5


def is_influential(chi, q, C: Iterable[int]) -> bool:
    """Whether a unanimous switch by ``C`` changes some column's majority."""
    X = _as_chi(chi)
    q = np.asarray(q, dtype=float)
    K = (X.shape[0] - 1) // 2
    rows = [k + K for k in C]
    XC = X.copy()
    XC[rows, :] = 1
    return bool(np.any(_rounded(q @ XC) != _rounded(q @ X)))


def _influence_table(X: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Boolean table indexed by coalition bitmask (bit i = row i)."""
    n = X.shape[0]
    if n > MAX_ENUM_TYPES:
        raise ValueError(f"coalition enumeration limited to {MAX_ENUM_TYPES} types, got {n}")
    base = _rounded(q @ X)
    masks = np.arange(1 << n)
    bits = (masks[:, None] >> np.arange(n)) & 1  # (2^n, n)
    # mass after switching: base mass plus q_i(1 - X_i) for switched rows
    gain = q[:, None] * (1 - X)  # (n, M)
    mass = (q @ X)[None, :] + bits @ gain
    out = np.any(_rounded(mass) != base[None, :], axis=1)
    out[0] = False
    return out


def _mask_to_coalition(mask: int, K: int) -> frozenset:
    return frozenset(i - K for i in range(2 * K + 1) if mask >> i & 1)


def influential_family(chi, q) -> list:
    """Every influential coalition, sorted by size then members."""
    X = _as_chi(chi)
    K = (X.shape[0] - 1) // 2
    tab = _influence_table(X, np.asarray(q, dtype=float))
    return sorted((_mask_to_coalition(m, K) for m in np.flatnonzero(tab)), key=_coalition_key)


def enumerate_influential(chi, q) -> list:
    """Inclusion-minimal influential coalitions (supersets are influential too)."""
    X = _as_chi(chi)
    n = X.shape[0]
    K = (n - 1) // 2
    tab = _influence_table(X, np.asarray(q, dtype=float))
    out = []
    for m in np.flatnonzero(tab):
        m = int(m)
        if not any(tab[m & ~(1 << i)] for i in range(n) if m >> i & 1):
            out.append(_mask_to_coalition(m, K))
    return sorted(out, key=_coalition_key)


# --------------------------------------------------------------------------
# susceptibility and latitude


def _mu_L(signals, k: int) -> float:
    s = signals[k]
    s = s.signal if isinstance(s, SignalSolveResult) else s
    if s is NULL:
        raise AssumptionViolation(f"type {k} consumes no news")
    return s.mu_L


def _mu_R(signals, k: int) -> float:
    s = signals[k]
    s = s.signal if isinstance(s, SignalSolveResult) else s
    if s is NULL:
        raise AssumptionViolation(f"type {k} consumes no news")
    return s.mu_R


def susceptibility(spec: ModelSpec, signals, a: float, a_prime: float, D: Iterable[int]) -> float:
    """``min_k v(-a, a', k) + mu_L(a, k)`` over ``k`` in ``D``; positive means ``a'`` attracts ``D``.

    ``signals`` maps each type to its signal (or solve result) at ``<-a, a>``.
    """
    return min(spec.v(-a, a_prime, k) + _mu_L(signals, k) for k in D)


def repels(spec: ModelSpec, signals, a: float, a_prime: float, k: int) -> bool:
    """Whether ``a'`` loses type ``k`` even after favorable news."""
    return spec.v(-a, a_prime, k) + _mu_R(signals, k) < 0.0


@dataclass(frozen=True)
class LatitudeReport:
    target: frozenset
    xi: float
    binding_deviation: float
    belief_at_latitude: dict
    components: Optional[tuple] = None  # (-t(k), |upsilon_L|) for singletons
    saturated: bool = False

    def to_dict(self) -> dict:
        d = {
            "target": sorted(self.target),
            "xi": self.xi,
            "binding_deviation": self.binding_deviation,
            "belief_at_latitude": {str(k): v for k, v in sorted(self.belief_at_latitude.items())},
            "saturated": self.saturated,
        }
        if self.components is not None:
            d["components"] = list(self.components)
        return d


def _best_deviation(spec: ModelSpec, signals, a: float, D: frozenset) -> tuple[float, float]:
    """Maximize the coalition's susceptibility over deviations between its bliss points."""
    lo, hi = spec.bliss(min(D)), spec.bliss(max(D))
    phi = lambda x: susceptibility(spec, signals, a, x, D)
    cands = [(phi(spec.bliss(k)), spec.bliss(k)) for k in sorted(D)]
    if hi > lo:
        opt = minimize_scalar(lambda x: -phi(x), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        cands.append((-float(opt.fun), float(opt.x)))
        # The envelope of concave pieces peaks at a bliss point or a crossing;
        # polish crossings between consecutive members.
        members = sorted(D)
        for i, j in zip(members, members[1:]):
            f = lambda x: (spec.v(-a, x, i) + _mu_L(signals, i)) - (spec.v(-a, x, j) + _mu_L(signals, j))
            x0, x1 = spec.bliss(i), spec.bliss(j)
            if f(x0) * f(x1) < 0:
                x = brentq(f, x0, x1, xtol=1e-14)
                cands.append((phi(x), x))
    val, x = max(cands)
    return val, x


def _latitude_core(spec: ModelSpec, technology: Technology, D: frozenset, tol: Tolerances, check_a5: bool):
    m = max(abs(k) for k in D)
    lo = abs(spec.bliss(m))

    def Phi(a):
        return _best_deviation(spec, signal_profile(spec, technology, a, tol), a, D)[0]

    if check_a5:
        _check_assumption5(spec, technology, D, tol)
    f_lo = Phi(lo)
    if f_lo > 0.0:
        raise AssumptionViolation(
            f"coalition {sorted(D)} is attracted already at a={lo!r}; strict obedience fails"
        )
    saturated = Phi(spec.a_bar) <= 0.0
    if saturated:
        xi = spec.a_bar
    else:
        xi = brentq(Phi, lo, spec.a_bar, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=max(tol.max_iter, 200))
    prof = signal_profile(spec, technology, xi, tol)
    _, dev = _best_deviation(spec, prof, xi, D)
    beliefs = {k: _mu_L(prof, k) for k in D}
    comps = None
    if len(D) == 1:
        (k,) = D
        anchor = abs(spec.bliss(k)) if technology is not Technology.BROADCAST else spec.bliss(spec.K)
        ups = _mu_L(signal_profile(spec, technology, anchor, tol), k)
        comps = (-spec.bliss(k), abs(ups))
    return LatitudeReport(D, float(xi), float(dev), beliefs, comps, saturated)


_latitude_cached = lru_cache(maxsize=50_000)(_latitude_core)


def _check_assumption5(spec: ModelSpec, technology: Technology, D: frozenset, tol: Tolerances, n: int = 25):
    """Each member's susceptibility must increase in ``a`` beyond its bliss point."""
    devs = sorted(set(np.linspace(spec.bliss(min(D)), spec.bliss(max(D)), 5)) | {spec.bliss(k) for k in D})
    for k in D:
        grid = np.linspace(abs(spec.bliss(k)), spec.a_bar, n)
        for x in devs:
            prev = None
            for a in grid:
                phi = spec.v(-a, x, k) + _mu_L(signal_profile(spec, technology, float(a), tol), k)
                if prev is not None and phi < prev[1] - 1e-12:
                    raise AssumptionViolation(
                        f"susceptibility of type {k} decreases in a between {prev[0]!r} and {a!r} at a'={x!r}",
                        report={"a1": prev[0], "a2": float(a), "a_prime": float(x), "type": k},
                    )
                prev = (float(a), phi)


def policy_latitude(
    spec: ModelSpec,
    technology,
    D: Iterable[int],
    tol: Tolerances = DEFAULT_TOL,
    check_a5: bool = True,
) -> LatitudeReport:
    """Largest ``a`` at which no deviation attracts coalition ``D``.

    Bisection runs on ``[|t(m)|, a_bar]`` where ``m`` is the most extreme
    member; the inner maximization over deviations is restricted to the
    members' bliss range. A latitude reaching ``a_bar`` is flagged as
    saturated.
    """
    D = coalition(D)
    if not all(k in spec.types for k in D):
        raise ValueError(f"coalition {sorted(D)} contains unknown types")
    return _latitude_cached(spec, Technology(technology), D, tol, check_a5)


# --------------------------------------------------------------------------
# equilibrium set


@dataclass
class EquilibriumSet:
    a_star: float
    disciplining: frozenset
    latitudes: dict  # coalition -> LatitudeReport
    influential: list
    induction_a_star: float
    technology: Technology

    @property
    def interval(self) -> tuple[float, float]:
        return (0.0, self.a_star)

    @property
    def saturated(self) -> bool:
        return self.latitudes[self.disciplining].saturated if self.disciplining else True

    def to_dict(self) -> dict:
        return {
            "technology": self.technology.value,
            "a_star": self.a_star,
            "interval": list(self.interval),
            "disciplining": sorted(self.disciplining),
            "induction_a_star": self.induction_a_star,
            "influential": [sorted(c) for c in self.influential],
            "latitudes": [
                {"coalition": sorted(c), "xi": r.xi, "saturated": r.saturated}
                for c, r in sorted(self.latitudes.items(), key=lambda kv: _coalition_key(kv[0]))
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _require_consistency(X: np.ndarray, spec: ModelSpec, technology: Technology, tol: Tolerances, n: int = 4):
    """Some strictly positive ``b`` must reproduce the marginals across the policy range."""
    top = min(spec.a_bar, 2.0 * max(spec.t) + 1.0)
    for a in np.linspace(0.0, top, n):
        if solve_consistent_b(X, spec, technology, float(a)) is None:
            raise AssumptionViolation(f"configuration is not {technology.value}-consistent at a={float(a)!r}")


def _induction(spec: ModelSpec, lat: dict) -> float:
    """Policy polarization by the step-by-step construction over ``{-m..m}``."""
    for m in range(spec.K + 1):
        inner = [r.xi for c, r in lat.items() if max(abs(k) for k in c) <= m]
        if not inner:
            continue
        low = min(inner)
        if m == spec.K or low < spec.bliss(m + 1):
            return low
    return spec.a_bar


def equilibrium_set(
    spec: ModelSpec,
    technology,
    chi,
    q=None,
    tol: Tolerances = DEFAULT_TOL,
    check_assumptions: bool = True,
) -> EquilibriumSet:
    """Symmetric equilibrium policies ``[0, a*]``, ``a*`` the smallest latitude
    among influential coalitions.

    ``q`` overrides the model's populations (signals are re-solved for it).
    The answer is computed twice, by the direct minimum and by the
    step-by-step construction over nested type ranges; both use the same
    latitude values and must agree exactly.
    """
    from .optimizer import assumption2_check

    technology = Technology(technology)
    if q is not None:
        spec = spec.with_(q=tuple(q))
    if check_assumptions:
        rep = assumption2_check(spec, technology, tol=tol, stop_early=True)
        if not rep.passed:
            raise AssumptionViolation("uniform strict obedience fails", report=rep)
    X = _as_chi(chi)
    if X.shape[0] != spec.n_types:
        raise ConfigurationError("configuration rows do not match the number of types")
    if check_assumptions:
        _require_consistency(X, spec, technology, tol)
    minimal = enumerate_influential(X, spec.q)
    lat = {C: policy_latitude(spec, technology, C, tol, check_a5=check_assumptions) for C in minimal}
    if lat:
        disc = min(lat, key=lambda c: (lat[c].xi, _coalition_key(c)))
        a_star = lat[disc].xi
    else:
        disc, a_star = frozenset(), spec.a_bar
    ind = _induction(spec, lat)
    if ind != a_star:
        raise AssumptionViolation(f"direct minimum {a_star!r} and induction {ind!r} disagree")
    return EquilibriumSet(a_star, disc, lat, minimal, ind, technology)


# --------------------------------------------------------------------------
# brute force


@dataclass(frozen=True)
class BruteForceResult:
    a_star: float
    interval: tuple
    grid_step: float
    first_failure: Optional[float]
    witness: Optional[tuple] = None  # (a, a', attracted types)

    def to_dict(self) -> dict:
        return {
            "a_star": self.a_star,
            "interval": list(self.interval),
            "grid_step": self.grid_step,
            "first_failure": self.first_failure,
            "witness": None if self.witness is None else [self.witness[0], self.witness[1], sorted(self.witness[2])],
        }


def brute_force_equilibrium(
    spec: ModelSpec,
    technology,
    chi,
    q=None,
    grid_step: float = 1e-3,
    tol: Tolerances = DEFAULT_TOL,
) -> BruteForceResult:
    """Scan policies upward and test every grid deviation directly.

    ``a`` is an equilibrium when no ``a'`` in ``[-a, a)`` attracts an
    influential coalition of voters whose bliss points lie in ``[-a, a]``.
    Returns the longest prefix of equilibrium grid points.
    """
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    technology = Technology(technology)
    if q is not None:
        spec = spec.with_(q=tuple(q))
    X = _as_chi(chi)
    table = _influence_table(X, np.asarray(spec.q, dtype=float))
    types = list(spec.types)
    bliss = np.array(spec.t)
    weights = 1 << np.arange(len(types))
    n_steps = int(math.floor(spec.a_bar / grid_step + 1e-9))
    last = None
    for i in range(n_steps + 1):
        a = i * grid_step
        prof = signal_profile(spec, technology, a, tol)
        mu = np.array([_mu_L(prof, k) for k in types])
        devs = np.arange(-a, a, grid_step)
        devs = np.concatenate([devs, bliss[(bliss >= -a) & (bliss < a)]])
        if devs.size == 0:
            last = a
            continue
        eligible = np.abs(bliss) <= a
        phi = np.stack([spec.v(-a, devs, k) + mu[j] for j, k in enumerate(types)])  # (n, D)
        attracted = (phi > 0.0) & eligible[:, None]
        masks = weights @ attracted
        hit = table[masks]
        if hit.any():
            j = int(np.argmax(hit))
            who = frozenset(k for r, k in enumerate(types) if attracted[r, j])
            return BruteForceResult(last if last is not None else 0.0, (0.0, last), grid_step, a, (a, float(devs[j]), who))
        last = a
    return BruteForceResult(last, (0.0, last), grid_step, None)
