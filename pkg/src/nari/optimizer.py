"""Optimal news signals: competitive, personalized and broadcast.

All three problems reduce to the same primitive. For a voter who votes L
by default (``v <= 0``) and an effective cost ``c``, the value of a signal
is the concave closure at the prior of

    g(mu) = max(-c h(mu), v + mu - c h(mu)).

Both pieces are strictly concave, so the closure is bridged by a single
common tangent line. Its slope ``s`` is pinned down by the monotone
function ``D(s) = c_R(s) - c_L(s)`` (difference of the two pieces' support
functions, with ``D'(s) = mu_L(s) - mu_R(s) < 0``), which makes the root
unique and bracketable. Types with ``v > 0`` are handled by mirroring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .model import AttentionSpec, ModelSpec, Technology
from .signals import (
    NULL,
    BinarySignal,
    Signal,
    attention_cost,
    check_strict_obedience,
    gain_of_consumption,
    mirror,
)

__all__ = [
    "AssumptionViolation",
    "Assumption2Report",
    "NumericFailure",
    "Regime",
    "SignalSolveResult",
    "Tolerances",
    "assumption2_check",
    "competitive_signal",
    "default_a_grid",
    "optimal_broadcast_signal",
    "optimal_personalized_signal",
    "signal_profile",
    "skewness_report",
]

EPS_COST = 1e-10


class AssumptionViolation(RuntimeError):
    """A standing assumption fails for the given model; carries the evidence."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class NumericFailure(RuntimeError):
    """A root-finder failed to bracket or converge."""

    def __init__(self, message: str, **residuals):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class Tolerances:
    tol_root: float = 1e-10
    tol_bind: float = 1e-9
    max_iter: int = 100


DEFAULT_TOL = Tolerances()


class Regime(str, Enum):
    FULL_DISCLOSURE = "full_disclosure"
    BINDING = "binding_participation"
    INTERIOR = "interior"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class SignalSolveResult:
    signal: Signal
    regime: Regime
    effective_cost: float
    attention: float
    value: float
    slack: float
    boundary: bool = False
    participation: Optional[dict] = field(default=None, compare=False)
    window: Optional[tuple] = None
    tie: bool = False

    @property
    def mu_L(self) -> float:
        return math.nan if self.signal is NULL else self.signal.mu_L

    @property
    def mu_R(self) -> float:
        return math.nan if self.signal is NULL else self.signal.mu_R

    @property
    def nondegenerate(self) -> bool:
        return self.signal is not NULL

    def to_dict(self) -> dict:
        d = {
            "signal": self.signal.to_dict(),
            "regime": self.regime.value,
            "effective_cost": self.effective_cost,
            "attention": self.attention,
            "value": self.value,
            "slack": self.slack,
            "boundary": self.boundary,
        }
        if self.participation is not None:
            d["participation"] = {str(k): v for k, v in self.participation.items()}
        if self.window is not None:
            d["window"] = list(self.window)
            d["tie"] = self.tie
        return d


# --------------------------------------------------------------------------
# common-tangent primitive


def _clip(x: float) -> float:
    return -1.0 if x < -1.0 else (1.0 if x > 1.0 else x)


def _tangent(v: float, c: float, att: AttentionSpec, tol: Tolerances) -> Optional[tuple]:
    """Utility-maximizing binary signal for a default-L voter (``v <= 0``).

    Returns ``(mu_L, mu_R, value)`` or ``None`` when no informative signal
    beats abstention.
    """
    if v <= -1.0:
        return None
    h, hinv = att.h, att.h_prime_inv

    def points(s):
        return _clip(hinv(-s / c)), _clip(hinv((1.0 - s) / c))

    def D(s):
        mL, mR = points(s)
        return (v + mR - c * h(mR) - s * mR) - (-c * h(mL) - s * mL)

    lo, hi = -1.0, 1.0
    for _ in range(tol.max_iter):
        if D(lo) > 0.0:
            break
        lo *= 2.0
    else:
        raise NumericFailure("tangent slope bracket (low side) not found", v=v, cost=c)
    for _ in range(tol.max_iter):
        if D(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise NumericFailure("tangent slope bracket (high side) not found", v=v, cost=c)
    s = brentq(D, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=max(tol.max_iter, 200))
    mL, mR = points(s)
    if not (mL < 0.0 < mR):
        return None
    value = -c * h(mL) - s * mL
    if value <= 0.0:
        return None
    return mL, mR, value


def _left_form(spec: ModelSpec, a: float, k: int) -> tuple[float, bool]:
    """``v`` seen by the default-L reflection of type ``k``; flag if mirrored."""
    v = spec.v_sym(a, k)
    return (v, False) if k <= 0 else (-v, True)


def _degenerate(cost: float) -> SignalSolveResult:
    return SignalSolveResult(NULL, Regime.DEGENERATE, cost, 0.0, 0.0, 0.0)


def competitive_signal(
    spec: ModelSpec, a: float, k: int, cost: Optional[float] = None, tol: Tolerances = DEFAULT_TOL
) -> SignalSolveResult:
    """Maximize ``V - cost * I`` over binary and null signals.

    ``cost`` defaults to the model's marginal attention cost, which is the
    competitive-infomediary case.
    """
    c = spec.lam if cost is None else float(cost)
    if not c > 0.0:
        raise ValueError("effective cost must be positive")
    att = spec.attention
    w, flipped = _left_form(spec, a, k)
    sol = _tangent(w, c, att, tol)
    if sol is None:
        return _degenerate(c)
    sig = BinarySignal(sol[0], sol[1])
    if flipped:
        sig = mirror(sig)
    I = attention_cost(sig, att)
    V = gain_of_consumption(sig, spec, a, k)
    regime = Regime.FULL_DISCLOSURE if sig.is_full_disclosure else Regime.INTERIOR
    return SignalSolveResult(sig, regime, c, I, V, V - c * I, boundary=sig.at_boundary)


# --------------------------------------------------------------------------
# personalized news


def optimal_personalized_signal(
    spec: ModelSpec, a: float, k: int, tol: Tolerances = DEFAULT_TOL
) -> SignalSolveResult:
    """Attention-maximizing signal subject to the voter's participation.

    Full disclosure is returned whenever the voter accepts it. Otherwise
    the participation constraint binds and the solution is the competitive
    signal at the effective cost where ``V = lam * I``; that cost is found
    by bracketing on ``(0, lam)``, along which the residual is increasing.
    """
    lam, att = spec.lam, spec.attention
    w, flipped = _left_form(spec, a, k)

    def finish(mL, mR, cost, regime):
        sig = BinarySignal(mL, mR)
        if flipped:
            sig = mirror(sig)
        I = attention_cost(sig, att)
        V = gain_of_consumption(sig, spec, a, k)
        return SignalSolveResult(sig, regime, cost, I, V, V - lam * I, boundary=sig.at_boundary)

    if 0.5 * max(w + 1.0, 0.0) >= lam * att.h(1.0):
        return finish(-1.0, 1.0, 0.0, Regime.FULL_DISCLOSURE)

    def residual(c):
        sol = _tangent(w, c, att, tol)
        if sol is None:
            return -math.inf if c < lam / 2 else 0.0
        mL, mR, _ = sol
        d = mR - mL
        V = -mL / d * max(w + mR, 0.0)
        I = (mR * att.h(mL) - mL * att.h(mR)) / d
        return V - lam * I

    hi = lam * (1.0 - EPS_COST)
    g_hi = residual(hi)
    if g_hi <= 0.0:
        return _degenerate(lam)
    lo = EPS_COST
    g_lo = residual(lo)
    if not g_lo < 0.0:
        raise NumericFailure("participation residual has no sign change", g_lo=g_lo, g_hi=g_hi)

    path = []

    def traced(c):
        g = residual(c)
        path.append((c, g))
        return g

    c_star = brentq(traced, lo, hi, xtol=tol.tol_root * 1e-2, maxiter=tol.max_iter)
    path.sort()
    gs = [g for _, g in path]
    if any(g2 < g1 - tol.tol_bind for g1, g2 in zip(gs, gs[1:])):
        raise NumericFailure("participation residual not monotone along the bracket", path=path)
    sol = _tangent(w, c_star, att, tol)
    if sol is None:
        raise NumericFailure("binding signal degenerated", cost=c_star)
    res = finish(sol[0], sol[1], c_star, Regime.BINDING)
    if abs(res.slack) >= tol.tol_bind:
        raise NumericFailure("participation not binding at solution", slack=res.slack, cost=c_star)
    return res


# --------------------------------------------------------------------------
# broadcast news


def _participation(spec: ModelSpec, sig: Signal, a: float, tol: Tolerances) -> dict:
    I = attention_cost(sig, spec.attention)
    out = {}
    for k in spec.types:
        slack = gain_of_consumption(sig, spec, a, k) - spec.lam * I
        if abs(slack) <= tol.tol_bind:
            out[k] = "binding"
        elif slack > 0:
            out[k] = "slack"
        else:
            out[k] = "excluded"
    return out


def _demand(spec: ModelSpec, part: dict) -> float:
    return math.fsum(spec.pop(k) for k, s in part.items() if s != "excluded")


def _symmetric_root(w: float, lam: float, att: AttentionSpec) -> Optional[float]:
    """Most negative root of ``(-w - mu)/2 = lam h(mu)`` on ``[-1, -w]``."""
    F = lambda m: 0.5 * (-w - m) - lam * att.h(m)
    if F(-1.0) >= 0.0:
        return -1.0
    peak = min(max(att.h_prime_inv(-0.5 / lam), -1.0), -w)
    if peak >= 0.0 or F(peak) <= 0.0:
        return None
    return brentq(F, -1.0, peak, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _constraint_interval(spec, a, k, mL, att):
    """Feasible ``mu_R`` interval of type ``k``'s participation for fixed ``mu_L``."""
    lam, v = spec.lam, spec.v_sym(a, k)
    hL = att.h(mL)
    if k <= 0:
        lo_dom = max(-v, 0.0)

        def c(mR):
            return -mL * (v + mR) - lam * (mR * hL - mL * att.h(mR))

    else:
        if -v - mL <= 0.0:
            return None
        lo_dom = 0.0

        def c(mR):
            return mR * (-v - mL) - lam * (mR * hL - mL * att.h(mR))

    if lo_dom >= 1.0:
        return None
    # c is concave in mu_R; its peak solves lam mu_L h'(mu_R) = lam h(mu_L) + mu_L (+ v on the right)
    target = (lam * hL + mL + (v if k > 0 else 0.0)) / (lam * mL)
    top = min(max(att.h_prime_inv(target), lo_dom), 1.0)
    ctop = c(top)
    if ctop < 0.0:
        return None
    hi = 1.0 if c(1.0) >= 0.0 else brentq(c, top, 1.0, xtol=1e-15)
    lo = lo_dom if c(lo_dom) >= 0.0 else brentq(c, lo_dom, top, xtol=1e-15)
    if lo <= 0.0:
        lo = 0.0
    return lo, hi


def _window_signal(spec: ModelSpec, a: float, k1: int, k2: int) -> Optional[BinarySignal]:
    """Most informative binary signal that both window extremes accept."""
    att = spec.attention
    ends = sorted({k1, k2})

    def best_mR(mL):
        ivs = [_constraint_interval(spec, a, k, mL, att) for k in ends]
        if any(iv is None for iv in ivs):
            return None
        lo, hi = max(iv[0] for iv in ivs), min(iv[1] for iv in ivs)
        return hi if hi > max(lo, 0.0) else None

    def J(mL):
        mR = best_mR(mL)
        if mR is None:
            return -math.inf
        return (mR * att.h(mL) - mL * att.h(mR)) / (mR - mL)

    grid = np.linspace(-1.0, -1e-9, 201)
    vals = np.array([J(float(x)) for x in grid])
    if not np.isfinite(vals).any():
        return None
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    opt = minimize_scalar(
        lambda x: -J(x) if np.isfinite(J(x)) else 1e9, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13}
    )
    cands = [(vals[i], float(grid[i])), (-float(opt.fun), float(opt.x))]
    _, mL = max(cands)
    mR = best_mR(mL)
    return BinarySignal(mL, mR)


def optimal_broadcast_signal(spec: ModelSpec, a: float, tol: Tolerances = DEFAULT_TOL) -> SignalSolveResult:
    """Profit-maximizing common signal with a per-type participation report.

    When every voter is served, the extreme types bind and the signal is
    symmetric; its left posterior is the most negative root of the binding
    equation of type ``-K``. That candidate is accepted without further
    search when it beats the best conceivable profit of any window that
    excludes someone (personalized median attention times the largest
    non-full demand). Otherwise all windows ``{k1..k2}`` containing 0 are
    enumerated and the one with highest attention times demand wins, the
    widest one on ties.
    """
    lam, att, K = spec.lam, spec.attention, spec.K
    fd = BinarySignal(-1.0, 1.0)
    part = _participation(spec, fd, a, tol)
    if all(s != "excluded" for s in part.values()):
        I = att.h(1.0)
        V = min(gain_of_consumption(fd, spec, a, k) for k in spec.types)
        return SignalSolveResult(fd, Regime.FULL_DISCLOSURE, 0.0, I, V, V - lam * I, True, part, (-K, K))

    if optimal_personalized_signal(spec, a, 0, tol).signal is NULL:
        # every window contains the median, who accepts no informative signal
        return _degenerate(lam)
    w = -spec.v_sym(a, -K)
    root = _symmetric_root(w, lam, att)
    sym = None
    if root is not None and root < 0.0:
        sig = BinarySignal(root, -root)
        part = _participation(spec, sig, a, tol)
        if all(s != "excluded" for s in part.values()):
            sym = (sig, part)

    candidates = []
    if sym is not None:
        sig, part = sym
        I_sym = attention_cost(sig, att)
        candidates.append((I_sym * _demand(spec, part), 2 * K, (-K, K), sig, part))
        # Windows missing both extremes serve at most 1 - 2q(K) and cannot
        # beat the median's personalized attention; windows missing one
        # extreme serve at most 1 - q(K) and must satisfy the other one.
        I0 = optimal_personalized_signal(spec, a, 0, tol).attention
        IK = optimal_personalized_signal(spec, a, -K, tol).attention
        qK = spec.pop(K)
        bound = max((1.0 - 2.0 * qK) * I0, (1.0 - qK) * min(I0, IK))
        if I_sym * _demand(spec, part) >= bound:
            return _broadcast_result(spec, a, candidates[0], False, tol)

    for k1 in range(-K, 1):
        for k2 in range(0, K + 1):
            if sym is not None and (k1, k2) == (-K, K):
                continue
            sig = _window_signal(spec, a, k1, k2)
            if sig is None:
                continue
            part = _participation(spec, sig, a, tol)
            D = _demand(spec, part)
            if D <= 0.0:
                continue
            candidates.append((attention_cost(sig, att) * D, k2 - k1, (k1, k2), sig, part))
    if not candidates:
        return _degenerate(lam)
    best = max(c[0] for c in candidates)
    top = [c for c in candidates if c[0] >= best - 1e-12 * max(best, 1.0)]
    top.sort(key=lambda c: (c[1], c[0]), reverse=True)
    tie = len({c[2] for c in top}) > 1
    return _broadcast_result(spec, a, top[0], tie, tol)


def _broadcast_result(spec, a, cand, tie, tol) -> SignalSolveResult:
    _, _, window, sig, part = cand
    att, lam = spec.attention, spec.lam
    I = attention_cost(sig, att)
    consumers = [k for k, s in part.items() if s != "excluded"]
    gains = [gain_of_consumption(sig, spec, a, k) for k in consumers]
    V = min(gains)
    if sig.is_full_disclosure:
        regime = Regime.FULL_DISCLOSURE
    else:
        regime = Regime.BINDING
    symmetric = abs(sig.mu_L + sig.mu_R) <= 1e-12
    if symmetric and not sig.at_boundary:
        cost = 1.0 / (2.0 * att.h_prime(sig.mu_R))
    else:
        cost = math.nan
    return SignalSolveResult(sig, regime, cost, I, V, V - lam * I, sig.at_boundary, part, window, tie)


# --------------------------------------------------------------------------
# per-type signal profiles


@lru_cache(maxsize=200_000)
def _profile(spec: ModelSpec, technology: Technology, a: float, tol: Tolerances) -> tuple:
    if technology is Technology.BROADCAST:
        res = optimal_broadcast_signal(spec, a, tol)
        return tuple(res for _ in spec.types)
    if technology is Technology.PERSONALIZED:
        return tuple(optimal_personalized_signal(spec, a, k, tol) for k in spec.types)
    return tuple(competitive_signal(spec, a, k, None, tol) for k in spec.types)


def signal_profile(
    spec: ModelSpec, technology, a: float, tol: Tolerances = DEFAULT_TOL
) -> dict[int, SignalSolveResult]:
    """Signal consumed by each type at ``<-a, a>`` (memoized)."""
    res = _profile(spec, Technology(technology), float(a), tol)
    return dict(zip(spec.types, res))


# --------------------------------------------------------------------------
# diagnostics


def default_a_grid(spec: ModelSpec, n: int = 21) -> np.ndarray:
    tmax = max(spec.t)
    pts = np.concatenate([np.linspace(0.0, spec.a_bar, n), np.linspace(0.0, tmax, n), [x for x in spec.t if x >= 0]])
    return np.unique(pts)


@dataclass
class Assumption2Report:
    technology: Technology
    passed: bool
    failures: list = field(default_factory=list)  # (a, segment, reason)
    checked: int = 0

    @property
    def reasons(self) -> set:
        return {f[2] for f in self.failures}


def _segment_failure(res: SignalSolveResult, spec: ModelSpec, a: float, members) -> Optional[str]:
    if res.signal is NULL:
        return "degenerate"
    if res.signal.at_boundary:
        return "posterior at boundary"
    if res.participation is not None and any(res.participation[k] == "excluded" for k in members):
        return "voter excluded"
    if not all(check_strict_obedience(res.signal, spec, a, k) for k in members):
        return "strict obedience fails"
    return None


def assumption2_check(
    spec: ModelSpec, technology, a_grid=None, tol: Tolerances = DEFAULT_TOL, stop_early: bool = False
) -> Assumption2Report:
    """Uniform strict obedience on a policy grid.

    Every segment's optimal signal must be nondegenerate, consumed by all
    of its voters, strictly obeyed, and have posteriors inside (-1, 1).
    """
    technology = Technology(technology)
    grid = default_a_grid(spec) if a_grid is None else np.asarray(a_grid, dtype=float)
    report = Assumption2Report(technology, True)
    for a in grid:
        a = float(a)
        try:
            prof = signal_profile(spec, technology, a, tol)
        except NumericFailure as exc:
            report.failures.append((a, None, f"numeric failure: {exc}"))
            continue
        if technology is Technology.BROADCAST:
            segments = [(tuple(spec.types), prof[0])]
        else:
            segments = [((k,), prof[k]) for k in spec.types]
        for members, res in segments:
            report.checked += 1
            why = _segment_failure(res, spec, a, members)
            if why:
                seg = "all" if len(members) > 1 else members[0]
                report.failures.append((a, seg, why))
        if stop_early and report.failures:
            break
    report.passed = not report.failures
    return report


def skewness_report(spec: ModelSpec, a: float, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Check the symmetry and skewness pattern of optimal signals at ``a > 0``.

    Returns ``{"checks": {name: bool}, "values": {...}, "passed": bool}``.
    """
    pers = signal_profile(spec, Technology.PERSONALIZED, a, tol)
    brd = signal_profile(spec, Technology.BROADCAST, a, tol)[0]
    checks, values = {}, {}
    b = brd.signal
    values["broadcast"] = b.to_dict()
    checks["broadcast_symmetric"] = b is not NULL and abs(b.pi_R - 0.5) <= 1e-9 and abs(b.mu_L + b.mu_R) <= 1e-9
    for k in spec.types:
        s = pers[k].signal
        values[str(k)] = {"mu_L": s.mu_L, "mu_R": s.mu_R, "pi_R": s.pi_R}
        if k == 0:
            checks["median_symmetric"] = abs(s.pi_R - 0.5) <= 1e-9 and abs(s.mu_L + s.mu_R) <= 1e-9
        elif k < 0:
            checks[f"skew_{k}"] = s.pi_R < 0.5 and abs(s.mu_L) < s.mu_R
        else:
            checks[f"skew_{k}"] = s.pi_R > 0.5 and abs(s.mu_L) > s.mu_R
        m = pers[-k].signal
        checks[f"mirror_{k}"] = abs(abs(m.mu_L) - s.mu_R) <= 1e-8
        checks[f"obedience_{k}"] = check_strict_obedience(s, spec, a, k)
        checks[f"bayes_{k}"] = abs(s.pi_L * s.mu_L + s.pi_R * s.mu_R) <= 1e-12
        checks[f"attention_{k}"] = brd.attention < pers[k].attention
    return {"checks": checks, "values": values, "passed": all(checks.values())}
