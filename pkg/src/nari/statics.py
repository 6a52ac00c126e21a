"""Comparative statics: technology, attention cost, mass polarization, richness."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .equilibrium import (
    ConfigKind,
    NewsConfiguration,
    build_canonical_configuration,
    equilibrium_set,
    policy_latitude,
    solve_consistent_b,
    _require_consistency,
    _sigma,
)
from .model import CostKind, ModelError, ModelSpec, Technology
from .optimizer import (
    DEFAULT_TOL,
    AssumptionViolation,
    NumericFailure,
    Tolerances,
    assumption2_check,
    signal_profile,
)

__all__ = [
    "Axis",
    "ConditionEvaluation",
    "RegionGrid",
    "competitive_comparison",
    "compare_personalization",
    "evaluate_conditions",
    "lambda_sweep",
    "mass_polarization_effect",
    "random_consistent_configuration",
    "region_scan",
    "sosd_compare",
    "worker_count",
]


def worker_count() -> int:
    """Worker cap from ``NARI_THREADS`` (defaults to the CPU count)."""
    n = os.cpu_count() or 1
    env = os.environ.get("NARI_THREADS")
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            pass
    return n


def _upsilon(spec: ModelSpec, technology: Technology, k: int, tol: Tolerances) -> tuple[float, float]:
    """Posteriors at the policy where a type's valuation stops changing under distance utility."""
    anchor = spec.bliss(spec.K) if technology is Technology.BROADCAST else abs(spec.bliss(k))
    res = signal_profile(spec, technology, anchor, tol)[k]
    return res.mu_L, res.mu_R


# --------------------------------------------------------------------------
# condition evaluation


@dataclass
class ConditionEvaluation:
    """Both comparison conditions at one model, gated by uniform strict obedience.

    ``star``/``doublestar`` are ``None`` when the model fails uniform strict
    obedience (unevaluable).
    """

    assumption2: bool
    star: Optional[bool] = None
    star_lhs: float = math.nan
    star_rhs: float = math.nan
    doublestar: Optional[bool] = None
    doublestar_branch: Optional[str] = None  # "automatic", "a" (base) or "b" (opposition)
    doublestar_lhs: float = math.nan
    doublestar_rhs: float = math.nan
    xi_b0: float = math.nan
    xi_p: dict = field(default_factory=dict)
    diagnostic: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["xi_p"] = {str(k): v for k, v in self.xi_p.items()}
        return d


def _a2_grid(spec: ModelSpec) -> np.ndarray:
    tK = spec.bliss(spec.K)
    pts = list(np.linspace(0.0, tK, 5)) + [x for x in spec.t if x > 0] + [spec.a_bar]
    return np.unique(pts)


def evaluate_conditions(
    spec: ModelSpec, tol: Tolerances = DEFAULT_TOL, fast: Optional[bool] = None, a_grid=None
) -> ConditionEvaluation:
    """Evaluate the skewness condition ``(*)`` and the personalization condition ``(**)``.

    Both compare the extreme types ``+-K`` with the median. ``fast`` uses the
    latitude decomposition ``xi = -t(k) + |upsilon_L|``, valid for distance
    utility; otherwise latitudes are solved by bisection. The default uses
    the fast path when it applies.
    """
    from .model import UtilityKind

    if fast is None:
        fast = spec.utility is UtilityKind.DISTANCE
    K, tK = spec.K, spec.bliss(spec.K)
    P, B = Technology.PERSONALIZED, Technology.BROADCAST
    if a_grid is None:
        a_grid = _a2_grid(spec) if spec.utility is UtilityKind.DISTANCE else None
    try:
        ok = all(assumption2_check(spec, tech, a_grid, tol, stop_early=True).passed for tech in (P, B))
    except (NumericFailure, AssumptionViolation) as exc:
        return ConditionEvaluation(False, diagnostic=str(exc))
    if not ok:
        return ConditionEvaluation(False, diagnostic="uniform strict obedience fails")
    try:
        uLK, uRK = _upsilon(spec, P, K, tol)
        uLm, _ = _upsilon(spec, P, -K, tol)
        uLb, _ = _upsilon(spec, B, 0, tol)
        if fast:
            xi_p = {k: -spec.bliss(k) + abs(_upsilon(spec, P, k, tol)[0]) for k in (-K, 0, K)}
            xi_b0 = abs(uLb)
        else:
            xi_p = {k: policy_latitude(spec, P, [k], tol).xi for k in (-K, 0, K)}
            xi_b0 = policy_latitude(spec, B, [0], tol).xi
    except (NumericFailure, AssumptionViolation) as exc:
        return ConditionEvaluation(False, diagnostic=str(exc))

    ev = ConditionEvaluation(True, xi_b0=xi_b0, xi_p=xi_p)
    ev.star_lhs, ev.star_rhs = abs(uLK) - uRK, 2.0 * tK
    ev.star = ev.star_lhs > ev.star_rhs
    if xi_b0 <= tK:
        ev.doublestar_branch = "automatic"
        ev.doublestar_lhs, ev.doublestar_rhs = xi_b0, tK
        ev.doublestar = True
    elif xi_p[-K] < xi_p[K]:
        # opposition voters discipline among the extremes
        ev.doublestar_branch = "b"
        ev.doublestar_lhs, ev.doublestar_rhs = abs(spec.bliss(-K)), abs(uLb) - abs(uLm)
        ev.doublestar = ev.doublestar_lhs > ev.doublestar_rhs
    else:
        ev.doublestar_branch = "a"
        ev.doublestar_lhs, ev.doublestar_rhs = abs(uLK) - abs(uLb), tK
        ev.doublestar = ev.doublestar_lhs > ev.doublestar_rhs
    return ev


# --------------------------------------------------------------------------
# technology and cost comparisons


def _config(kind: ConfigKind, spec: ModelSpec, technology: Technology, tol: Tolerances):
    a = spec.bliss(spec.K)
    return build_canonical_configuration(kind, spec, technology, a, tol)


def compare_personalization(spec: ModelSpec, q=None, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Polarization under broadcast (common recommendation) vs personalized
    (independent) news, with the conditions explaining the direction."""
    if q is not None:
        spec = spec.with_(q=tuple(q))
    B, P = Technology.BROADCAST, Technology.PERSONALIZED
    eb = equilibrium_set(spec, B, _config(ConfigKind.BROADCAST_STAR, spec, B, tol), tol=tol)
    ep = equilibrium_set(spec, P, _config(ConfigKind.INDEPENDENT_STAR_STAR, spec, P, tol), tol=tol)
    cond = evaluate_conditions(spec, tol)
    if ep.a_star > eb.a_star:
        direction = "increase"
    elif ep.a_star < eb.a_star:
        direction = "decrease"
    else:
        direction = "equal"
    decomp = {
        "personalized": {str(k): list(policy_latitude(spec, P, [k], tol).components) for k in spec.types},
        "broadcast": {"0": list(policy_latitude(spec, B, [0], tol).components)},
    }
    return {
        "a_b": eb.a_star,
        "a_p": ep.a_star,
        "disciplining_b": sorted(eb.disciplining),
        "disciplining_p": sorted(ep.disciplining),
        "direction": direction,
        "conditions": cond.to_dict(),
        "decompositions": decomp,
    }


def lambda_sweep(
    spec: ModelSpec,
    lambdas: Sequence[float],
    technologies: Sequence = (Technology.BROADCAST, Technology.PERSONALIZED),
    tol: Tolerances = DEFAULT_TOL,
) -> dict:
    """Policy polarization along a ladder of marginal attention costs.

    Points failing uniform strict obedience are recorded and left out of
    the monotonicity verdict.
    """
    rows = []
    monotone = {}
    for tech in map(Technology, technologies):
        kind = ConfigKind.BROADCAST_STAR if tech is Technology.BROADCAST else ConfigKind.INDEPENDENT_STAR_STAR
        seq = []
        for lam in lambdas:
            s = spec.with_(lam=float(lam))
            row = {"technology": tech.value, "lambda": float(lam), "a_star": None, "assumption2": True, "error": ""}
            try:
                rep = assumption2_check(s, tech, tol=tol, stop_early=True)
                if not rep.passed:
                    raise AssumptionViolation("; ".join(sorted(rep.reasons)), rep)
                e = equilibrium_set(s, tech, _config(kind, s, tech, tol), tol=tol)
                row["a_star"] = e.a_star
                seq.append(e.a_star)
            except AssumptionViolation as exc:
                row["assumption2"] = False
                row["error"] = str(exc)
            except (NumericFailure, ModelError, ValueError) as exc:
                row["error"] = str(exc)
            rows.append(row)
        order = np.argsort(lambdas, kind="stable")
        ok_vals = [rows[-len(lambdas) + i]["a_star"] for i in order]
        ok_vals = [v for v in ok_vals if v is not None]
        monotone[tech.value] = all(b < a for a, b in zip(ok_vals, ok_vals[1:]))
    return {"rows": rows, "strictly_decreasing": monotone}


def sosd_compare(q: Sequence[float], q_prime: Sequence[float], tol: float = 1e-12) -> bool:
    """Whether ``q`` dominates ``q_prime`` in the tail-sum sense (less mass toward extremes)."""
    q, qp = np.asarray(q, dtype=float), np.asarray(q_prime, dtype=float)
    if q.shape != qp.shape or q.size % 2 != 1:
        raise ValueError("population functions must be defined on the same type set")
    K = q.size // 2
    for m in range(1, K + 1):
        if math.fsum(q[K + m :]) > math.fsum(qp[K + m :]) + tol:
            return False
    return True


def mass_polarization_effect(spec: ModelSpec, chi, q, q_prime, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Personalized polarization under ``q`` vs a more polarized ``q_prime``.

    ``chi`` is a configuration, a raw 0/1 matrix or a canonical kind.
    """
    if not sosd_compare(q, q_prime):
        raise ValueError("q must dominate q_prime")
    if spec.K > 1 and spec.cost is not CostKind.QUADRATIC:
        raise ValueError("the general ordering is established for quadratic attention cost only")
    P = Technology.PERSONALIZED
    if isinstance(chi, (str, ConfigKind)):
        chi = _config(ConfigKind(chi), spec, P, tol)
    ea = equilibrium_set(spec, P, chi, q=q, tol=tol)
    eb = equilibrium_set(spec, P, chi, q=q_prime, tol=tol)
    out = {
        "a_q": ea.a_star,
        "a_q_prime": eb.a_star,
        "holds": ea.a_star >= eb.a_star - 1e-12,
        "strict": ea.a_star > eb.a_star + 1e-12,
    }
    if spec.K == 1:
        xi = {k: policy_latitude(spec.with_(q=tuple(q)), P, [k], tol).xi for k in spec.types}
        out["strict_expected"] = bool(q[1] > 0.5 >= q_prime[1] and min(xi[-1], xi[1]) < xi[0])
    return out


def competitive_comparison(
    spec: ModelSpec, chi_c, chi_p, q=None, tol: Tolerances = DEFAULT_TOL
) -> dict:
    """Polarization under competitive infomediaries vs a personalized monopolist.

    ``chi_c`` must be at least as rich as ``chi_p``.
    """
    C, P = Technology.COMPETITIVE, Technology.PERSONALIZED
    if q is not None:
        spec = spec.with_(q=tuple(q))

    def resolve(chi, tech):
        if isinstance(chi, (str, ConfigKind)):
            return _config(ConfigKind(chi), spec, tech, tol)
        return chi

    chi_c, chi_p = resolve(chi_c, C), resolve(chi_p, P)
    cols = lambda c: {tuple(int(x) for x in col) for col in np.asarray(getattr(c, "chi", c)).T}
    if not cols(chi_p) <= cols(chi_c):
        raise ValueError("competitive configuration must be at least as rich as the personalized one")
    ec = equilibrium_set(spec, C, chi_c, tol=tol)
    ep = equilibrium_set(spec, P, chi_p, tol=tol)
    xi_c = {k: policy_latitude(spec, C, [k], tol).xi for k in spec.types}
    xi_p = {k: policy_latitude(spec, P, [k], tol).xi for k in spec.types}
    return {
        "a_c": ec.a_star,
        "a_p": ep.a_star,
        "xi_c": {str(k): v for k, v in xi_c.items()},
        "xi_p": {str(k): v for k, v in xi_p.items()},
        "latitudes_dominated": all(xi_c[k] < xi_p[k] for k in spec.types),
        "holds": ec.a_star < ep.a_star,
    }


# --------------------------------------------------------------------------
# random consistent configurations


def random_consistent_configuration(
    spec: ModelSpec, technology, a: float, seed: int, max_tries: int = 50
) -> Optional[NewsConfiguration]:
    """Delete random symmetric column pairs from ``chi**`` and re-solve ``b``.

    A draw is kept only if positive consistent ``b`` also exist across the
    policy range, so the result is usable by ``equilibrium_set``. Returns ``None`` if no draw within ``max_tries`` admits strictly positive
    consistent probability vectors.
    """
    rng = np.random.default_rng(seed)
    full = build_canonical_configuration(ConfigKind.INDEPENDENT_STAR_STAR, spec, technology, a)
    cols = full.chi.T
    lookup = {tuple(c): i for i, c in enumerate(cols)}
    orbits = sorted({tuple(sorted((i, lookup[tuple(_sigma(c))]))) for i, c in enumerate(cols)})
    for _ in range(max_tries):
        n_drop = int(rng.integers(1, max(2, len(orbits) // 2)))
        drop = rng.choice(len(orbits), size=n_drop, replace=False)
        keep = sorted(i for j, orb in enumerate(orbits) if j not in set(drop.tolist()) for i in set(orb))
        cfg = solve_consistent_b(cols[keep].T, spec, technology, a)
        if cfg is None:
            continue
        try:
            _require_consistency(cfg.chi, spec, Technology(technology), DEFAULT_TOL)
        except AssumptionViolation:
            continue
        return cfg
    return None


# --------------------------------------------------------------------------
# region scans


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("axis needs at least one point")
        if self.n > 1 and not self.lo < self.hi:
            raise ValueError(f"axis {self.name}: lo must be below hi")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n) if self.n > 1 else np.array([self.lo])

    @classmethod
    def from_any(cls, x) -> "Axis":
        if isinstance(x, Axis):
            return x
        if isinstance(x, dict):
            return cls(str(x["name"]), float(x["lo"]), float(x["hi"]), int(x["n"]))
        name, lo, hi, n = x
        return cls(str(name), float(lo), float(hi), int(n))


def _apply(spec: ModelSpec, name: str, value: float) -> ModelSpec:
    if name in ("lambda", "lam"):
        return spec.with_(lam=value)
    if name == "t1":
        if spec.K != 1:
            raise ValueError("axis t1 requires the three-type model")
        return spec.with_(t=(-value, 0.0, value))
    if name == "q0":
        if spec.K != 1:
            raise ValueError("axis q0 requires the three-type model")
        e = (1.0 - value) / 2.0
        return spec.with_(q=(e, value, e))
    if name == "a_bar":
        return spec.with_(a_bar=value)
    raise ValueError(f"unknown axis {name!r}")


@dataclass
class RegionGrid:
    x_axis: Axis
    y_axis: Axis
    cells: list  # row-major: cells[i][j] at (x_i, y_j)
    checks: tuple = ("assumption2", "star", "doublestar")

    def __post_init__(self):
        if len(self.cells) != self.x_axis.n or any(len(r) != self.y_axis.n for r in self.cells):
            raise ValueError("cell matrix does not match the axes")

    def field(self, name: str) -> np.ndarray:
        """Matrix of a boolean check with ``nan`` for unevaluable cells."""
        out = np.full((self.x_axis.n, self.y_axis.n), np.nan)
        for i, row in enumerate(self.cells):
            for j, c in enumerate(row):
                v = getattr(c, name)
                if v is not None:
                    out[i, j] = float(v)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "assumption2", "star", "doublestar"])
        fmt = lambda b: "" if b is None else ("true" if b else "false")
        for i, x in enumerate(self.x_axis.values()):
            for j, y in enumerate(self.y_axis.values()):
                c = self.cells[i][j]
                w.writerow([repr(float(x)), repr(float(y)), fmt(c.assumption2), fmt(c.star), fmt(c.doublestar)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "x_axis": asdict(self.x_axis),
            "y_axis": asdict(self.y_axis),
            "checks": list(self.checks),
            "cells": [[c.to_dict() for c in row] for row in self.cells],
        }


def _cell(args):
    spec, xname, x, yname, y, tol = args
    try:
        s = _apply(_apply(spec, xname, x), yname, y)
    except (ModelError, ValueError) as exc:
        return ConditionEvaluation(False, diagnostic=str(exc))
    try:
        return evaluate_conditions(s, tol)
    except Exception as exc:  # per-cell diagnostics never abort the grid
        return ConditionEvaluation(False, diagnostic=f"{type(exc).__name__}: {exc}")


def region_scan(
    base_spec: ModelSpec,
    x_axis,
    y_axis,
    checks: Sequence[str] = ("assumption2", "star", "doublestar"),
    tol: Tolerances = DEFAULT_TOL,
    workers: Optional[int] = None,
) -> RegionGrid:
    """Evaluate the conditions on a two-parameter grid.

    Cells that fail uniform strict obedience keep ``star`` and
    ``doublestar`` unset. Cells are independent; with more than one worker
    they run in a process pool and are reassembled by index.
    """
    xa, ya = Axis.from_any(x_axis), Axis.from_any(y_axis)
    bad = set(checks) - {"assumption2", "star", "doublestar"}
    if bad:
        raise ValueError(f"unknown checks {sorted(bad)}")
    jobs = [(base_spec, xa.name, float(x), ya.name, float(y), tol) for x in xa.values() for y in ya.values()]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            flat = list(ex.map(_cell, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        flat = [_cell(j) for j in jobs]
    for c in flat:
        if "star" not in checks:
            c.star = None
        if "doublestar" not in checks:
            c.doublestar = None
    cells = [flat[i * ya.n : (i + 1) * ya.n] for i in range(xa.n)]
    return RegionGrid(xa, ya, cells, tuple(checks))
