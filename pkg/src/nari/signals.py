"""Binary news signals identified by their posterior means."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .model import AttentionSpec, ModelSpec

__all__ = [
    "BinarySignal",
    "NULL",
    "NullSignal",
    "Signal",
    "attention_cost",
    "check_strict_obedience",
    "conditionals",
    "gain_of_consumption",
    "mirror",
    "signal_from_dict",
]


class SignalError(ValueError):
    pass


@dataclass(frozen=True)
class BinarySignal:
    """Two-realization signal ``<mu_L, mu_R>`` with ``-1 <= mu_L < 0 < mu_R <= 1``.

    Realization probabilities follow from Bayes plausibility.
    """

    mu_L: float
    mu_R: float

    def __post_init__(self):
        if not (-1.0 <= self.mu_L < 0.0):
            raise SignalError(f"mu_L={self.mu_L!r} outside [-1, 0)")
        if not (0.0 < self.mu_R <= 1.0):
            raise SignalError(f"mu_R={self.mu_R!r} outside (0, 1]")

    @property
    def spread(self) -> float:
        return self.mu_R - self.mu_L

    @property
    def pi_L(self) -> float:
        return self.mu_R / (self.mu_R - self.mu_L)

    @property
    def pi_R(self) -> float:
        return -self.mu_L / (self.mu_R - self.mu_L)

    @property
    def is_full_disclosure(self) -> bool:
        return self.mu_L == -1.0 and self.mu_R == 1.0

    @property
    def at_boundary(self) -> bool:
        return self.mu_L == -1.0 or self.mu_R == 1.0

    def to_dict(self) -> dict:
        return {"mu_L": self.mu_L, "mu_R": self.mu_R}


class NullSignal:
    """The uninformative signal; a singleton."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NULL"

    def __reduce__(self):
        return (NullSignal, ())

    def to_dict(self) -> dict:
        return {"null": True}


NULL = NullSignal()

Signal = Union[BinarySignal, NullSignal]


def signal_from_dict(d: dict) -> Signal:
    if d.get("null"):
        return NULL
    return BinarySignal(float(d["mu_L"]), float(d["mu_R"]))


def mirror(sig: Signal) -> Signal:
    """Swap and negate the posteriors: the signal seen by the mirror type."""
    if sig is NULL:
        return NULL
    return BinarySignal(-sig.mu_R, -sig.mu_L)


def conditionals(sig: BinarySignal) -> tuple[float, float]:
    """Probability of an R-endorsement given ``omega = +1`` and ``omega = -1``."""
    d = sig.spread
    return -sig.mu_L * (1.0 + sig.mu_R) / d, -sig.mu_L * (1.0 - sig.mu_R) / d


def attention_cost(sig: Signal, att: AttentionSpec) -> float:
    if sig is NULL:
        return 0.0
    return sig.pi_L * att.h(sig.mu_L) + sig.pi_R * att.h(sig.mu_R)


def _gain(mu_L: float, mu_R: float, v: float, left: bool) -> float:
    d = mu_R - mu_L
    if left:
        return -mu_L / d * max(v + mu_R, 0.0)
    return -mu_R / d * min(v + mu_L, 0.0)


def gain_of_consumption(sig: Signal, spec: ModelSpec, a: float, k: int) -> float:
    """Expected utility gain of type ``k`` from consuming ``sig`` at ``<-a, a>``.

    Types ``k <= 0`` vote L by default and gain when an R-endorsement
    flips them; types ``k > 0`` the other way round.
    """
    if sig is NULL:
        return 0.0
    return _gain(sig.mu_L, sig.mu_R, spec.v_sym(a, k), k <= 0)


def check_strict_obedience(sig: Signal, spec: ModelSpec, a: float, k: int) -> bool:
    if sig is NULL:
        return False
    v = spec.v_sym(a, k)
    return v + sig.mu_L < 0.0 < v + sig.mu_R
