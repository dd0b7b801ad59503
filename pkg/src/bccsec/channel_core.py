"""Shared value types and the effective-noise normal form.

Every channel the package handles (a real Gaussian subchannel, or one
realization of a complex fading channel) is reduced to an
:class:`EffectiveState`: the noise levels ``a`` and ``b`` seen by receiver 1
and receiver 2 after dividing out the channel power gain, a rate prefactor
``c`` (1/2 for real channels, 1 for proper complex ones) and a probability
weight.  All rate and power formulas downstream are written once in terms of
``(a, b, c)``.

Rates are in bits per channel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence, Union

import numpy as np

__all__ = [
    "InvalidInput",
    "InvalidAllocation",
    "GaussianSubchannel",
    "FadingState",
    "EffectiveState",
    "StateBatch",
    "PowerAllocation",
    "RateTriple",
    "RatePoint",
    "effective_state",
    "as_batch",
    "total_power",
    "db_to_linear",
]

REAL = 0.5
COMPLEX = 1.0
_PREFACTORS = (REAL, COMPLEX)


class InvalidInput(ValueError):
    """A parameter is outside its documented domain."""


class InvalidAllocation(ValueError):
    """A power allocation violates the channel structure (e.g. p1 > 0 off A)."""


def _check_prefactor(c: float) -> float:
    if c not in _PREFACTORS:
        raise InvalidInput(f"prefactor must be 1/2 or 1, got {c!r}")
    return float(c)


def _check_positive(name: str, value: float) -> float:
    if not value > 0 or math.isnan(value):
        raise InvalidInput(f"{name} must be positive, got {value!r}")
    return float(value)


def _check_nonneg(name: str, value: float) -> float:
    if not value >= 0:
        raise InvalidInput(f"{name} must be nonnegative, got {value!r}")
    return float(value)


def db_to_linear(x_db: float) -> float:
    """Convert a power ratio in dB to linear scale."""
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class GaussianSubchannel:
    """Real Gaussian subchannel with noise variances at the two receivers."""

    mu_sq: float
    nu_sq: float

    def __post_init__(self):
        _check_positive("mu_sq", self.mu_sq)
        _check_positive("nu_sq", self.nu_sq)


@dataclass(frozen=True)
class FadingState:
    """One fading realization: power gains ``|h1|^2, |h2|^2`` and noise variances."""

    h1_sq: float
    h2_sq: float
    mu_sq: float = 1.0
    nu_sq: float = 1.0

    def __post_init__(self):
        _check_nonneg("h1_sq", self.h1_sq)
        _check_nonneg("h2_sq", self.h2_sq)
        _check_positive("mu_sq", self.mu_sq)
        _check_positive("nu_sq", self.nu_sq)


@dataclass(frozen=True)
class EffectiveState:
    """A subchannel or fading state in effective-noise form.

    ``a`` and ``b`` may be ``inf`` (zero channel gain).  The state belongs to
    the set A, where receiver 2 is degraded with respect to receiver 1, iff
    ``a < b`` strictly; ties go to the complement.
    """

    a: float
    b: float
    prefactor: float = REAL
    weight: float = 1.0

    def __post_init__(self):
        _check_positive("a", self.a)
        _check_positive("b", self.b)
        _check_prefactor(self.prefactor)
        _check_nonneg("weight", self.weight)

    @property
    def in_A(self) -> bool:
        return self.a < self.b


def effective_state(src: Union[GaussianSubchannel, FadingState],
                    prefactor: float = REAL,
                    weight: float = 1.0) -> EffectiveState:
    """Reduce a subchannel or a fading realization to effective noise levels.

    A zero power gain maps to infinite effective noise.
    """
    if isinstance(src, GaussianSubchannel):
        a, b = src.mu_sq, src.nu_sq
    elif isinstance(src, FadingState):
        a = src.mu_sq / src.h1_sq if src.h1_sq > 0 else math.inf
        b = src.nu_sq / src.h2_sq if src.h2_sq > 0 else math.inf
    else:
        raise InvalidInput(f"cannot build an effective state from {type(src).__name__}")
    return EffectiveState(a, b, prefactor, weight)


class StateBatch:
    """Column-oriented collection of effective states.

    The numerical routines work on these arrays directly; iterating or
    indexing yields :class:`EffectiveState` values.
    """

    __slots__ = ("a", "b", "c", "w")

    def __init__(self, a, b, c=REAL, w=1.0):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if a.shape != b.shape or a.ndim != 1:
            raise InvalidInput("a and b must be 1-d arrays of equal length")
        c = np.broadcast_to(np.asarray(c, dtype=float), a.shape).copy()
        w = np.broadcast_to(np.asarray(w, dtype=float), a.shape).copy()
        if np.any(~(a > 0)) or np.any(~(b > 0)):
            raise InvalidInput("effective noise levels must be positive")
        if np.any((c != REAL) & (c != COMPLEX)):
            raise InvalidInput("prefactor must be 1/2 or 1")
        if np.any(~(w >= 0)):
            raise InvalidInput("state weights must be nonnegative")
        for arr in (a, b, c, w):
            arr.flags.writeable = False
        self.a, self.b, self.c, self.w = a, b, c, w

    @classmethod
    def from_states(cls, states: Iterable[EffectiveState]) -> "StateBatch":
        states = list(states)
        return cls([s.a for s in states], [s.b for s in states],
                   [s.prefactor for s in states], [s.weight for s in states])

    @property
    def in_A(self) -> np.ndarray:
        return self.a < self.b

    def __len__(self) -> int:
        return self.a.size

    def __getitem__(self, i: int) -> EffectiveState:
        return EffectiveState(float(self.a[i]), float(self.b[i]),
                              float(self.c[i]), float(self.w[i]))

    def __iter__(self) -> Iterator[EffectiveState]:
        for i in range(len(self)):
            yield self[i]

    def __repr__(self):
        return f"StateBatch(n={len(self)}, Pr(A)={float(self.w[self.in_A].sum()):.4g})"


StatesLike = Union[StateBatch, Sequence[EffectiveState]]


def as_batch(states: StatesLike) -> StateBatch:
    if isinstance(states, StateBatch):
        return states
    if isinstance(states, EffectiveState):
        return StateBatch.from_states([states])
    return StateBatch.from_states(states)


@dataclass(frozen=True)
class PowerAllocation:
    """Per-state power pair: ``p0`` for the common layer, ``p1`` confidential."""

    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        p0 = np.atleast_1d(np.asarray(self.p0, dtype=float)).copy()
        p1 = np.atleast_1d(np.asarray(self.p1, dtype=float)).copy()
        if p0.shape != p1.shape:
            raise InvalidInput("p0 and p1 must have the same length")
        if np.any(~(p0 >= 0)) or np.any(~(p1 >= 0)):
            raise InvalidAllocation("powers must be nonnegative")
        p0.flags.writeable = False
        p1.flags.writeable = False
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)

    @classmethod
    def from_pairs(cls, pairs) -> "PowerAllocation":
        arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def zeros(cls, n: int) -> "PowerAllocation":
        return cls(np.zeros(n), np.zeros(n))

    def pairs(self) -> list[tuple[float, float]]:
        return [(float(x), float(y)) for x, y in zip(self.p0, self.p1)]

    def __len__(self) -> int:
        return self.p0.size


class RateTriple(NamedTuple):
    """The two common-rate bounds and the confidential rate."""

    r01: float
    r02: float
    r1: float

    @property
    def r0(self) -> float:
        return min(self.r01, self.r02)


class RatePoint(NamedTuple):
    r0: float
    r1: float


def total_power(alloc: PowerAllocation, states: StatesLike) -> float:
    """Weighted total power ``sum(weight * (p0 + p1))``."""
    batch = as_batch(states) if len(states) else None
    if batch is None:
        if len(alloc):
            raise InvalidInput("allocation and state list differ in length")
        return 0.0
    if len(alloc) != len(batch):
        raise InvalidInput(
            f"allocation has {len(alloc)} entries but there are {len(batch)} states")
    return float(np.dot(batch.w, alloc.p0 + alloc.p1))
