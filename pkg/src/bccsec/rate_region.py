"""Rate functionals and region membership.

Covers the parallel Gaussian and fading BCC (through effective states), the
single Gaussian BCC in its power-split form, the per-block region used for
outage, and an achievability evaluator for discrete memoryless subchannels
with user-supplied auxiliaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel_core import (
    EffectiveState,
    GaussianSubchannel,
    InvalidAllocation,
    InvalidInput,
    PowerAllocation,
    RatePoint,
    RateTriple,
    StatesLike,
    as_batch,
)

__all__ = [
    "log2_1p",
    "state_rates",
    "weighted_rate_triple",
    "gaussian_bcc_point",
    "region_contains",
    "region_contains_many",
    "parallel_common_capacity",
    "sum_of_mins",
    "DiscreteJoint",
    "mutual_information",
    "dm_rate_point",
]

LN2 = math.log(2.0)


def log2_1p(x):
    """``log2(1 + x)``, accurate for small ``x``."""
    return np.log1p(x) / LN2


def state_rates(a, b, c, in_A, p0, p1):
    """Per-state contributions ``(r01, r02, r1)`` before weighting.

    Infinite noise levels give zero rate.  On A the common layer sees the
    confidential layer as extra noise; ``r1`` is clamped at zero per state.
    """
    a, b, c = np.asarray(a, float), np.asarray(b, float), np.asarray(c, float)
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    p1_on = np.where(in_A, p1, 0.0)
    with np.errstate(invalid="ignore"):
        r01 = c * log2_1p(p0 / (a + p1_on))
        r02 = c * log2_1p(p0 / (b + p1_on))
        sec = c * (log2_1p(p1_on / a) - log2_1p(p1_on / b))
    r01 = np.nan_to_num(r01, nan=0.0)
    r02 = np.nan_to_num(r02, nan=0.0)
    r1 = np.maximum(np.nan_to_num(sec, nan=0.0), 0.0)
    return r01, r02, r1


def weighted_rate_triple(states: StatesLike, alloc: PowerAllocation) -> RateTriple:
    """Weighted sums of the per-state rate terms of the parallel/fading BCC.

    Raises
    ------
    InvalidAllocation
        If confidential power is placed on a state outside A.
    """
    batch = as_batch(states)
    if len(alloc) != len(batch):
        raise InvalidInput(
            f"allocation has {len(alloc)} entries but there are {len(batch)} states")
    in_A = batch.in_A
    bad = (~in_A) & (alloc.p1 > 0)
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        raise InvalidAllocation(f"state {idx} is not in A but has p1 = {alloc.p1[idx]!r}")
    r01, r02, r1 = state_rates(batch.a, batch.b, batch.c, in_A, alloc.p0, alloc.p1)
    w = batch.w
    return RateTriple(float(np.dot(w, r01)), float(np.dot(w, r02)), float(np.dot(w, r1)))


def gaussian_bcc_point(P: float, sub: GaussianSubchannel, beta: float,
                       prefactor: float = 0.5) -> RatePoint:
    """Rate pair of the single Gaussian BCC when a fraction ``beta`` of the
    power carries the confidential layer."""
    if not 0.0 <= beta <= 1.0:
        raise InvalidInput(f"beta must lie in [0, 1], got {beta!r}")
    if not P >= 0:
        raise InvalidInput(f"power must be nonnegative, got {P!r}")
    c = prefactor
    mu, nu = sub.mu_sq, sub.nu_sq
    q1, q0 = beta * P, (1.0 - beta) * P
    r0 = min(c * log2_1p(q0 / (mu + q1)), c * log2_1p(q0 / (nu + q1)))
    r1 = max(c * (log2_1p(q1 / mu) - log2_1p(q1 / nu)), 0.0)
    return RatePoint(float(r0), float(r1))


def _contains_arrays(a, b, c, p, r0, r1, rtol):
    a, b, c, p = np.broadcast_arrays(*(np.asarray(x, float) for x in (a, b, c, p)))
    in_A = a < b
    need = np.zeros(a.shape)
    ok = np.ones(a.shape, dtype=bool)
    if r1 > 0:
        # smallest confidential power meeting r1; the secrecy term is
        # increasing in that power on A
        g = np.exp2(r1 / c)
        with np.errstate(divide="ignore"):
            denom = 1.0 / a - g / b
        feasible = in_A & (denom > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            need = np.where(feasible, (g - 1.0) / denom, np.inf)
        ok = feasible & (need <= p * (1.0 + rtol))
    rest = np.maximum(p - np.where(np.isfinite(need), need, 0.0), 0.0)
    noise_extra = np.where(np.isfinite(need), need, 0.0)
    with np.errstate(invalid="ignore"):
        common = np.minimum(c * log2_1p(rest / (a + noise_extra)),
                            c * log2_1p(rest / (b + noise_extra)))
    common = np.nan_to_num(common, nan=0.0)
    return ok & (r0 <= common * (1.0 + rtol))


def region_contains(state: EffectiveState, p: float, target, rtol: float = 0.0) -> bool:
    """Whether the target pair ``(R0, R1)`` lies in the one-block region at power ``p``.

    True iff some split of ``p`` meets both the confidential-rate bound and the
    common-rate bound (the minimum over both receivers).  Off A only
    ``R1 == 0`` is reachable.  ``rtol`` loosens the comparisons by that
    relative amount, for checks at exactly the minimum power.
    """
    r0, r1 = (float(x) for x in target)
    if p < 0 or r0 < 0 or r1 < 0:
        raise InvalidInput("power and target rates must be nonnegative")
    out = _contains_arrays(state.a, state.b, state.prefactor, p, r0, r1, rtol)
    return bool(out)


def region_contains_many(states: StatesLike, p, target, rtol: float = 0.0) -> np.ndarray:
    """Vectorized :func:`region_contains` over a batch (``p`` scalar or per state)."""
    batch = as_batch(states)
    r0, r1 = (float(x) for x in target)
    return _contains_arrays(batch.a, batch.b, batch.c, p, r0, r1, rtol)


def parallel_common_capacity(link_caps: Sequence[tuple[float, float]]) -> float:
    """Common-message capacity of parallel links: ``min(sum C1, sum C2)``."""
    if not link_caps:
        return 0.0
    caps = np.asarray(link_caps, dtype=float)
    if np.any(caps < 0):
        raise InvalidInput("link capacities must be nonnegative")
    return float(min(caps[:, 0].sum(), caps[:, 1].sum()))


def sum_of_mins(link_caps: Sequence[tuple[float, float]]) -> float:
    """Rate of coding each link separately: ``sum min(C1, C2)``."""
    if not link_caps:
        return 0.0
    caps = np.asarray(link_caps, dtype=float)
    return float(np.minimum(caps[:, 0], caps[:, 1]).sum())


# -- discrete memoryless subchannels ---------------------------------------

_ROW_TOL = 1e-12


def _check_stochastic(name, arr, axes):
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has negative or non-finite entries")
    sums = arr.sum(axis=axes)
    if np.any(np.abs(sums - 1.0) > _ROW_TOL):
        raise InvalidInput(f"{name} rows must sum to 1 (worst deviation "
                           f"{float(np.max(np.abs(sums - 1.0))):.3g})")


@dataclass(frozen=True)
class DiscreteJoint:
    """One discrete memoryless subchannel with auxiliaries ``Q -> U -> X``.

    Attributes
    ----------
    p_q : (|Q|,) array
    p_u_given_q : (|Q|, |U|) array, rows indexed by q
    p_x_given_u : (|U|, |X|) array
    p_yz_given_x : (|X|, |Y|, |Z|) array
    """

    p_q: np.ndarray
    p_u_given_q: np.ndarray
    p_x_given_u: np.ndarray
    p_yz_given_x: np.ndarray

    def __post_init__(self):
        p_q = np.asarray(self.p_q, float)
        p_uq = np.asarray(self.p_u_given_q, float)
        p_xu = np.asarray(self.p_x_given_u, float)
        p_yzx = np.asarray(self.p_yz_given_x, float)
        if p_q.ndim != 1 or p_uq.ndim != 2 or p_xu.ndim != 2 or p_yzx.ndim != 3:
            raise InvalidInput("table ranks must be 1, 2, 2 and 3")
        if p_uq.shape[0] != p_q.size or p_xu.shape[0] != p_uq.shape[1] \
                or p_yzx.shape[0] != p_xu.shape[1]:
            raise InvalidInput("alphabet sizes of consecutive tables do not match")
        _check_stochastic("p(q)", p_q, 0)
        _check_stochastic("p(u|q)", p_uq, 1)
        _check_stochastic("p(x|u)", p_xu, 1)
        _check_stochastic("p(y,z|x)", p_yzx, (1, 2))
        for name, arr in (("p_q", p_q), ("p_u_given_q", p_uq),
                          ("p_x_given_u", p_xu), ("p_yz_given_x", p_yzx)):
            object.__setattr__(self, name, arr)

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteJoint":
        """Build from row-major flat tables plus explicit alphabet sizes.

        Expected keys: ``sizes`` (``{"Q","U","X","Y","Z"}``), ``p_q``,
        ``p_u_given_q``, ``p_x_given_u``, ``p_yz_given_x``.
        """
        try:
            s = d["sizes"]
            nq, nu, nx, ny, nz = (int(s[k]) for k in ("Q", "U", "X", "Y", "Z"))
            return cls(
                np.asarray(d["p_q"], float).reshape(nq),
                np.asarray(d["p_u_given_q"], float).reshape(nq, nu),
                np.asarray(d["p_x_given_u"], float).reshape(nu, nx),
                np.asarray(d["p_yz_given_x"], float).reshape(nx, ny, nz),
            )
        except KeyError as exc:
            raise InvalidInput(f"missing field {exc.args[0]!r} in distribution") from None
        except ValueError as exc:
            raise InvalidInput(f"table shape does not match alphabet sizes: {exc}") from None

    @classmethod
    def with_channel(cls, p_x, p_yz_given_x) -> "DiscreteJoint":
        """Degenerate auxiliaries: ``Q`` constant and ``U = X``."""
        p_x = np.asarray(p_x, float)
        n = p_x.size
        return cls(np.ones(1), p_x[None, :], np.eye(n), p_yz_given_x)


def _entropy(p):
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def mutual_information(p_ab) -> float:
    """``I(A;B)`` in bits from a joint table, with ``0 log 0 = 0``."""
    p_ab = np.asarray(p_ab, float)
    return _entropy(p_ab.sum(axis=1)) + _entropy(p_ab.sum(axis=0)) - _entropy(p_ab.ravel())


def _conditional_mi(p_cab) -> float:
    """``I(A;B|C)`` from a joint table indexed ``[c, a, b]``."""
    total = 0.0
    for slab in p_cab:
        mass = slab.sum()
        if mass > 0:
            total += mass * mutual_information(slab / mass)
    return total


def dm_rate_point(subchannels: Sequence[DiscreteJoint]) -> RateTriple:
    """Achievable rate terms for given auxiliaries on parallel DM subchannels.

    Returns ``r01 = sum I(Q;Y)``, ``r02 = sum I(Q;Z)`` and
    ``r1 = sum [I(U;Y|Q) - I(U;Z|Q)]``.  The confidential term is not clamped,
    so a negative value flags a poor choice of auxiliaries.
    """
    r01 = r02 = r1 = 0.0
    for sub in subchannels:
        p_qux = (sub.p_q[:, None, None] * sub.p_u_given_q[:, :, None]
                 * sub.p_x_given_u[None, :, :])
        p_y_x = sub.p_yz_given_x.sum(axis=2)
        p_z_x = sub.p_yz_given_x.sum(axis=1)
        p_quy = p_qux @ p_y_x
        p_quz = p_qux @ p_z_x
        r01 += mutual_information(p_quy.sum(axis=1))
        r02 += mutual_information(p_quz.sum(axis=1))
        r1 += _conditional_mi(p_quy) - _conditional_mi(p_quz)
    return RateTriple(r01, r02, r1)
