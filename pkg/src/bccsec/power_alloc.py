"""Boundary-achieving power allocation.

A boundary point of the secrecy capacity region maximizes
``gamma0 * min(r01, r02) + gamma1 * r1`` over the power budget.  The max-min
is split into three cases: water-fill against receiver 1's common bound,
against receiver 2's, or against an ``alpha``-mix of both chosen so the two
bounds coincide.  For a fixed case and water level ``lam`` the optimal
per-state powers are closed-form; ``lam`` is then set by root finding on the
budget and ``alpha`` by a scan plus root finding on ``r01 - r02``.

Everything is written in the effective-noise normal form ``(a, b, c)``, with

    t = c * gamma0 / (lam * ln 2),   s = c * gamma1 / (lam * ln 2),

so real (c = 1/2) and complex fading (c = 1) channels share one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .channel_core import (
    EffectiveState,
    InvalidInput,
    PowerAllocation,
    RatePoint,
    RateTriple,
    StateBatch,
    StatesLike,
    as_batch,
)
from .rate_region import weighted_rate_triple

__all__ = [
    "Weights",
    "CaseTag",
    "CASE1",
    "CASE2",
    "SolverKnobs",
    "InfeasibleCase",
    "BoundaryAllocation",
    "BoundaryPoint",
    "WiretapSolution",
    "case_roots",
    "per_state_alloc",
    "allocate",
    "solve_lambda",
    "solve_alpha",
    "optimal_allocation",
    "wiretap_allocation",
    "boundary_sweep",
    "weighted_objective",
]

LN2 = math.log(2.0)


class InfeasibleCase(RuntimeError):
    """No tilt ``alpha`` equalizes the two common-rate bounds."""


@dataclass(frozen=True)
class Weights:
    """Boundary-tracing weights on the common and confidential rates."""

    gamma0: float
    gamma1: float

    def __post_init__(self):
        if not (self.gamma0 >= 0 and self.gamma1 >= 0):
            raise InvalidInput("weights must be nonnegative")
        if self.gamma0 == 0 and self.gamma1 == 0:
            raise InvalidInput("weights must not both be zero")
        if not (math.isfinite(self.gamma0) and math.isfinite(self.gamma1)):
            raise InvalidInput("weights must be finite")

    @property
    def ratio(self) -> float:
        """``gamma1 / gamma0`` (``inf`` when ``gamma0 == 0``)."""
        return self.gamma1 / self.gamma0 if self.gamma0 > 0 else math.inf


@dataclass(frozen=True)
class CaseTag:
    """Which common-rate bound the allocation water-fills against.

    ``kind`` is 1 (receiver 1), 2 (receiver 2) or 3 (tilted mix with weight
    ``alpha`` on receiver 1).
    """

    kind: int
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (1, 2, 3):
            raise InvalidInput(f"case must be 1, 2 or 3, got {self.kind!r}")
        if self.kind == 3:
            if self.alpha is None or not 0.0 <= self.alpha <= 1.0:
                raise InvalidInput("Case 3 needs alpha in [0, 1]")
        elif self.alpha is not None:
            raise InvalidInput("only Case 3 carries alpha")

    @classmethod
    def case3(cls, alpha: float) -> "CaseTag":
        return cls(3, float(alpha))

    @property
    def tilt(self) -> float:
        """Weight on receiver 1's common bound (1 for Case 1, 0 for Case 2)."""
        return {1: 1.0, 2: 0.0}.get(self.kind, self.alpha)

    @property
    def name(self) -> str:
        return f"Case{self.kind}"

    def __str__(self):
        if self.kind == 3:
            return f"Case3(alpha={self.alpha:.6g})"
        return self.name


CASE1 = CaseTag(1)
CASE2 = CaseTag(2)


@dataclass(frozen=True)
class SolverKnobs:
    power_rtol: float = 1e-9
    rate_rtol: float = 1e-9
    max_iter: int = 200
    alpha_scan: int = 33


DEFAULT_KNOBS = SolverKnobs()


# -- per-state closed forms ------------------------------------------------

def _pos(x):
    return np.maximum(x, 0.0)


def _common_root(a, b, t, tilt):
    """Root of ``t * (tilt/(a+x) + (1-tilt)/(b+x)) = 1``, the point where the
    marginal utility of common power meets the water level.

    For the pure cases this is ``t - a`` or ``t - b``.  Otherwise it is the
    larger root of ``x^2 + (a+b-t) x + ab - t(tilt*b + (1-tilt)*a)``, whose
    discriminant simplifies to ``(b-a-t)^2 + 4 tilt t (b-a)``.
    """
    a, b, t = np.broadcast_arrays(a, b, t)
    if tilt == 1.0:
        return t - a
    if tilt == 0.0:
        return t - b
    out = np.empty(a.shape)
    a_inf, b_inf = ~np.isfinite(a), ~np.isfinite(b)
    both = a_inf & b_inf
    out[both] = -np.inf
    only_a = a_inf & ~b_inf
    out[only_a] = (1.0 - tilt) * t[only_a] - b[only_a]
    only_b = b_inf & ~a_inf
    out[only_b] = tilt * t[only_b] - a[only_b]
    fin = ~(a_inf | b_inf)
    af, bf, tf = a[fin], b[fin], t[fin]
    d = bf - af
    B = af + bf - tf
    C = af * bf - tf * (tilt * bf + (1.0 - tilt) * af)
    sq = np.sqrt(np.maximum((d - tf) ** 2 + 4.0 * tilt * tf * d, 0.0))
    # avoid cancellation in -B + sq when B > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = -2.0 * C / (B + sq)
    out[fin] = np.where(B > 0, stable, 0.5 * (sq - B))
    return out


def _confidential_root(a, b, s):
    """Root of ``s * (1/(a+x) - 1/(b+x)) = 1`` for finite ``a < b``:
    ``sqrt((b-a)(b-a+4s))/2 - (a+b)/2``, in cancellation-free form."""
    d = b - a
    C = a * b - d * s
    sq = np.sqrt(d * (d + 4.0 * s))
    return -2.0 * C / (a + b + sq)


def _alloc_core(a, b, c, w_gamma: Weights, lam: float, tilt: float):
    """Vectorized per-state optimal ``(p0, p1)`` for one case and water level."""
    g0, g1 = w_gamma.gamma0, w_gamma.gamma1
    n = a.size
    p0 = np.zeros(n)
    p1 = np.zeros(n)
    if not math.isfinite(lam):
        return p0, p1
    t = c * g0 / (lam * LN2)
    s = c * g1 / (lam * LN2)
    in_A = a < b

    off = ~in_A
    if np.any(off):
        p0[off] = _pos(_common_root(a[off], b[off], t[off], tilt))

    fin = in_A & np.isfinite(b)
    if np.any(fin):
        af, bf, tf, sf = a[fin], b[fin], t[fin], s[fin]
        x0 = _common_root(af, bf, tf, tilt)
        x1 = _confidential_root(af, bf, sf)
        if g0 > 0:
            # crossing of the two marginal utilities; below it confidential
            # power is worth more than common power
            xr = (g1 / g0) * (bf - af) - (tilt * bf + (1.0 - tilt) * af)
        else:
            xr = np.full(af.shape, np.inf)
        split = xr > 0
        with np.errstate(invalid="ignore"):
            p0[fin] = np.where(split, _pos(x0 - xr), _pos(x0))
            p1[fin] = np.where(split, _pos(np.minimum(x1, xr)), 0.0)

    # receiver 2 hears nothing: both utilities scale as 1/(a+x), so one layer wins outright
    deaf = in_A & ~np.isfinite(b)
    if np.any(deaf):
        ad = a[deaf]
        if g1 > tilt * g0:
            p1[deaf] = _pos(s[deaf] - ad)
        else:
            p0[deaf] = _pos(tilt * t[deaf] - ad)
    return p0, p1


def _scalar_state(state: EffectiveState):
    return (np.array([state.a]), np.array([state.b]), np.array([state.prefactor]))


def case_roots(state: EffectiveState, w: Weights, lam: float, case: CaseTag):
    """Roots of the marginal utilities and their crossing for an A state.

    Returns ``(x0, x1, xr)``: where the common-layer utility hits zero, where
    the confidential-layer utility hits zero, and where the two cross.
    ``xr`` is ``+inf`` when ``gamma0 == 0``.
    """
    if not state.in_A:
        raise InvalidInput("case_roots is defined for states in A only")
    if not lam > 0:
        raise InvalidInput("lam must be positive")
    a, b, c = _scalar_state(state)
    tilt = case.tilt
    t = c * w.gamma0 / (lam * LN2)
    s = c * w.gamma1 / (lam * LN2)
    x0 = float(_common_root(a, b, t, tilt)[0])
    if math.isinf(state.b):
        x1 = float(s[0] - a[0])
        xr = math.inf if w.gamma1 > tilt * w.gamma0 else -math.inf
        if w.gamma0 == 0:
            xr = math.inf
        return x0, x1, xr
    x1 = float(_confidential_root(a, b, s)[0])
    if w.gamma0 == 0:
        return x0, x1, math.inf
    xr = w.ratio * (state.b - state.a) - (tilt * state.b + (1.0 - tilt) * state.a)
    return x0, x1, float(xr)


def per_state_alloc(state: EffectiveState, w: Weights, lam: float, case: CaseTag):
    """Optimal ``(p0, p1)`` for one state at water level ``lam``."""
    if not lam > 0:
        raise InvalidInput("lam must be positive")
    a, b, c = _scalar_state(state)
    p0, p1 = _alloc_core(a, b, c, w, lam, case.tilt)
    return float(p0[0]), float(p1[0])


def allocate(states: StatesLike, w: Weights, lam: float, case: CaseTag) -> PowerAllocation:
    """Per-state closed forms for a whole batch at a fixed water level."""
    batch = as_batch(states)
    p0, p1 = _alloc_core(batch.a, batch.b, batch.c, w, lam, case.tilt)
    return PowerAllocation(p0, p1)


# -- water level and tilt --------------------------------------------------

def _solve_level(power_of, P: float, lam_hint: Optional[float], max_iter: int):
    """Find ``lam`` with ``power_of(lam)`` just below ``P``.

    ``power_of`` must be continuous and nonincreasing in ``lam``.  Returns
    ``(lam, power)``; if the states cannot absorb ``P`` at any level the
    smallest tried level is returned with its (short) power.
    """
    lam = lam_hint if lam_hint and math.isfinite(lam_hint) and lam_hint > 0 else 1.0
    pw = power_of(lam)
    if pw > P:
        lo, hi = lam, 2.0 * lam
        while power_of(hi) > P:
            lo, hi = hi, 2.0 * hi
    else:
        lo, hi = 0.5 * lam, lam
        while True:
            pw_lo = power_of(lo)
            if pw_lo > P:
                break
            if lo < 1e-250:
                return lo, pw_lo
            lo, hi = 0.5 * lo, lo

    def f(x):
        return power_of(math.exp(x)) - P

    x = brentq(f, math.log(lo), math.log(hi), xtol=1e-15, rtol=4 * np.finfo(float).eps,
               maxiter=max_iter)
    lam = math.exp(x)
    pw = power_of(lam)
    # brentq may land a hair on the over-budget side
    step = 4 * np.finfo(float).eps
    while pw > P and step < 1e-10:
        lam_try = lam * (1.0 + step)
        pw_try = power_of(lam_try)
        if pw_try <= P:
            lam, pw = lam_try, pw_try
            break
        step *= 4
    if pw > P:
        lam, pw = hi, power_of(hi)
    return lam, pw


def solve_lambda(states: StatesLike, w: Weights, P: float, case: CaseTag,
                 lam_hint: Optional[float] = None,
                 knobs: SolverKnobs = DEFAULT_KNOBS):
    """Water level meeting the budget for a fixed case.

    Returns ``(lam, alloc)`` with total power in ``[P (1 - tol), P]``.  A zero
    budget returns the zero allocation and ``lam = inf``.
    """
    if not P >= 0:
        raise InvalidInput(f"power budget must be nonnegative, got {P!r}")
    batch = as_batch(states)
    if P == 0 or len(batch) == 0:
        return math.inf, PowerAllocation.zeros(len(batch))
    a, b, c, wt = batch.a, batch.b, batch.c, batch.w
    tilt = case.tilt

    def power_of(lam):
        p0, p1 = _alloc_core(a, b, c, w, lam, tilt)
        return float(np.dot(wt, p0 + p1))

    lam, _ = _solve_level(power_of, P, lam_hint, knobs.max_iter)
    p0, p1 = _alloc_core(a, b, c, w, lam, tilt)
    return lam, PowerAllocation(p0, p1)


def weighted_objective(rates: RateTriple, w: Weights) -> float:
    return w.gamma0 * rates.r0 + w.gamma1 * rates.r1


@dataclass(frozen=True)
class BoundaryAllocation:
    """Result of the boundary search for one weight pair."""

    alloc: PowerAllocation
    case: CaseTag
    lam: float
    rates: RateTriple
    weights: Weights

    @property
    def objective(self) -> float:
        return weighted_objective(self.rates, self.weights)

    @property
    def point(self) -> RatePoint:
        return RatePoint(self.rates.r0, self.rates.r1)


def solve_alpha(states: StatesLike, w: Weights, P: float,
                knobs: SolverKnobs = DEFAULT_KNOBS,
                lam_hint: Optional[float] = None):
    """Tilt ``alpha`` at which the two common-rate bounds coincide.

    Scans ``alpha`` on a uniform grid, refines every sign change of
    ``r01 - r02`` by root finding and keeps the candidate with the best
    weighted objective.  Returns ``(alpha, lam, alloc)``.

    Raises
    ------
    InfeasibleCase
        If ``r01 - r02`` never changes sign on ``[0, 1]``.
    """
    batch = as_batch(states)
    cache: dict[float, tuple] = {}
    hint = [lam_hint]

    def run(alpha):
        if alpha not in cache:
            lam, alloc = solve_lambda(batch, w, P, CaseTag.case3(alpha), hint[0], knobs)
            if math.isfinite(lam):
                hint[0] = lam
            rates = weighted_rate_triple(batch, alloc)
            cache[alpha] = (lam, alloc, rates)
        return cache[alpha]

    def gap(alpha):
        r = run(alpha)[2]
        return r.r01 - r.r02

    def settled(alpha):
        r = run(alpha)[2]
        return abs(r.r01 - r.r02) <= knobs.rate_rtol * max(r.r01, r.r02)

    grid = np.linspace(0.0, 1.0, knobs.alpha_scan)
    gaps = [gap(float(al)) for al in grid]
    candidates = [float(al) for al in grid if settled(float(al))]
    for i in range(len(grid) - 1):
        g_lo, g_hi = gaps[i], gaps[i + 1]
        if g_lo * g_hi < 0:
            root = brentq(gap, float(grid[i]), float(grid[i + 1]),
                          xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=knobs.max_iter)
            # keep whichever end of the final bracket is closest to equality
            candidates.append(min((root, float(np.nextafter(root, 0.0)),
                                   float(np.nextafter(root, 1.0))),
                                  key=lambda al: abs(gap(al))))
    if not candidates:
        raise InfeasibleCase(
            "r01 - r02 keeps one sign for all alpha in [0, 1]; "
            f"gaps at the ends: {gaps[0]:.3g}, {gaps[-1]:.3g}")
    best = max(candidates, key=lambda al: (weighted_objective(run(al)[2], w), -al))
    lam, alloc, _ = run(best)
    return best, lam, alloc


def optimal_allocation(states: StatesLike, w: Weights, P: float,
                       knobs: SolverKnobs = DEFAULT_KNOBS,
                       lam_hint: Optional[float] = None) -> BoundaryAllocation:
    """Allocation achieving the boundary point for weights ``w``.

    Step 1 tries the receiver-1 water-filling and keeps it if ``r01 < r02``;
    step 2 tries receiver 2 and keeps it if ``r01 > r02``; otherwise step 3
    searches the tilt.  ``gamma0 == 0`` is the wiretap problem: no common
    power, both common bounds are zero and the result is tagged Case 3.
    """
    batch = as_batch(states)
    if w.gamma0 == 0:
        lam, alloc = solve_lambda(batch, w, P, CASE1, lam_hint, knobs)
        rates = weighted_rate_triple(batch, alloc)
        return BoundaryAllocation(alloc, CaseTag.case3(1.0), lam, rates, w)

    lam1, alloc1 = solve_lambda(batch, w, P, CASE1, lam_hint, knobs)
    rates1 = weighted_rate_triple(batch, alloc1)
    if rates1.r01 < rates1.r02:
        return BoundaryAllocation(alloc1, CASE1, lam1, rates1, w)
    if rates1.r01 == rates1.r02:
        # already equalized: this is the alpha = 1 end of the case-3 family
        return BoundaryAllocation(alloc1, CaseTag.case3(1.0), lam1, rates1, w)

    lam2, alloc2 = solve_lambda(batch, w, P, CASE2, lam1, knobs)
    rates2 = weighted_rate_triple(batch, alloc2)
    if rates2.r01 > rates2.r02:
        return BoundaryAllocation(alloc2, CASE2, lam2, rates2, w)
    if rates2.r01 == rates2.r02:
        return BoundaryAllocation(alloc2, CaseTag.case3(0.0), lam2, rates2, w)

    alpha, lam, alloc = solve_alpha(batch, w, P, knobs, lam_hint=lam1)
    rates = weighted_rate_triple(batch, alloc)
    return BoundaryAllocation(alloc, CaseTag.case3(alpha), lam, rates, w)


# -- wiretap special case ----------------------------------------------------

@dataclass(frozen=True)
class WiretapSolution:
    alloc: PowerAllocation
    lam: float
    capacity: float


def wiretap_allocation(states: StatesLike, P: float,
                       knobs: SolverKnobs = DEFAULT_KNOBS) -> WiretapSolution:
    """Secrecy-capacity achieving power when only the confidential message is sent.

    Power goes only to states in A: plain water-filling where the eavesdropper
    has zero gain, the square-root rule elsewhere on A.
    """
    if not P >= 0:
        raise InvalidInput(f"power budget must be nonnegative, got {P!r}")
    batch = as_batch(states)
    n = len(batch)
    in_A = batch.in_A & (batch.w > 0)
    if P == 0 or not np.any(in_A):
        return WiretapSolution(PowerAllocation.zeros(n), math.inf, 0.0)
    a, b, c = batch.a[in_A], batch.b[in_A], batch.c[in_A]
    wt = batch.w[in_A]
    deaf = ~np.isfinite(b)

    def powers(lam):
        level = c / (lam * LN2)
        p = np.empty(a.size)
        p[deaf] = level[deaf] - a[deaf]
        ad, bd, ld = a[~deaf], b[~deaf], level[~deaf]
        p[~deaf] = 0.5 * np.sqrt((bd - ad) * (4.0 * ld - ad + bd)) - 0.5 * (ad + bd)
        return _pos(p)

    def power_of(lam):
        return float(np.dot(wt, powers(lam)))

    lam, _ = _solve_level(power_of, P, None, knobs.max_iter)
    p1 = np.zeros(n)
    p1[in_A] = powers(lam)
    alloc = PowerAllocation(np.zeros(n), p1)
    return WiretapSolution(alloc, lam, weighted_rate_triple(batch, alloc).r1)


# -- boundary sweep -------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryPoint:
    weights: Weights
    r0: float
    r1: float
    rates: RateTriple
    alloc: PowerAllocation = field(repr=False)
    case: CaseTag = CASE1
    lam: float = math.nan


def boundary_sweep(states: StatesLike, P: float, weight_grid: Sequence[Weights],
                   knobs: SolverKnobs = DEFAULT_KNOBS) -> list[BoundaryPoint]:
    """One boundary point per weight pair, sorted by common rate."""
    if not weight_grid:
        raise InvalidInput("weight grid must be nonempty")
    batch = as_batch(states)
    out = []
    level = None  # lam / gamma0 of the previous point; lam scales with gamma0
    for w in weight_grid:
        hint = level * w.gamma0 if level and w.gamma0 > 0 else None
        res = optimal_allocation(batch, w, P, knobs, lam_hint=hint)
        if math.isfinite(res.lam) and w.gamma0 > 0:
            level = res.lam / w.gamma0
        out.append(BoundaryPoint(w, res.rates.r0, res.rates.r1, res.rates,
                                 res.alloc, res.case, res.lam))
    out.sort(key=lambda bp: (bp.r0, -bp.r1))
    return out
