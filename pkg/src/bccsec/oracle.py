"""Brute-force references for testing the closed-form solvers.

Nothing here uses the water-filling structure: allocations are found by
enumeration or derivative-free search, and rates are evaluated with the
plain formulas of :mod:`rate_region`.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .channel_core import COMPLEX, InvalidInput, PowerAllocation, StatesLike, as_batch
from .power_alloc import Weights
from .rate_region import region_contains, state_rates

__all__ = [
    "GridTooLarge",
    "GridBest",
    "grid_search_weighted",
    "grid_region_cloud",
    "brute_force_plan",
    "bisect_min_power",
    "two_state_secrecy",
]

MAX_POINTS = 10 ** 8
_CHUNK_ROWS = 1 << 18
_SLACK = 1e-9


class GridTooLarge(InvalidInput):
    """The requested exhaustive grid exceeds :data:`MAX_POINTS`."""


class GridBest(NamedTuple):
    alloc: PowerAllocation
    objective: float


class _Problem:
    """Allocation variables laid out as ``[p0 for every state, p1 for A states]``."""

    def __init__(self, states: StatesLike, max_states: int):
        batch = as_batch(states)
        if not 0 < len(batch) <= max_states:
            raise InvalidInput(f"oracle handles 1 to {max_states} states, got {len(batch)}")
        if np.any(batch.w <= 0):
            raise InvalidInput("oracle needs strictly positive state weights")
        self.batch = batch
        self.n = len(batch)
        self.A_idx = np.flatnonzero(batch.in_A)
        # the constraint sum(w * (p0 + p1)) <= P acts on each variable with its state's weight
        self.cost = np.concatenate([batch.w, batch.w[self.A_idx]])
        self.d = self.cost.size

    def split(self, X, step):
        X = np.asarray(X, float) * step
        p0 = X[:, :self.n]
        p1 = np.zeros_like(p0)
        p1[:, self.A_idx] = X[:, self.n:]
        return p0, p1

    def rates(self, X, step):
        bt = self.batch
        p0, p1 = self.split(X, step)
        r01, r02, r1 = state_rates(bt.a, bt.b, bt.c, bt.in_A, p0, p1)
        return r01 @ bt.w, r02 @ bt.w, r1 @ bt.w

    def objective(self, X, step, w: Weights):
        r01, r02, r1 = self.rates(X, step)
        return w.gamma0 * np.minimum(r01, r02) + w.gamma1 * r1

    def alloc(self, x, step) -> PowerAllocation:
        p0, p1 = self.split(np.asarray(x)[None, :], step)
        return PowerAllocation(p0[0], p1[0])


def _lattice_prefixes(cost, K, cap):
    """Integer prefixes over all but the last coordinate with ``cost . k <= K``,
    in lexicographic order, plus the remaining budget of each.

    Returns ``None`` when the full lattice would exceed ``cap`` points.
    """
    rows = np.zeros((1, 0), dtype=np.int64)
    used = np.zeros(1)
    for ci in cost[:-1]:
        top = np.floor((K - used) / ci + _SLACK).astype(np.int64)
        size = int(top.sum() + top.size)
        if size > cap:
            return None
        reps = top + 1
        starts = np.repeat(np.cumsum(reps) - reps, reps)
        vals = np.arange(size) - starts
        rows = np.column_stack([np.repeat(rows, reps, axis=0), vals])
        used = np.repeat(used, reps) + ci * vals
    last = np.floor((K - used) / cost[-1] + _SLACK).astype(np.int64)
    if int(last.sum() + last.size) > cap:
        return None
    return rows, last


def _lattice_chunks(cost, K, cap):
    """Yield lexicographically ordered chunks of the full integer lattice."""
    found = _lattice_prefixes(cost, K, cap)
    if found is None:
        raise GridTooLarge(
            f"grid exceeds {cap:.0e} points; raise the resolution step "
            f"(about {_volume(cost, K):.2e} points requested)")
    rows, last = found
    for s in range(0, rows.shape[0], max(1, _CHUNK_ROWS // max(1, int(last.max()) + 1))):
        e = s + max(1, _CHUNK_ROWS // max(1, int(last.max()) + 1))
        pre, top = rows[s:e], last[s:e]
        reps = top + 1
        starts = np.repeat(np.cumsum(reps) - reps, reps)
        vals = np.arange(int(reps.sum())) - starts
        yield np.column_stack([np.repeat(pre, reps, axis=0), vals])


def _volume(cost, K):
    d = len(cost)
    return float(K) ** d / (math.factorial(d) * float(np.prod(cost)))


def _grid_scale(P, resolution):
    if not resolution > 0:
        raise InvalidInput("resolution must be positive")
    if not P >= 0:
        raise InvalidInput("power budget must be nonnegative")
    return P / resolution


def _exhaustive(prob: _Problem, w: Weights, K, step, cap=MAX_POINTS, keep=1):
    """Best ``keep`` lattice points by objective (ties: lexicographically smallest)."""
    best_vals = np.empty(0)
    best_pts = np.empty((0, prob.d), dtype=np.int64)
    for X in _lattice_chunks(prob.cost, K, cap):
        vals = prob.objective(X, step, w)
        # stable sort on -value keeps enumeration (lexicographic) order among ties
        order = np.argsort(-vals, kind="stable")[:keep]
        best_vals = np.concatenate([best_vals, vals[order]])
        best_pts = np.concatenate([best_pts, X[order]])
        order = np.argsort(-best_vals, kind="stable")[:keep]
        best_vals, best_pts = best_vals[order], best_pts[order]
    return best_pts, best_vals


def _stencil(d, radius):
    axes = [np.arange(-radius, radius + 1)] * d
    moves = np.array(np.meshgrid(*axes, indexing="ij")).reshape(d, -1).T
    return moves[np.any(moves != 0, axis=1)]


def _polish_radius(d, budget=120_000):
    r = 2
    while r < 6 and (2 * r + 3) ** d <= budget:
        r += 1
    return r


def _local_search(prob: _Problem, w: Weights, K, x, scale, step):
    """Pattern search on the integer lattice (unit ``step`` of power).

    Moves by ``scale * {-2..2}^d`` and halves ``scale`` down to 1 whenever no
    move improves.  At unit scale a wider stencil is tried before stopping,
    since following the ridge where the two common bounds meet can need
    uneven steps such as ``(-1, 3, -2)``.
    """
    near = _stencil(prob.d, 2)
    wide = _stencil(prob.d, _polish_radius(prob.d))
    x = np.asarray(x, dtype=np.int64)
    fx = float(prob.objective(x[None, :], step, w)[0])

    def best_move(moves):
        cand = x + moves
        ok = np.all(cand >= 0, axis=1) & (cand @ prob.cost <= K + _SLACK)
        cand = cand[ok]
        if not cand.size:
            return None, -math.inf
        vals = prob.objective(cand, step, w)
        i = int(np.argmax(vals))
        return cand[i], float(vals[i])

    while scale >= 1:
        y, fy = best_move(scale * near)
        if fy <= fx and scale == 1:
            y, fy = best_move(wide)
        if fy > fx:
            x, fx = y, fy
            continue
        scale //= 2
    return x, fx


def grid_search_weighted(states: StatesLike, w: Weights, P: float, resolution: float,
                         mode: str = "auto", coarse_points: int = 200_000,
                         seeds: int = 5) -> GridBest:
    """Best weighted objective over allocations on the grid ``{0, d, 2d, ...}``.

    ``mode="exhaustive"`` enumerates every grid allocation with total power at
    most ``P`` and refuses grids above :data:`MAX_POINTS` points.
    ``mode="refine"`` enumerates a coarse grid whose step is a power-of-two
    multiple of ``resolution``, then runs a lattice pattern search from the
    best ``seeds`` coarse points down to step ``resolution``.  Every candidate
    is a feasible point of the fine grid, so the result is a lower bound on
    the exhaustive grid optimum.  ``"auto"`` picks exhaustive when the grid is
    small enough.
    """
    prob = _Problem(states, 3)
    K = _grid_scale(P, resolution)
    if mode not in ("auto", "exhaustive", "refine"):
        raise InvalidInput(f"unknown grid mode {mode!r}")
    if mode == "exhaustive" or (mode == "auto" and _volume(prob.cost, K) <= coarse_points):
        pts, vals = _exhaustive(prob, w, K, resolution)
        return GridBest(prob.alloc(pts[0], resolution), float(vals[0]))

    m = 0
    while _lattice_prefixes(prob.cost, K / 2 ** m, coarse_points) is None:
        m += 1
    scale = 2 ** m
    pts, _ = _exhaustive(prob, w, K / scale, resolution * scale, keep=seeds)
    found = np.array([_local_search(prob, w, K, p * scale, scale, resolution)[0] for p in pts])
    vals = prob.objective(found, resolution, w)
    order = np.lexsort(tuple(found.T[::-1]) + (-vals,))
    i = int(order[0])
    return GridBest(prob.alloc(found[i], resolution), float(vals[i]))



def grid_region_cloud(states: StatesLike, P: float, resolution: float) -> np.ndarray:
    """All rate pairs ``(R0, R1)`` reached by grid allocations of total power at most ``P``.

    Returns an ``(N, 2)`` array.
    """
    prob = _Problem(states, 2)
    K = _grid_scale(P, resolution)
    out = []
    for X in _lattice_chunks(prob.cost, K, MAX_POINTS):
        r01, r02, r1 = prob.rates(X, resolution)
        out.append(np.column_stack([np.minimum(r01, r02), r1]))
    return np.concatenate(out)


# -- outage ------------------------------------------------------------------

def bisect_min_power(state, targets, hi: float = 1e12, iters: int = 200) -> float:
    """Smallest power whose one-block region contains ``targets``, by bisection
    on :func:`region_contains`; ``inf`` if even ``hi`` does not suffice."""
    if region_contains(state, 0.0, targets):
        return 0.0
    if not region_contains(state, hi, targets):
        return math.inf
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if region_contains(state, mid, targets):
            hi = mid
        else:
            lo = mid
    return hi


def brute_force_plan(weights: Sequence, pmin: Sequence, P) -> object:
    """Minimum outage over plans serving a subset of states fully and at most
    one more state partially, with average power at most ``P``.

    Pure Python arithmetic: ``Fraction`` inputs give an exact answer.  States
    with ``pmin = inf`` can never be served.
    """
    if len(weights) != len(pmin):
        raise InvalidInput("weights and pmin differ in length")
    if len(weights) > 16:
        raise InvalidInput("brute force is limited to 16 states")
    n = len(weights)
    finite = [p != math.inf for p in pmin]
    total = sum(weights)
    best = total
    served = [0] * (1 << n)
    spent = [0] * (1 << n)
    for mask in range(1, 1 << n):
        low = mask & -mask
        i = low.bit_length() - 1
        rest = mask ^ low
        if not finite[i] or spent[rest] is None:
            spent[mask] = None
            continue
        spent[mask] = spent[rest] + weights[i] * pmin[i]
        served[mask] = served[rest] + weights[i]
    for mask in range(1 << n):
        cost = spent[mask]
        if cost is None or cost > P:
            continue
        got = served[mask]
        left = P - cost
        extra = 0
        for j in range(n):
            if mask >> j & 1 or not finite[j]:
                continue
            need = weights[j] * pmin[j]
            frac = 1 if need <= left else left / need
            extra = max(extra, frac * weights[j])
        best = min(best, total - got - extra)
    return best


# -- two-atom correlation example -------------------------------------------

def _two_atom_rate(x, P2, a, b):
    """Secrecy rate with power ``x`` on atom 0 and ``P2 - x`` on atom 1 (probability 1/2 each)."""
    total = 0.0
    for p, ai, bi in ((x, a[0], b[0]), (P2 - x, a[1], b[1])):
        if ai < bi and p > 0:
            gain = math.log2(1 + p / ai) - (math.log2(1 + p / bi) if math.isfinite(bi) else 0.0)
            total += 0.5 * COMPLEX * max(gain, 0.0)
    return total


def two_state_secrecy(correlation: str, P: float, mu_sq: float = 1.0,
                      grid: int = 4001) -> float:
    """Secrecy capacity of the two-atom fading model by direct search.

    Gains are 0 or 1 with probability 1/2.  ``identical`` gives equal gains at
    both receivers; ``anti`` gives receiver 1 the good state exactly when
    receiver 2 has the bad one.  The power ``x`` on the first atom is searched
    over ``[0, 2P]`` (endpoints included) and refined by golden-section steps.
    """
    if not P >= 0 or not mu_sq > 0:
        raise InvalidInput("P must be nonnegative and mu_sq positive")
    inv = lambda g: mu_sq / g if g > 0 else math.inf  # noqa: E731
    if correlation == "identical":
        gains = ((0.0, 0.0), (1.0, 1.0))
    elif correlation == "anti":
        gains = ((1.0, 0.0), (0.0, 1.0))
    else:
        raise InvalidInput("correlation must be 'identical' or 'anti'")
    a = [inv(g1) for g1, _ in gains]
    b = [inv(g2) for _, g2 in gains]
    P2 = 2.0 * P
    if P2 == 0:
        return 0.0
    xs = [P2 * k / (grid - 1) for k in range(grid)]
    vals = [_two_atom_rate(x, P2, a, b) for x in xs]
    k = max(range(grid), key=lambda i: vals[i])
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, grid - 1)]
    best = vals[k]
    phi = (math.sqrt(5) - 1) / 2
    for _ in range(200):
        if hi - lo <= 1e-15 * max(1.0, P2):
            break
        m1, m2 = hi - phi * (hi - lo), lo + phi * (hi - lo)
        if _two_atom_rate(m1, P2, a, b) >= _two_atom_rate(m2, P2, a, b):
            hi = m2
        else:
            lo = m1
    for x in (lo, hi, 0.5 * (lo + hi)):
        v = _two_atom_rate(x, P2, a, b)
        if v > best:
            best = v
    return best
