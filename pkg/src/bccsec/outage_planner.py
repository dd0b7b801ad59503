"""Outage-minimizing power plans for block fading.

Each block must carry the target pair ``(R0, R1)`` on its own.  Given the
minimum power each state needs, the optimal long-term plan serves states in
order of increasing requirement until the average budget runs out, serving
the last (boundary) level only with probability ``w*``.

The minimum-power functions accept a single :class:`EffectiveState` (returning
a float) or a :class:`StateBatch` (returning an array).
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass
from itertools import accumulate
from typing import Sequence

import numpy as np

from .channel_core import EffectiveState, InvalidInput, StateBatch, StatesLike, as_batch

__all__ = [
    "TargetRates",
    "PlanMode",
    "OutagePlan",
    "InfeasibleBudget",
    "min_power_pair",
    "min_power_confidential",
    "common_power",
    "delta_min_power",
    "required_power",
    "threshold_plan",
    "plan_allocation",
    "outage_probability",
    "constant_common_plan",
]


class InfeasibleBudget(ValueError):
    """The budget cannot cover the power needed for the common rate in every state."""

    def __init__(self, budget, p0):
        super().__init__(f"budget {budget!r} is below the common-rate power P0 = {p0!r}")
        self.budget = budget
        self.p0 = p0


@dataclass(frozen=True)
class TargetRates:
    r0: float = 0.0
    r1: float = 0.0

    def __post_init__(self):
        if not (self.r0 >= 0 and self.r1 >= 0):
            raise InvalidInput("target rates must be nonnegative")

    def __iter__(self):
        return iter((self.r0, self.r1))


class PlanMode(str, enum.Enum):
    JOINT = "joint"
    CONFIDENTIAL = "confidential"
    CONSTANT_COMMON = "constant-common"


@dataclass(frozen=True)
class OutagePlan:
    """Threshold rule: serve states needing less than ``s_star``, serve states
    needing exactly ``s_star`` with probability ``w_star``."""

    s_star: float
    w_star: float
    targets: TargetRates
    mode: PlanMode = PlanMode.JOINT
    residual_budget: float = math.nan

    def __post_init__(self):
        if not 0 <= self.w_star <= 1:
            raise InvalidInput(f"w_star must lie in [0, 1], got {self.w_star!r}")


def _unpack(state):
    if isinstance(state, EffectiveState):
        return (np.array(state.a), np.array(state.b), np.array(state.prefactor)), True
    batch = as_batch(state)
    return (batch.a, batch.b, batch.c), False


def _finish(x, scalar):
    return float(x) if scalar else x


def _confidential_denominator(a, b, c, r1):
    g = np.exp2(r1 / c)
    with np.errstate(divide="ignore"):
        return g, 1.0 / a - g / b


def min_power_confidential(state, r1: float):
    """Smallest power carrying confidential rate ``r1`` alone; ``inf`` if unreachable.

    Reachable iff ``r1 < c log2(b/a)`` (strict).
    """
    (a, b, c), scalar = _unpack(state)
    if r1 < 0:
        raise InvalidInput("r1 must be nonnegative")
    if r1 == 0:
        return _finish(np.zeros(np.shape(a)), scalar)
    g, den = _confidential_denominator(a, b, c, r1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, (g - 1.0) / den, np.inf)
    return _finish(out, scalar)


def common_power(state, r0: float):
    """Power carrying common rate ``r0`` to both receivers: ``(2^(r0/c) - 1) max(a, b)``."""
    (a, b, c), scalar = _unpack(state)
    if r0 < 0:
        raise InvalidInput("r0 must be nonnegative")
    if r0 == 0:
        return _finish(np.zeros(np.shape(a)), scalar)
    out = np.expm1(r0 / c * math.log(2.0)) * np.maximum(a, b)
    return _finish(out, scalar)


def min_power_pair(state, targets: TargetRates):
    """Smallest power supporting ``(R0, R1)`` in one block.

    The confidential layer is sized first; the common layer then sees it as
    noise.  With ``k = b/a`` the total is
    ``[(2^R0 - 1)(k - 1) + 2^R1 - 1] / (1/a - 2^R1 / b)`` on its domain
    ``R1 < log2(k)``, and ``inf`` outside.  ``R1 = 0`` reduces to
    :func:`common_power` in every state.
    """
    (a, b, c), scalar = _unpack(state)
    r0, r1 = targets
    if r1 == 0:
        return common_power(state, r0)
    g1, den = _confidential_denominator(a, b, c, r1)
    g0m1 = np.expm1(r0 / c * math.log(2.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        common = np.where(r0 > 0, g0m1 * (b / a - 1.0), 0.0)
        out = np.where(den > 0, (common + (g1 - 1.0)) / den, np.inf)
    return _finish(out, scalar)


def delta_min_power(state, targets: TargetRates):
    """Extra power beyond :func:`common_power` needed to add confidential rate ``R1``:
    ``2^R0 (2^R1 - 1) / (1/a - 2^R1 / b)``, ``inf`` when ``R1 >= log2(b/a)``."""
    (a, b, c), scalar = _unpack(state)
    r0, r1 = targets
    if r1 == 0:
        return _finish(np.zeros(np.shape(a)), scalar)
    g1, den = _confidential_denominator(a, b, c, r1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, np.exp2(r0 / c) * (g1 - 1.0) / den, np.inf)
    return _finish(out, scalar)


def required_power(state, targets: TargetRates, mode: PlanMode = PlanMode.JOINT):
    """Per-state power the threshold rule ranks by, for each planning mode."""
    mode = PlanMode(mode)
    if mode is PlanMode.JOINT:
        return min_power_pair(state, targets)
    if mode is PlanMode.CONFIDENTIAL:
        return min_power_confidential(state, targets.r1)
    return delta_min_power(state, targets)


# -- threshold rule -----------------------------------------------------------

_WEIGHT_TOL = 1e-9


def _threshold(weights: Sequence, pmin: Sequence, P):
    """Return ``(s_star, w_star)`` for masses ``weights`` at levels ``pmin``.

    Plain Python arithmetic, so ``Fraction`` inputs give exact results.
    """
    levels: dict = {}
    for wt, p in zip(weights, pmin):
        if p != math.inf and wt > 0:
            levels[p] = levels.get(p, 0) + wt
    if P <= 0:
        return 0, 1
    values = sorted(levels)
    if not values:
        return math.inf, 1
    cost = list(accumulate(v * levels[v] for v in values))
    # first level whose weak set already spends the budget
    k = bisect.bisect_left(cost, P)
    if k == len(values):
        return math.inf, 1
    below = cost[k - 1] if k else 0
    atom = cost[k] - below
    w_star = (P - below) / atom if atom > 0 else 1
    return values[k], w_star


def _state_weights(states):
    if isinstance(states, StateBatch):
        return states.w.tolist()
    return [s.weight for s in states]


def threshold_plan(states: StatesLike, pmin: Sequence, P,
                   targets: TargetRates = TargetRates(),
                   mode: PlanMode = PlanMode.JOINT) -> OutagePlan:
    """Outage-minimizing plan for required powers ``pmin`` under average budget ``P``.

    ``s_star`` is the supremum of thresholds whose strictly-below set costs
    less than ``P``; ``w_star`` spends the remainder on the states sitting at
    ``s_star``.  With ``P <= 0`` only states needing zero power are served.
    """
    weights = _state_weights(states)
    if len(weights) != len(pmin):
        raise InvalidInput("pmin must have one entry per state")
    total = sum(weights)
    if abs(total - 1) > _WEIGHT_TOL:
        raise InvalidInput(f"state weights must sum to 1, got {float(total)!r}")
    s_star, w_star = _threshold(weights, pmin, P)
    return OutagePlan(s_star, w_star, targets, PlanMode(mode), P)


def _served_fraction(p, plan: OutagePlan):
    if p == math.inf:
        return 0
    if p < plan.s_star:
        return 1
    if p == plan.s_star:
        return plan.w_star
    return 0


def plan_allocation(state: EffectiveState, plan: OutagePlan, u: float = 0.0):
    """Power the plan spends on ``state``; ``u`` is the caller's uniform draw
    deciding the boundary atom.

    In constant-common mode the common-rate power is always included.
    """
    need = required_power(state, plan.targets, plan.mode)
    base = common_power(state, plan.targets.r0) if plan.mode is PlanMode.CONSTANT_COMMON else 0.0
    served = need < plan.s_star or (need == plan.s_star and u < plan.w_star)
    if need == math.inf:
        served = False
    return base + need if served else base


def outage_probability(states: StatesLike, plan: OutagePlan, pmin=None):
    """Probability mass left unserved by ``plan`` (boundary atom counted by ``1 - w*``)."""
    weights = _state_weights(states)
    if pmin is None:
        pmin = required_power(as_batch(states), plan.targets, plan.mode)
    if isinstance(pmin, np.ndarray) and isinstance(plan.s_star, float):
        pmin = np.asarray(pmin, float)
        w = np.asarray(weights, float)
        served = np.where(pmin < plan.s_star, 1.0,
                          np.where(pmin == plan.s_star, float(plan.w_star), 0.0))
        served[~np.isfinite(pmin)] = 0.0
        return math.fsum(w * (1.0 - served))
    return sum(wt * (1 - _served_fraction(p, plan)) for wt, p in zip(weights, pmin))


def constant_common_plan(states: StatesLike, targets: TargetRates, P) -> OutagePlan:
    """Plan that always delivers ``R0`` and spends the rest on adding ``R1``.

    Raises
    ------
    InfeasibleBudget
        If ``P`` is below ``P0 = E[common_power]``.
    """
    batch = as_batch(states)
    base = common_power(batch, targets.r0)
    p0 = float(np.dot(batch.w, base)) if len(batch) else 0.0
    if P < p0 or not math.isfinite(p0):
        raise InfeasibleBudget(P, p0)
    delta = delta_min_power(batch, targets)
    return threshold_plan(batch, delta.tolist(), P - p0, targets, PlanMode.CONSTANT_COMMON)
