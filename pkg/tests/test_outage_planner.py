import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from bccsec.channel_core import COMPLEX, EffectiveState, InvalidInput, StateBatch
from bccsec.oracle import brute_force_plan
from bccsec.outage_planner import (
    InfeasibleBudget,
    OutagePlan,
    PlanMode,
    TargetRates,
    common_power,
    constant_common_plan,
    delta_min_power,
    min_power_confidential,
    min_power_pair,
    outage_probability,
    plan_allocation,
    required_power,
    threshold_plan,
)
from bccsec.rate_region import region_contains

S = EffectiveState(1.0, 2.0, COMPLEX)
SQ2 = math.sqrt(2.0)


def test_min_power_hand_values():
    assert_allclose(min_power_pair(S, TargetRates(1.0, 0.5)), SQ2 / (1 - SQ2 / 2), rtol=1e-14)
    assert_allclose(min_power_pair(S, TargetRates(1.0, 0.5)), 4.828427, rtol=1e-6)
    assert min_power_pair(S, TargetRates(1.0, 1.5)) == math.inf
    assert_allclose(min_power_confidential(S, 0.5), SQ2, rtol=1e-14)
    assert_allclose(common_power(S, 1.0), 2.0, rtol=1e-14)
    assert_allclose(delta_min_power(S, TargetRates(1.0, 0.5)), 2 * (SQ2 - 1) / (1 - SQ2 / 2),
                    rtol=1e-14)
    assert_allclose(delta_min_power(S, TargetRates(1.0, 0.5)), 2.828427, rtol=1e-6)


def test_layered_split_adds_up():
    # confidential layer first, then the common layer over it as noise
    q = min_power_confidential(S, 0.5)
    total = min_power_pair(S, TargetRates(1.0, 0.5))
    common = total - q
    assert_allclose(math.log2(1 + common / (S.b + q)), 1.0, rtol=1e-12)


def test_degenerate_targets():
    assert min_power_confidential(S, 0.0) == 0.0
    assert common_power(S, 0.0) == 0.0
    assert delta_min_power(S, TargetRates(1.0, 0.0)) == 0.0
    assert_allclose(common_power(EffectiveState(1.5, 1.5, COMPLEX), 1.0), 1.5)
    deaf = EffectiveState(1.0, math.inf, COMPLEX)
    assert_allclose(min_power_confidential(deaf, 2.0), 3.0)
    assert_allclose(min_power_pair(S, TargetRates(0.7, 0.0)), (2 ** 0.7 - 1) * 2.0, rtol=1e-14)
    assert min_power_pair(EffectiveState(2.0, 1.0, COMPLEX), TargetRates(0.0, 0.1)) == math.inf
    # exactly at the feasibility edge
    assert min_power_confidential(S, 1.0) == math.inf


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0, 2), st.floats(0.01, 2))
def test_delta_identity_and_confidential_special_case(a, b, r0, r1):
    s = EffectiveState(a, b, COMPLEX)
    t = TargetRates(r0, r1)
    pair = min_power_pair(s, t)
    delta = delta_min_power(s, t)
    if math.isinf(pair):
        assert math.isinf(delta)
        return
    if s.in_A:
        assert_allclose(delta, pair - common_power(s, r0), rtol=1e-9)
    assert_allclose(delta_min_power(s, TargetRates(0.0, r1)), min_power_confidential(s, r1),
                    rtol=1e-12)


@given(st.floats(0.1, 5), st.floats(0.01, 5), st.floats(0, 2), st.floats(0.01, 1), st.floats(1e-3, 0.5))
def test_min_power_increasing(a, gap, r0, r1, dr):
    s = EffectiveState(a, a + gap, COMPLEX)
    lo = min_power_pair(s, TargetRates(r0, r1))
    if math.isinf(lo):
        return
    assert min_power_pair(s, TargetRates(r0 + dr, r1)) > lo
    assert min_power_pair(s, TargetRates(r0, r1 + dr)) > lo


def test_min_power_blows_up_at_edge():
    edge = math.log2(S.b / S.a)
    vals = [min_power_pair(S, TargetRates(0.3, edge - 10.0 ** -k)) for k in (2, 4, 6, 8)]
    assert vals == sorted(vals) and vals[-1] > 1e7


def test_batch_and_scalar_agree():
    rng = np.random.default_rng(0)
    batch = StateBatch(rng.uniform(0.2, 4, 30), rng.uniform(0.2, 4, 30), COMPLEX, 1 / 30)
    t = TargetRates(0.4, 0.3)
    arr = min_power_pair(batch, t)
    assert_allclose(arr, [min_power_pair(s, t) for s in batch], rtol=1e-15)


def _thirds():
    return [EffectiveState(1.0, 2.0, COMPLEX, Fraction(1, 3)) for _ in range(3)]


def test_threshold_hand_instance_exact():
    states = _thirds()
    plan = threshold_plan(states, [1, 2, 4], Fraction(9, 10))
    assert (plan.s_star, plan.w_star) == (2, Fraction(17, 20))
    assert outage_probability(states, plan, [1, 2, 4]) == Fraction(23, 60)


def test_threshold_plan_full_and_empty_budgets():
    states = _thirds()
    assert outage_probability(states, threshold_plan(states, [1, 2, 4], Fraction(7, 3)),
                              [1, 2, 4]) == 0
    assert outage_probability(states, threshold_plan(states, [1, 2, 4], 0), [1, 2, 4]) == 1
    plan = threshold_plan(states, [0, 2, math.inf], 0)
    assert outage_probability(states, plan, [0, 2, math.inf]) == Fraction(2, 3)
    plan = threshold_plan(states, [1, 2, math.inf], 100)
    assert outage_probability(states, plan, [1, 2, math.inf]) == Fraction(1, 3)


def test_threshold_plan_rejects_bad_weights():
    with pytest.raises(InvalidInput):
        threshold_plan([EffectiveState(1.0, 2.0, COMPLEX, 0.4)], [1.0], 1.0)
    with pytest.raises(InvalidInput):
        OutagePlan(1.0, 1.5, TargetRates())


def test_plan_allocation_hand_instance():
    plan = OutagePlan(2.0, 0.85, TargetRates(0.0, 0.0), PlanMode.JOINT)
    states = {p: EffectiveState(1.0, 1.0 + 1.0, COMPLEX) for p in (1, 2, 4)}
    # the plan ranks by required power; emulate the three levels with common-rate targets
    for need, u, expect in ((1.0, 0.0, 1.0), (4.0, 0.0, 0.0), (2.0, 0.5, 2.0), (2.0, 0.9, 0.0)):
        r0 = math.log2(1 + need / 2.0)
        p = OutagePlan(plan.s_star, plan.w_star, TargetRates(r0, 0.0), PlanMode.JOINT)
        assert_allclose(plan_allocation(states[1], p, u), expect, rtol=1e-12)


def test_constant_common_cases():
    states = [EffectiveState(1.0, 2.0, COMPLEX, 0.5), EffectiveState(2.0, 1.0, COMPLEX, 0.5)]
    t = TargetRates(1.0, 0.5)
    p0 = 0.5 * (common_power(states[0], 1.0) + common_power(states[1], 1.0))
    with pytest.raises(InfeasibleBudget) as err:
        constant_common_plan(states, t, p0 * 0.99)
    assert_allclose(err.value.p0, p0)
    plan = constant_common_plan(states, t, p0)
    assert outage_probability(states, plan) == 1.0
    delta = delta_min_power(states[0], t)
    plan = constant_common_plan(states, t, p0 + 0.5 * delta)
    assert plan.w_star == 1
    assert outage_probability(states, plan) == 0.5
    assert_allclose(plan_allocation(states[0], plan), common_power(states[0], 1.0) + delta)
    assert_allclose(plan_allocation(states[1], plan), common_power(states[1], 1.0))
    only_common = constant_common_plan(states, TargetRates(1.0, 0.0), p0)
    assert outage_probability(states, only_common) == 0.0


def test_threshold_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(30):
        n = int(rng.integers(1, 9))
        den = int(rng.integers(n, 4 * n + 1))
        cuts = sorted(rng.choice(np.arange(1, den), n - 1, replace=False).tolist()) if n > 1 else []
        edges = [0] + cuts + [den]
        weights = [Fraction(edges[i + 1] - edges[i], den) for i in range(n)]
        pmin = [Fraction(int(rng.integers(0, 20)), int(rng.integers(1, 5))) for _ in range(n)]
        if n > 2:
            pmin[0] = math.inf
        P = Fraction(int(rng.integers(0, 40)), 7)
        states = [EffectiveState(1.0, 2.0, COMPLEX, w) for w in weights]
        got = outage_probability(states, threshold_plan(states, pmin, P), pmin)
        assert got == brute_force_plan(weights, pmin, P)


def _spent(states, plan, pmin):
    total = 0
    for s, p in zip(states, pmin):
        if p == math.inf:
            continue
        if p < plan.s_star:
            total += s.weight * p
        elif p == plan.s_star:
            total += s.weight * p * plan.w_star
    return total


@settings(max_examples=60)
@given(st.lists(st.integers(0, 30), min_size=1, max_size=10), st.integers(0, 200))
def test_spent_power_never_exceeds_budget(levels, budget):
    n = len(levels)
    states = [EffectiveState(1.0, 2.0, COMPLEX, Fraction(1, n)) for _ in range(n)]
    P = Fraction(budget, 10)
    plan = threshold_plan(states, levels, P)
    spent = _spent(states, plan, levels)
    assert spent <= P
    if outage_probability(states, plan, levels) > 0:
        assert spent == P


def test_outage_monotone_in_budget_and_targets():
    rng = np.random.default_rng(8)
    batch = StateBatch(rng.exponential(1.0, 400), rng.exponential(2.0, 400), COMPLEX, 1 / 400)
    budgets = [0.0, 0.2, 0.5, 1.0, 2.0, 5.0]

    def curve(t):
        need = required_power(batch, t)
        return [outage_probability(batch, threshold_plan(batch, need.tolist(), P, t), need)
                for P in budgets]

    base = curve(TargetRates(0.2, 0.3))
    assert all(x >= y - 1e-15 for x, y in zip(base, base[1:]))
    for bumped in (TargetRates(0.4, 0.3), TargetRates(0.2, 0.6)):
        assert all(b >= a - 1e-15 for a, b in zip(base, curve(bumped)))


def test_outage_cross_checks_with_region_membership():
    rng = np.random.default_rng(17)
    n = 200
    batch = StateBatch(rng.exponential(1.0, n), rng.exponential(0.5, n), COMPLEX, 1 / n)
    t = TargetRates(0.3, 0.4)
    need = min_power_pair(batch, t)
    plan = threshold_plan(batch, need.tolist(), 0.8, t)
    draws = np.random.default_rng(1).random(n)
    served = [region_contains(s, plan_allocation(s, plan, u), t, rtol=1e-9)
              for s, u in zip(batch, draws)]
    q = outage_probability(batch, plan, need)
    # only the single boundary sample can differ between expected and realized service
    assert abs((1 - np.mean(served)) - q) <= 1.0 / n + 1e-12
