"""Random problem instances shared by the unit and acceptance tests."""

import math

import numpy as np

from bccsec.channel_core import REAL, EffectiveState
from bccsec.power_alloc import Weights
from bccsec.rate_region import LN2


def random_parallel(rng, max_states=3):
    """Real Gaussian subchannels with noise variances in [0.25, 4] and a budget in [0.1, 10]."""
    n = int(rng.integers(1, max_states + 1))
    states = [EffectiveState(*rng.uniform(0.25, 4.0, 2), REAL, 1.0) for _ in range(n)]
    P = float(rng.uniform(0.1, 10.0))
    w = Weights(1.0, float(rng.uniform(0.1, 10.0)))
    return states, w, P


def lipschitz_bound(states, w):
    """Bound on the objective's sensitivity to any single power coordinate."""
    slope = max(s.weight * s.prefactor / (LN2 * min(s.a, s.b)) for s in states)
    return 2.0 * (w.gamma0 + w.gamma1) * slope


def kkt_residuals(states, w, case, lam, alloc, h_rel=1e-6):
    """Finite-difference derivatives of the case Lagrangian, per state and per weight.

    The Lagrangian is ``gamma0 (alpha r01 + (1 - alpha) r02) + gamma1 r1 - lam * power``;
    returns ``(dL/dp0, dL/dp1)`` arrays (``p1`` derivatives are ``nan`` off A).
    """
    from bccsec.channel_core import PowerAllocation
    from bccsec.rate_region import weighted_rate_triple

    alpha = case.tilt

    def lag(p0, p1):
        r = weighted_rate_triple(states, PowerAllocation(p0, p1))
        power = sum(s.weight * (x + y) for s, x, y in zip(states, p0, p1))
        return w.gamma0 * (alpha * r.r01 + (1 - alpha) * r.r02) + w.gamma1 * r.r1 - lam * power

    p0, p1 = alloc.p0.copy(), alloc.p1.copy()
    d0 = np.zeros(len(states))
    d1 = np.full(len(states), np.nan)
    for i, s in enumerate(states):
        for arr, out, ok in ((p0, d0, True), (p1, d1, s.in_A)):
            if not ok:
                continue
            h = h_rel * (1.0 + arr[i])
            up = arr.copy()
            up[i] += h
            if arr[i] > h:
                dn = arr.copy()
                dn[i] -= h
                args_up = (up, p1) if arr is p0 else (p0, up)
                args_dn = (dn, p1) if arr is p0 else (p0, dn)
                out[i] = (lag(*args_up) - lag(*args_dn)) / (2 * h) / s.weight
            else:
                args_up = (up, p1) if arr is p0 else (p0, up)
                out[i] = (lag(*args_up) - lag(p0, p1)) / h / s.weight
    return d0, d1


def isclose_rel(x, y, rel):
    return abs(x - y) <= rel * max(abs(x), abs(y), math.ulp(1.0))
