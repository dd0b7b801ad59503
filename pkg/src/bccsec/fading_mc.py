"""Monte Carlo drivers over fading models.

Expectations over the fading distribution are replaced by equal-weight
sample averages, and water levels are solved on that empirical distribution.
Samples are generated in fixed-size chunks, each from its own stream keyed by
``(seed, chunk index)``; sample ``i`` is therefore the same for any
``n_samples`` and any evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel_core import COMPLEX, FadingState, InvalidInput, StateBatch, effective_state
from .outage_planner import (
    InfeasibleBudget,
    PlanMode,
    TargetRates,
    common_power,
    outage_probability,
    required_power,
    threshold_plan,
)
from .power_alloc import (
    BoundaryPoint,
    SolverKnobs,
    Weights,
    boundary_sweep,
    wiretap_allocation,
)
from .rate_region import region_contains_many, state_rates

__all__ = [
    "RayleighModel",
    "DiscreteFadingModel",
    "MCConfig",
    "sample_gains",
    "sample_states",
    "atom_states",
    "two_atom_model",
    "default_weight_grid",
    "ErgodicBoundary",
    "ergodic_boundary",
    "secrecy_capacity",
    "uniform_baseline_rate",
    "OutagePoint",
    "outage_curve",
    "equal_power_outage",
]

CHUNK = 1 << 14
CORRELATIONS = ("independent", "identical", "anti")


@dataclass(frozen=True)
class RayleighModel:
    """Rayleigh fading: ``|h1|^2, |h2|^2`` exponential with means ``sigma1, sigma2``.

    ``correlation`` couples the two gains: ``independent``, ``identical``
    (same underlying draw, scaled) or ``anti`` (comonotone in opposite
    directions, driven by ``u`` and ``1 - u``).
    """

    sigma1: float
    sigma2: float
    mu_sq: float = 1.0
    nu_sq: float = 1.0
    correlation: str = "independent"

    def __post_init__(self):
        for name in ("sigma1", "sigma2", "mu_sq", "nu_sq"):
            if not getattr(self, name) > 0:
                raise InvalidInput(f"{name} must be positive")
        if self.correlation not in CORRELATIONS:
            raise InvalidInput(f"correlation must be one of {CORRELATIONS}")


@dataclass(frozen=True)
class DiscreteFadingModel:
    """Finitely many fading realizations with their probabilities."""

    atoms: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.atoms) != len(self.probs) or not self.atoms:
            raise InvalidInput("need one probability per atom")
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
            raise InvalidInput("atom probabilities must be nonnegative and sum to 1")


@dataclass(frozen=True)
class MCConfig:
    n_samples: int = 100_000
    seed: int = 0
    grid_size: int = 25

    def __post_init__(self):
        if int(self.n_samples) < 1:
            raise InvalidInput("n_samples must be at least 1")
        if self.grid_size < 1:
            raise InvalidInput("grid_size must be at least 1")


def _open_uniforms(rng, n):
    # strictly inside (0, 1) so both log(u) and log(1-u) stay finite
    return (rng.integers(0, 1 << 53, size=n, dtype=np.int64) + 0.5) / float(1 << 53)


def sample_gains(model: RayleighModel, cfg: MCConfig):
    """Power gains ``(|h1|^2, |h2|^2)`` for ``cfg.n_samples`` draws."""
    n = int(cfg.n_samples)
    n_chunks = -(-n // CHUNK)
    h1 = np.empty(n_chunks * CHUNK)
    h2 = np.empty(n_chunks * CHUNK)
    for k in range(n_chunks):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(k,)))
        u1 = _open_uniforms(rng, CHUNK)
        u2 = _open_uniforms(rng, CHUNK)
        e1 = -np.log(u1)
        if model.correlation == "independent":
            e2 = -np.log(u2)
        elif model.correlation == "identical":
            e2 = e1
        else:
            e2 = -np.log1p(-u1)
        sl = slice(k * CHUNK, (k + 1) * CHUNK)
        h1[sl] = model.sigma1 * e1
        h2[sl] = model.sigma2 * e2
    return h1[:n], h2[:n]


def sample_states(model: RayleighModel, cfg: MCConfig) -> StateBatch:
    """Equal-weight complex-channel states drawn from ``model``."""
    h1, h2 = sample_gains(model, cfg)
    with np.errstate(divide="ignore"):
        a = np.where(h1 > 0, model.mu_sq / h1, np.inf)
        b = np.where(h2 > 0, model.nu_sq / h2, np.inf)
    n = a.size
    return StateBatch(a, b, COMPLEX, np.full(n, 1.0 / n))


def atom_states(model: DiscreteFadingModel) -> StateBatch:
    states = [effective_state(atom, COMPLEX, p) for atom, p in zip(model.atoms, model.probs)]
    return StateBatch.from_states(states)


def two_atom_model(correlation: str, mu_sq: float = 1.0) -> DiscreteFadingModel:
    """Gains in ``{0, 1}`` with equal probability, either equal (``identical``)
    or complementary (``anti``) at the two receivers."""
    if correlation == "identical":
        pairs = ((0.0, 0.0), (1.0, 1.0))
    elif correlation == "anti":
        pairs = ((1.0, 0.0), (0.0, 1.0))
    else:
        raise InvalidInput("correlation must be 'identical' or 'anti'")
    atoms = tuple(FadingState(h1, h2, mu_sq, mu_sq) for h1, h2 in pairs)
    return DiscreteFadingModel(atoms, (0.5, 0.5))


def _states_for(model, cfg: Optional[MCConfig]) -> StateBatch:
    if isinstance(model, DiscreteFadingModel):
        return atom_states(model)
    if cfg is None:
        raise InvalidInput("a Monte Carlo config is needed for a continuous model")
    return sample_states(model, cfg)


def _standard_error(model, per_sample) -> float:
    """Standard error of the sample mean; zero for exact discrete models."""
    n = per_sample.size
    if n < 2 or isinstance(model, DiscreteFadingModel):
        return 0.0
    return float(np.std(per_sample, ddof=1) / math.sqrt(n))


def default_weight_grid(size: int = 25, lo: float = 0.05, hi: float = 50.0) -> list[Weights]:
    """Endpoints ``(1, 0)`` and ``(0, 1)`` plus log-spaced ratios ``gamma1/gamma0``."""
    ratios = np.geomspace(lo, hi, max(size - 2, 1))
    return [Weights(1.0, 0.0)] + [Weights(1.0, float(r)) for r in ratios] + [Weights(0.0, 1.0)]


@dataclass(frozen=True)
class ErgodicBoundary:
    points: list = field(repr=False)
    common_capacity: float = math.nan
    secrecy_capacity: float = math.nan
    common_se: float = 0.0
    secrecy_se: float = 0.0


def ergodic_boundary(model, P: float, cfg: Optional[MCConfig] = None,
                     weight_grid: Optional[Sequence[Weights]] = None,
                     knobs: SolverKnobs = SolverKnobs()) -> ErgodicBoundary:
    """Boundary of the ergodic region on sampled (or exact discrete) states.

    The weight grid must contain the endpoints ``(1, 0)`` and ``(0, 1)``;
    they give the common-only capacity and the wiretap secrecy capacity.
    """
    states = _states_for(model, cfg)
    grid = list(weight_grid) if weight_grid is not None else default_weight_grid(
        cfg.grid_size if cfg else 25)
    if Weights(1.0, 0.0) not in grid:
        grid.insert(0, Weights(1.0, 0.0))
    if Weights(0.0, 1.0) not in grid:
        grid.append(Weights(0.0, 1.0))
    points: list[BoundaryPoint] = boundary_sweep(states, P, grid, knobs)

    def contributions(bp):
        r01, r02, r1 = state_rates(states.a, states.b, states.c, states.in_A,
                                   bp.alloc.p0, bp.alloc.p1)
        return r01, r02, r1

    common = next(bp for bp in points if bp.weights == Weights(1.0, 0.0))
    secret = next(bp for bp in points if bp.weights == Weights(0.0, 1.0))
    r01, r02, _ = contributions(common)
    binding = r01 if common.rates.r01 <= common.rates.r02 else r02
    _, _, r1 = contributions(secret)
    return ErgodicBoundary(points, common.r0, secret.r1,
                           _standard_error(model, binding),
                           _standard_error(model, r1))


def secrecy_capacity(model, P: float, cfg: Optional[MCConfig] = None):
    """Wiretap secrecy capacity of ``model`` and its Monte Carlo standard error."""
    states = _states_for(model, cfg)
    sol = wiretap_allocation(states, P)
    _, _, r1 = state_rates(states.a, states.b, states.c, states.in_A, sol.alloc.p0, sol.alloc.p1)
    return sol.capacity, _standard_error(model, r1)


def uniform_baseline_rate(model, P: float, cfg: Optional[MCConfig] = None):
    """Secrecy rate of spending the same power ``P / Pr(A)`` on every state in A.

    Returns ``(rate, standard_error)``.
    """
    states = _states_for(model, cfg)
    in_A = states.in_A
    pr_A = float(states.w[in_A].sum())
    if pr_A == 0 or P == 0:
        return 0.0, 0.0
    p1 = np.where(in_A, P / pr_A, 0.0)
    _, _, r1 = state_rates(states.a, states.b, states.c, in_A, np.zeros(len(states)), p1)
    return float(np.dot(states.w, r1)), _standard_error(model, r1)


@dataclass(frozen=True)
class OutagePoint:
    P: float
    outage: float
    se: float


def _binomial_se(model, p: float, n: int) -> float:
    if n < 2 or isinstance(model, DiscreteFadingModel):
        return 0.0
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def outage_curve(model, targets: TargetRates, P_grid: Sequence[float],
                 cfg: Optional[MCConfig] = None,
                 mode: PlanMode = PlanMode.JOINT) -> list[OutagePoint]:
    """Minimum outage probability at each budget in ``P_grid``.

    In constant-common mode budgets below ``E[common_power]`` are infeasible
    and reported with ``outage = nan``.
    """
    mode = PlanMode(mode)
    states = _states_for(model, cfg)
    n = len(states)
    need = required_power(states, targets, mode)
    need_list = need.tolist()
    base = 0.0
    if mode is PlanMode.CONSTANT_COMMON:
        base = float(np.dot(states.w, common_power(states, targets.r0)))
    out = []
    for P in P_grid:
        if mode is PlanMode.CONSTANT_COMMON and (P < base or not math.isfinite(base)):
            out.append(OutagePoint(float(P), math.nan, math.nan))
            continue
        plan = threshold_plan(states, need_list, P - base, targets, mode)
        q = outage_probability(states, plan, need)
        out.append(OutagePoint(float(P), q, _binomial_se(model, q, n)))
    return out


def equal_power_outage(model, targets: TargetRates, P_grid: Sequence[float],
                       cfg: Optional[MCConfig] = None) -> list[OutagePoint]:
    """Outage when every block simply transmits at power ``P``."""
    states = _states_for(model, cfg)
    n = len(states)
    out = []
    for P in P_grid:
        ok = region_contains_many(states, float(P), (targets.r0, targets.r1))
        q = math.fsum(states.w[~ok])
        out.append(OutagePoint(float(P), q, _binomial_se(model, q, n)))
    return out


def infeasible_mass(model, targets: TargetRates, cfg: Optional[MCConfig] = None,
                    mode: PlanMode = PlanMode.JOINT):
    """Probability that no finite power supports the targets (the outage floor)."""
    states = _states_for(model, cfg)
    need = required_power(states, targets, mode)
    q = math.fsum(states.w[~np.isfinite(need)])
    return q, _binomial_se(model, q, len(states))


__all__ += ["infeasible_mass", "InfeasibleBudget"]
