"""Random-walk Metropolis-Hastings kernel targeting the biased densities.

For normalized stratum weights ``theta`` and bias exponent ``a`` the kernel
leaves invariant

    pi_{theta,a}(x)  proportional to  pi(x) / theta(I(x))**a,

so ``a = 1`` is the fully biased ``pi_theta``.  The proposal is an isotropic
Gaussian step, symmetric, so the acceptance ratio involves only the biased
density.  Everything is evaluated in log scale.

This module is the readable, step-at-a-time reference.  Long runs go through
:mod:`shus.chain`, which drives the compiled loop; both read the same noise
stream and are cross-checked in the test suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import TargetModel, log_target_density, stratum_index
from .rng import NoiseStream


@dataclass(frozen=True)
class ProposalConfig:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass
class ChainState:
    """Current point of one chain plus its private noise stream."""

    position: tuple[float, float] = (-1.0, 0.0)
    step_count: int = 0
    rng: NoiseStream = field(default_factory=NoiseStream)


def propose(state: ChainState, cfg: ProposalConfig) -> tuple[float, float]:
    """Gaussian candidate around the current position.

    Consumes one noise triple (its uniform is discarded), i.e. exactly what one
    :func:`mh_step` consumes.
    """
    z1, z2, _ = state.rng.draw()
    x1, x2 = state.position
    return x1 + cfg.sigma * z1, x2 + cfg.sigma * z2


def log_acceptance(model: TargetModel, log_theta, a: float, start, end) -> float:
    """Log Metropolis ratio for ``pi_{theta,a}`` from ``start`` to ``end``.

    ``log_theta`` may be any vector differing from ``ln theta`` by a constant
    (e.g. renormalized log-occupations); only differences enter.
    """
    lp_end = log_target_density(model, *end)
    if lp_end == -math.inf:
        return -math.inf
    lp_start = log_target_density(model, *start)
    i_end = stratum_index(model, end[0]) - 1
    i_start = stratum_index(model, start[0]) - 1
    return (lp_end - lp_start) - a * (log_theta[i_end] - log_theta[i_start])


def mh_step(
    state: ChainState,
    model: TargetModel,
    log_theta,
    a: float,
    cfg: ProposalConfig,
) -> tuple[ChainState, bool, int]:
    """Advance ``state`` by one MH step, in place.

    Returns ``(state, accepted, stratum)`` where ``stratum`` (1-based) is that
    of the post-decision position, which is what the weight update counts:
    a rejected move re-counts the current stratum.
    """
    z1, z2, u = state.rng.draw()
    x1, x2 = state.position
    y1 = x1 + cfg.sigma * z1
    y2 = x2 + cfg.sigma * z2
    if abs(y1) > model.half_width:
        accepted = False
    else:
        # -beta * (U(y) - U(x)) rather than a difference of log densities: same
        # rounding as the loop kernels
        beta = model.beta
        ratio = -beta * (model.potential(y1, y2) - model.potential(x1, x2))
        i_y = stratum_index(model, y1) - 1
        i_x = stratum_index(model, x1) - 1
        ratio -= a * (log_theta[i_y] - log_theta[i_x])
        accepted = math.log(u) <= ratio
    if accepted:
        state.position = (y1, y2)
    state.step_count += 1
    return state, accepted, stratum_index(model, state.position[0])


def reference_run(model: TargetModel, occ, cfg: ProposalConfig, n_steps: int, state: ChainState | None = None):
    """Step-by-step adaptive run built only from :mod:`kernel` and :mod:`adapt`.

    Slow; used to cross-check the loop kernels and by ``validate``.  Returns
    ``(state, occ, records)`` with one ``(x1, x2, stratum, ln_theta_hit,
    stepsize)`` record per step.
    """
    from . import adapt

    state = ChainState() if state is None else state
    a = occ.scheme.bias_exponent
    records = []
    for _ in range(n_steps):
        state, _, hit = mh_step(state, model, occ.nu, a, cfg)
        if isinstance(occ.scheme, adapt.PartialBias):
            g = adapt.current_stepsize(occ, hit_stratum=hit)
        else:
            g = adapt.current_stepsize(occ)
        occ = adapt.update(occ, hit)
        records.append((state.position[0], state.position[1], hit, float(occ.log_theta[hit - 1]), g))
    return state, occ, np.array(records, dtype=float).reshape(-1, 5)
