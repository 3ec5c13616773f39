"""Invariant checks behind ``shus validate``.

Every check returns a :class:`Check`; :func:`run_checks` collects them.  The
update rules are always looked up through the :mod:`shus.adapt` module at call
time so the fault injections in :data:`FAULTS` reach the reference path.
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import asdict, dataclass

import numpy as np

from .. import adapt, kernel, oracle
from .._backend import available_backends
from ..adapt import LogOccupation, PartialBias, SHUS, SHUSAlpha
from ..chain import Chain
from ..model import TargetModel, reference_weights


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def as_dict(self) -> dict:
        out = asdict(self)
        value = float(self.value)
        out["value"] = None if math.isnan(value) else value
        return out


# ---------------------------------------------------------------------------
# fault injection


def _shus_update_without_theta(occ, hit_stratum):
    # tau(hit) += gamma instead of gamma * theta(hit)
    h = hit_stratum - 1
    g = occ.scheme.gamma * math.exp(-(occ.nu[h] + occ.renorm_count * occ.log_M))
    return adapt._apply_log_increment(occ, h, g)


def _alpha_stepsize_without_count(sum_exp, r, log_M, gamma_a, exponent):
    return _ORIGINALS["shus_alpha_stepsize"](sum_exp, 0, log_M, gamma_a, exponent)


FAULTS = {
    "drop-theta-factor": ("shus_update", _shus_update_without_theta),
    "forget-renorm-count": ("shus_alpha_stepsize", _alpha_stepsize_without_count),
}
_ORIGINALS = {"shus_update": adapt.shus_update, "shus_alpha_stepsize": adapt.shus_alpha_stepsize}


@contextlib.contextmanager
def injected_fault(name: str | None):
    """Temporarily replace one update-rule function in :mod:`shus.adapt`."""
    if name is None:
        yield
        return
    if name not in FAULTS:
        raise ValueError(f"unknown fault {name!r}; choose from {sorted(FAULTS)}")
    attr, fake = FAULTS[name]
    setattr(adapt, attr, fake)
    try:
        yield
    finally:
        setattr(adapt, attr, _ORIGINALS[attr])


# ---------------------------------------------------------------------------
# checks


def check_sa_identity(n: int = 10**5, d: int = 8, seed: int = 0, tol: float = 1e-12) -> Check:
    """SHUS update equals ``theta + g H + g Lambda`` for random states and hits."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        theta = rng.dirichlet(np.ones(d)) + 1e-3
        theta /= theta.sum()
        S = math.exp(rng.uniform(0.0, 5.0))
        occ = LogOccupation(nu=np.log(theta * S), scheme=SHUS(1.0))
        hit = int(rng.integers(1, d + 1))
        g = adapt.current_stepsize(occ)
        got = adapt.shus_update(occ, hit).theta
        H, Lam = adapt.sa_residual(occ.theta, hit, g)
        want = occ.theta + g * H + g * Lam
        worst = max(worst, float(np.max(np.abs(got / want - 1.0))))
    return Check("sa_identity", worst < tol, worst, tol, f"{n} random (theta, hit) pairs, d={d}")


def check_stepsize_bounds(n_steps: int = 10**5, d: int = 12, seed: int = 0, rtol: float = 1e-12) -> Check:
    """``g1/(1+n g1) <= g_{n+1} <= g1/sqrt(1 + 2 n g1 min theta_0)`` along a SHUS run."""
    chain = Chain(TargetModel(1.0, d), SHUS(1.0), seed=seed)
    g1 = chain.next_stepsize()
    rows = chain.run_traced(n_steps)
    n = rows[:, 0] - 1.0  # row k carries g_k = g_{n+1}
    g = rows[:, 5]
    lower = g1 / (1.0 + n * g1)
    upper = g1 / np.sqrt(1.0 + 2.0 * n * g1 / d)
    excess = max(float(np.max(lower / g - 1.0)), float(np.max(g / upper - 1.0)))
    return Check("stepsize_bounds", excess <= rtol, excess, rtol, f"SHUS beta=1 d={d}, {n_steps} steps")


def _relative_gap(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def _m_invariance_reference(model, scheme, n_steps, Ms, seed):
    runs = []
    for M in Ms:
        occ = LogOccupation.uniform(model.d, scheme, M)
        state = kernel.ChainState(rng=kernel.NoiseStream(seed))
        _, occ, rec = kernel.reference_run(model, occ, kernel.ProposalConfig(model.stratum_width), n_steps, state)
        runs.append((rec, occ.log_theta, occ.renorm_count))
    return runs


def _m_invariance_compiled(model, scheme, n_steps, Ms, seed, backend):
    runs = []
    for M in Ms:
        chain = Chain(model, scheme, seed=seed, M=M, backend=backend)
        rows = chain.run_traced(n_steps)
        runs.append((rows[:, 1:], chain.log_theta, chain.renorm_count))
    return runs


def check_m_invariance(
    path: str = "reference",
    n_steps: int = 10**5,
    beta: float = 10.0,
    d: int = 48,
    Ms=(1e6, 1e10),
    seed: int = 0,
    tol: float = 1e-9,
) -> Check:
    """``ln theta_n`` trajectories do not depend on the renormalization threshold."""
    model = TargetModel(beta, d)
    scheme = SHUSAlpha(1.0, 0.6)
    if path == "reference":
        runs = _m_invariance_reference(model, scheme, n_steps, Ms, seed)
    else:
        runs = _m_invariance_compiled(model, scheme, n_steps, Ms, seed, path)
    (rec_a, lt_a, r_a), (rec_b, lt_b, r_b) = runs
    if r_a == 0:
        return Check(f"m_invariance_{path}", False, math.nan, tol, "no renormalization happened; check is vacuous")
    pos_gap = _relative_gap(rec_a[:, :2], rec_b[:, :2])
    lt_gap = max(_relative_gap(rec_a[:, 3], rec_b[:, 3]), _relative_gap(lt_a, lt_b))
    gap = max(pos_gap, lt_gap)
    detail = f"SHUS^alpha(0.6) beta={beta} d={d}, {n_steps} steps, renormalizations {r_a} vs {r_b}"
    return Check(f"m_invariance_{path}", gap < tol, gap, tol, detail)


def check_backends(n_steps: int = 5000, d: int = 12, beta: float = 5.0, seed: int = 3) -> list[Check]:
    """Every loop backend reproduces the reference path bit for bit, for every scheme."""
    model = TargetModel(beta, d)
    schemes = [
        SHUS(1.0),
        adapt.WLDeterministic(float(d)),
        adapt.WLDeterministic(0.5, 0.8, linear=True),
        SHUSAlpha(1.0, 0.7),
        PartialBias(1.0, 0.5),
    ]
    out = []
    for backend in available_backends():
        worst = 0.0
        for scheme in schemes:
            occ = LogOccupation.uniform(d, scheme, 1e4)
            state = kernel.ChainState(rng=kernel.NoiseStream(seed))
            _, occ, rec = kernel.reference_run(model, occ, kernel.ProposalConfig(model.stratum_width), n_steps, state)
            chain = Chain(model, scheme, seed=seed, M=1e4, backend=backend)
            rows = chain.run_traced(n_steps)
            same = (
                np.array_equal(rows[:, 1:], rec)
                and np.array_equal(chain.nu, occ.nu)
                and chain.renorm_count == occ.renorm_count
            )
            if not same:
                worst = max(worst, _relative_gap(rows[:, 1:], rec), 1e-300)
        out.append(Check(f"backend_{backend}", worst == 0.0, worst, 0.0, f"{len(schemes)} schemes x {n_steps} steps"))
    return out


def check_oracles(n: int = 10**4, d: int = 12, seed: int = 0) -> list[Check]:
    """Fixed point, Lyapunov descent, gradient and biased-mass identities."""
    rng = np.random.default_rng(seed)
    ts = reference_weights(TargetModel(1.0, d), grid_resolution=481).theta_star
    h_star = float(np.max(np.abs(oracle.mean_field(ts, ts))))
    worst_ip = -math.inf
    for _ in range(n):
        theta = rng.dirichlet(np.ones(d))
        theta = np.maximum(theta, 1e-12)
        theta /= theta.sum()
        worst_ip = max(worst_ip, oracle.lyapunov(theta, ts)[1])
    # central differences lose accuracy like eps^2 / theta^2, so the
    # gradient points are kept away from the simplex boundary
    eps = 1e-5
    fd_gap = 0.0
    for _ in range(20):
        theta = 0.5 * rng.dirichlet(np.ones(d)) + 0.5 / d
        grad = oracle.lyapunov_gradient(theta, ts)
        fd = np.empty(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = eps
            fd[i] = (_V(theta + e, ts) - _V(theta - e, ts)) / (2 * eps)
        fd_gap = max(fd_gap, float(np.max(np.abs(fd - grad) / np.abs(grad))))
    mass_gap = float(np.max(np.abs(oracle.biased_stratum_masses(ts, ts) - 1.0 / d)))
    return [
        Check("mean_field_fixed_point", h_star == 0.0, h_star, 0.0),
        Check("lyapunov_descent", worst_ip < 0.0, worst_ip, 0.0, f"max <grad V, h> over {n} random theta"),
        Check("lyapunov_gradient", fd_gap < 1e-6, fd_gap, 1e-6, "central differences, step 1e-5, 20 interior points"),
        Check("biased_masses_uniform", mass_gap < 1e-15, mass_gap, 1e-15),
    ]


def _V(theta, theta_star) -> float:
    # V without the simplex constraint, for finite differences
    return float(-np.sum(theta_star * np.log(theta / theta_star)))


def check_partial_bias(n: int = 10**5, d: int = 6, seed: int = 0) -> Check:
    """With ``a = 1`` the partial-bias rule bit-matches the SHUS rule."""
    rng = np.random.default_rng(seed)
    occ_s = LogOccupation.uniform(d, SHUS(2.0), 1e3)
    occ_p = LogOccupation.uniform(d, PartialBias(2.0, 1.0), 1e3)
    mismatches = 0
    for hit in rng.integers(1, d + 1, size=n):
        occ_s = adapt.shus_update(occ_s, int(hit))
        occ_p = adapt.partial_bias_update(occ_p, int(hit))
        if not (np.array_equal(occ_s.nu, occ_p.nu) and occ_s.renorm_count == occ_p.renorm_count):
            mismatches += 1
            occ_p = LogOccupation(occ_s.nu.copy(), occ_p.scheme, 1e3, occ_s.renorm_count, occ_s.n, occ_s.sum_exp)
    return Check("partial_bias_degeneration", mismatches == 0, mismatches, 0, f"{n} random hits, d={d}")


def run_checks(fault: str | None = None, quick: bool = False) -> list[Check]:
    """Run the whole suite, optionally with one update rule corrupted."""
    scale = 10 if quick else 1
    with injected_fault(fault):
        checks = [
            check_sa_identity(n=10**5 // scale),
            check_stepsize_bounds(n_steps=10**5 // scale),
            check_m_invariance("reference", n_steps=10**5 // scale),
        ]
        checks += [check_m_invariance(b, n_steps=10**5 // scale) for b in available_backends()]
        checks += check_backends()
        checks += check_oracles(n=10**4 // scale)
        checks.append(check_partial_bias(n=10**5 // scale))
    return checks
