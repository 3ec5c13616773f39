"""Closed-form reference objects used to cross-check the samplers.

Nothing here calls the chain loops: the frozen-weight sampler below is a
separate vectorized numpy implementation, so a bug in the production kernel
cannot hide behind a matching bug in its oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import TargetModel, potential_energy


def _simplex(theta, name="theta"):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return theta


def mean_field(theta, theta_star) -> np.ndarray:
    """``h(theta) = (theta* - theta) / sum_i theta*(i)/theta(i)``, the stationary mean of ``H``."""
    theta = _simplex(theta)
    theta_star = _simplex(theta_star, "theta_star")
    return (theta_star - theta) / np.sum(theta_star / theta)


def lyapunov(theta, theta_star) -> tuple[float, float]:
    """``V(theta) = -sum theta*(i) ln(theta(i)/theta*(i))`` and ``<grad V, h>``."""
    theta = _simplex(theta)
    theta_star = _simplex(theta_star, "theta_star")
    V = float(-np.sum(theta_star * np.log(theta / theta_star)))
    return V, float(np.dot(lyapunov_gradient(theta, theta_star), mean_field(theta, theta_star)))


def lyapunov_gradient(theta, theta_star) -> np.ndarray:
    return -np.asarray(theta_star, dtype=float) / np.asarray(theta, dtype=float)


@dataclass(frozen=True)
class MeanFieldEvaluation:
    theta: np.ndarray
    h: np.ndarray
    V: float
    inner_product: float


def evaluate_mean_field(theta, theta_star) -> MeanFieldEvaluation:
    V, ip = lyapunov(theta, theta_star)
    return MeanFieldEvaluation(np.asarray(theta, dtype=float), mean_field(theta, theta_star), V, ip)


def biased_stratum_masses(theta, theta_star, a: float = 1.0) -> np.ndarray:
    """Stratum masses of ``pi_{theta,a}``: ``(theta*(i)/theta(i)**a) / sum_j theta*(j)/theta(j)**a``."""
    theta = _simplex(theta)
    theta_star = _simplex(theta_star, "theta_star")
    w = theta_star / theta**a
    return w / w.sum()


def unbiasing_average(model: TargetModel, positions, thetas, f) -> float:
    """Importance-sampling average ``d/n sum_k theta_{k-1}(I(X_k)) f(X_k)``.

    Parameters
    ----------
    positions : array, shape (n, 2)
        ``X_1, ..., X_n``.
    thetas : array, shape (n, d)
        ``theta_0, ..., theta_{n-1}``; row ``k`` weights ``positions[k]``.
    f : callable
        Vectorized over ``(x1, x2)`` arrays.
    """
    positions = np.asarray(positions, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    if positions.ndim != 2 or positions.shape[1] != 2:
        raise ValueError("positions must have shape (n, 2)")
    if thetas.shape != (len(positions), model.d):
        raise ValueError(f"thetas must have shape ({len(positions)}, {model.d}), got {thetas.shape}")
    idx = stratum_indices(model, positions[:, 0])
    w = thetas[np.arange(len(positions)), idx]
    vals = np.asarray(f(positions[:, 0], positions[:, 1]), dtype=float)
    return float(model.d * np.mean(w * vals))


def stratum_indices(model: TargetModel, x1) -> np.ndarray:
    """0-based stratum of each ``x1`` (vectorized)."""
    R = model.half_width
    idx = np.floor((np.asarray(x1) + R) / (2.0 * R) * model.d).astype(np.int64)
    return np.minimum(idx, model.d - 1)


def frozen_chain(
    model: TargetModel,
    log_theta,
    sigma: float,
    n_chains: int,
    n_steps: int,
    seed: int = 0,
    a: float = 1.0,
    burn_in: int = 0,
    start=(-1.0, 0.0),
):
    """Many independent MH chains for ``pi_{theta,a}`` with ``theta`` held fixed.

    Vectorized over chains.  Returns ``(visits, positions)``: per-stratum visit
    counts of shape ``(n_chains, d)`` accumulated after ``burn_in`` and the
    final positions ``(n_chains, 2)``.
    """
    rng = np.random.default_rng(seed)
    log_theta = np.asarray(log_theta, dtype=float)
    d = model.d
    R = model.half_width
    x = np.tile(np.asarray(start, dtype=float), (n_chains, 1))
    u_x = potential_energy(x[:, 0], x[:, 1])
    i_x = stratum_indices(model, x[:, 0])
    visits = np.zeros((n_chains, d), dtype=np.int64)
    rows = np.arange(n_chains)
    for step in range(n_steps):
        y = x + sigma * rng.standard_normal((n_chains, 2))
        inside = np.abs(y[:, 0]) <= R
        y1c = np.clip(y[:, 0], -R, R)
        u_y = potential_energy(y1c, y[:, 1])
        i_y = stratum_indices(model, y1c)
        log_ratio = -model.beta * (u_y - u_x) - a * (log_theta[i_y] - log_theta[i_x])
        acc = inside & (np.log1p(-rng.random(n_chains)) <= log_ratio)
        x[acc] = y[acc]
        u_x = np.where(acc, u_y, u_x)
        i_x = np.where(acc, i_y, i_x)
        if step >= burn_in:
            visits[rows, i_x] += 1
    return visits, x

