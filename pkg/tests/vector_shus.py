"""Independent SHUS simulator used as a test oracle.

Plain-arithmetic weights ``tau`` (no log scale, no renormalization), numpy
vectorized over chains, its own random stream.  Only valid while ``tau`` stays
far from overflow, i.e. for short runs.
"""
import numpy as np

from shus.model import potential_energy


def shus_exit_times(beta, d, sigma, n_chains, gamma=1.0, R=1.2, cap=10**6, seed=0):
    rng = np.random.default_rng(seed)
    x = np.tile([-1.0, 0.0], (n_chains, 1))
    u_x = potential_energy(x[:, 0], x[:, 1])
    tau = np.full((n_chains, d), 1.0 / d)
    rows = np.arange(n_chains)
    exit_at = np.full(n_chains, -1)
    alive = np.ones(n_chains, dtype=bool)

    def strata(x1):
        return np.minimum(np.floor((x1 + R) / (2 * R) * d).astype(np.int64), d - 1)

    i_x = strata(x[:, 0])
    for n in range(1, cap + 1):
        y = x + sigma * rng.standard_normal((n_chains, 2))
        ok = np.abs(y[:, 0]) <= R
        y1 = np.clip(y[:, 0], -R, R)
        u_y = potential_energy(y1, y[:, 1])
        i_y = strata(y1)
        log_ratio = -beta * (u_y - u_x) - (np.log(tau[rows, i_y]) - np.log(tau[rows, i_x]))
        acc = ok & (np.log(rng.random(n_chains)) < log_ratio) & alive
        x[acc] = y[acc]
        u_x = np.where(acc, u_y, u_x)
        i_x = np.where(acc, i_y, i_x)
        theta_hit = tau[rows, i_x] / tau.sum(axis=1)
        tau[rows, i_x] += np.where(alive, gamma * theta_hit, 0.0)
        done = alive & (x[:, 0] > 1.0)
        exit_at[done] = n
        alive &= ~done
        if not alive.any():
            break
    return exit_at
