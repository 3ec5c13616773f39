"""Fast adaptive chains: state arrays plus a backend ``run_steps`` loop."""
from __future__ import annotations

import math

import numpy as np

from . import _backend
from .adapt import (
    DEFAULT_M,
    LogOccupation,
    PartialBias,
    SHUSAlpha,
    UpdateScheme,
    WLDeterministic,
    _sequential_sum_exp,
    current_stepsize,
    scheme_gamma,
)
from .model import TargetModel, potential_energy
from .rng import NoiseStream

TRACE_CHUNK = 1 << 16
DEFAULT_START = (-1.0, 0.0)


def default_sigma(model: TargetModel) -> float:
    """Proposal scale equal to one stratum width, ``2R/d``."""
    return model.stratum_width


class Chain:
    """One adaptive Metropolis-Hastings chain with its weight state.

    Parameters
    ----------
    model : TargetModel
    scheme : UpdateScheme
    sigma : float, optional
        Proposal scale; defaults to the stratum width ``2R/d``.
    seed : int or numpy.random.SeedSequence
    M : float
        Renormalization threshold of the log-weights.
    start : (float, float)
        ``X_0``; must lie in the slab.
    backend : {"compiled", "python"}, optional
        Loop implementation; defaults to the import-time choice.
    """

    def __init__(
        self,
        model: TargetModel,
        scheme: UpdateScheme,
        sigma: float | None = None,
        seed=0,
        M: float = DEFAULT_M,
        start=DEFAULT_START,
        backend: str | None = None,
    ):
        if model.potential is not potential_energy:
            raise ValueError("the chain loops hard-wire the benchmark potential")
        if abs(start[0]) > model.half_width:
            raise ValueError(f"start {start} lies outside the slab")
        if not M > 1.0:
            raise ValueError("M must exceed 1")
        self.model = model
        self.scheme = scheme
        self.sigma = default_sigma(model) if sigma is None else float(sigma)
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        self.M = float(M)
        self._core = _backend.get_backend(backend)
        d = model.d
        self.pos = np.array([float(start[0]), float(start[1])])
        self.nu = np.full(d, -math.log(d))
        self.counters = np.zeros(2, dtype=np.int64)
        self.sums = np.array([_sequential_sum_exp(self.nu), potential_energy(self.pos[0], self.pos[1])])
        self.counts = np.zeros(d, dtype=np.int64)
        expo = scheme.exponent if isinstance(scheme, SHUSAlpha) else 0.0
        alpha = scheme.alpha if isinstance(scheme, WLDeterministic) else 1.0
        self.params = np.array(
            [
                model.beta,
                model.half_width,
                self.sigma,
                scheme.bias_exponent,
                scheme_gamma(scheme),
                alpha,
                expo,
                math.log(self.M),
                self.M,
            ]
        )
        self.noise = NoiseStream(seed)
        self.accepted = 0

    @property
    def backend(self) -> str:
        return "python" if self._core is _backend._pycore else "compiled"

    @property
    def n(self) -> int:
        return int(self.counters[0])

    @property
    def renorm_count(self) -> int:
        return int(self.counters[1])

    @property
    def position(self) -> tuple[float, float]:
        return float(self.pos[0]), float(self.pos[1])

    @property
    def log_theta(self) -> np.ndarray:
        return self.nu - math.log(self.sums[0])

    @property
    def theta(self) -> np.ndarray:
        return np.exp(self.log_theta)

    @property
    def log_total(self) -> float:
        """``ln S_n``."""
        return math.log(self.sums[0]) + self.renorm_count * math.log(self.M)

    def occupation(self) -> LogOccupation:
        """Snapshot of the weight state as an :class:`~shus.adapt.LogOccupation`."""
        return LogOccupation(
            nu=self.nu.copy(),
            scheme=self.scheme,
            renorm_threshold=self.M,
            renorm_count=self.renorm_count,
            n=self.n,
            sum_exp=float(self.sums[0]),
        )

    def next_stepsize(self) -> float:
        """``gamma_{n+1}``; undefined for partial bias, which depends on the next hit."""
        if isinstance(self.scheme, PartialBias):
            raise ValueError("the partial-bias stepsize is not predictable")
        return current_stepsize(self.occupation())

    def _run(self, n_steps: int, exit_x1: float, trace: np.ndarray | None) -> tuple[int, bool]:
        done_total = 0
        while done_total < n_steps:
            avail = self.noise.available()
            take = min(avail, n_steps - done_total)
            tr = None if trace is None else trace[done_total : done_total + take]
            done, acc = self._core.run_steps(
                self.pos, self.nu, self.counters, self.sums, self.counts, self.params,
                self.scheme.code, self.noise.normals, self.noise.uniforms,
                self.noise.cursor, take, exit_x1, tr,
            )
            self.noise.advance(done)
            self.accepted += acc
            done_total += done
            if done > 0 and self.pos[0] > exit_x1:
                return done_total, True
        return done_total, False

    def run(self, n_steps: int) -> "Chain":
        """Advance by ``n_steps`` steps."""
        self._run(int(n_steps), math.inf, None)
        return self

    def run_until_exit(self, threshold: float = 1.0, cap: int = 10**9) -> int | None:
        """Run until the first step index with ``x1 > threshold``.

        Returns that index ``N >= 1`` counted from the chain's creation, or
        ``None`` when ``cap`` total steps pass without an exit.  The start
        point itself never counts as an exit.
        """
        remaining = cap - self.n
        if remaining <= 0:
            return None
        _, exited = self._run(remaining, threshold, None)
        return self.n if exited else None

    def run_traced(self, n_steps: int, stride: int = 1) -> np.ndarray:
        """Advance ``n_steps`` steps recording every ``stride``-th step.

        Returns rows ``(n, x1, x2, stratum, ln_theta_hit, stepsize)`` for the
        steps whose post-step index ``n`` is a multiple of ``stride``.
        """
        stride = int(stride)
        if stride < 1:
            raise ValueError("stride must be >= 1")
        out = []
        buf = np.empty((min(TRACE_CHUNK, max(n_steps, 1)), 5))
        left = int(n_steps)
        while left > 0:
            m = min(left, len(buf))
            n0 = self.n
            self._run(m, math.inf, buf[:m])
            idx = np.arange(n0 + 1, n0 + m + 1)
            keep = idx % stride == 0
            if keep.any():
                out.append(np.column_stack([idx[keep], buf[:m][keep]]))
            left -= m
        if not out:
            return np.empty((0, 6))
        return np.concatenate(out)

    def run_checkpoints(self, checkpoints) -> np.ndarray:
        """``ln theta_n`` at each (increasing) step index in ``checkpoints``."""
        out = np.empty((len(checkpoints), self.model.d))
        for j, c in enumerate(checkpoints):
            if c < self.n:
                raise ValueError("checkpoints must be increasing and not in the past")
            self.run(c - self.n)
            out[j] = self.log_theta
        return out
