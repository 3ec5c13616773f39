"""Exit-time estimation, scaling-law fits and weight-convergence statistics."""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .adapt import DEFAULT_M, SHUSAlpha, UpdateScheme
from .chain import DEFAULT_START, Chain
from .model import DEFAULT_HALF_WIDTH, TargetModel
from .rng import replica_seed_sequence

logger = logging.getLogger(__name__)

DEFAULT_CAP = 10**9
EXIT_THRESHOLD = 1.0
DSV_FRACTION = 0.05
BIAS_SNR = 4.0


# ---------------------------------------------------------------------------
# exit times


def first_exit_time(
    model: TargetModel,
    scheme: UpdateScheme,
    sigma: float | None = None,
    seed=0,
    cap: int = DEFAULT_CAP,
    threshold: float = EXIT_THRESHOLD,
    start=DEFAULT_START,
    M: float = DEFAULT_M,
    backend: str | None = None,
) -> int | None:
    """First step index ``N >= 1`` with ``X_{N,1} > threshold``; ``None`` if censored at ``cap``."""
    chain = Chain(model, scheme, sigma=sigma, seed=seed, M=M, start=start, backend=backend)
    return chain.run_until_exit(threshold, cap)


@dataclass
class ExitTimeEstimate:
    """Exit times of ``K`` replicas at one inverse temperature.

    ``exit_times`` holds one entry per replica in replica order, with ``-1``
    for censored replicas; ``mean`` and ``stderr`` use uncensored ones only.
    """

    beta: float
    exit_times: np.ndarray
    cap: int = DEFAULT_CAP

    @property
    def K(self) -> int:
        return len(self.exit_times)

    @property
    def censored(self) -> np.ndarray:
        return self.exit_times < 0

    @property
    def n_censored(self) -> int:
        return int(self.censored.sum())

    @property
    def all_censored(self) -> bool:
        return self.n_censored == self.K

    @property
    def uncensored(self) -> np.ndarray:
        return self.exit_times[~self.censored]

    @property
    def mean(self) -> float:
        x = self.uncensored
        return float(np.mean(x)) if len(x) else math.nan

    @property
    def stderr(self) -> float:
        x = self.uncensored
        if len(x) < 2:
            return math.nan
        return float(np.std(x, ddof=1) / math.sqrt(len(x)))

    @property
    def relative_error(self) -> float:
        return self.stderr / self.mean


def _exit_task(args):
    model, scheme, sigma, seq, cap, threshold, M = args
    t = first_exit_time(model, scheme, sigma=sigma, seed=seq, cap=cap, threshold=threshold, M=M)
    return -1 if t is None else t


def mean_exit_time(
    betas: Sequence[float],
    K: int,
    scheme: UpdateScheme,
    d: int,
    sigma: float | None = None,
    half_width: float = DEFAULT_HALF_WIDTH,
    seed: int = 0,
    cap: int = DEFAULT_CAP,
    threshold: float = EXIT_THRESHOLD,
    M: float = DEFAULT_M,
    workers: int = 1,
) -> list[ExitTimeEstimate]:
    """Average first exit time for each ``beta`` over ``K`` independent replicas.

    Replica ``r`` at grid position ``j`` draws its noise from
    ``SeedSequence(seed, spawn_key=(j, r))``, so results do not depend on
    ``workers``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    out = []
    for j, beta in enumerate(betas):
        model = TargetModel(beta=float(beta), d=d, half_width=half_width)
        tasks = [
            (model, scheme, sigma, replica_seed_sequence(seed, r, cell=j), cap, threshold, M)
            for r in range(K)
        ]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                times = list(pool.map(_exit_task, tasks, chunksize=max(1, K // (4 * workers))))
        else:
            times = [_exit_task(t) for t in tasks]
        est = ExitTimeEstimate(beta=float(beta), exit_times=np.array(times, dtype=np.int64), cap=cap)
        if est.all_censored:
            logger.warning("beta=%g: all %d replicas censored at %d", beta, K, cap)
        out.append(est)
    return out


def write_exit_times_csv(path, estimates: Sequence[ExitTimeEstimate], header: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["beta", "replica", "exit_iter", "censored"])
        for est in estimates:
            for r, t in enumerate(est.exit_times):
                w.writerow([repr(est.beta), r, int(t), int(t < 0)])


# ---------------------------------------------------------------------------
# fits


@dataclass
class FitResult:
    """Least-squares line ``y = slope * x + intercept`` on transformed data.

    ``prefactor`` is ``exp(intercept)``: the constant ``C`` of the scaling law
    ``t = C exp(mu * beta)`` (``x_transform="identity"``) or
    ``t = C * x**mu`` (``x_transform="log"``).
    """

    slope: float
    intercept: float
    residual: float
    x_transform: str
    y_transform: str = "log"
    n_points: int = 0

    @property
    def prefactor(self) -> float:
        return math.exp(self.intercept)

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "prefactor": self.prefactor,
            "intercept": self.intercept,
            "residual": self.residual,
            "x_transform": self.x_transform,
            "y_transform": self.y_transform,
            "n_points": self.n_points,
        }


def _line_fit(x, y, x_transform, min_points=3) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError("abscissa and ordinate lengths differ")
    if len(x) < min_points:
        raise ValueError(f"need at least {min_points} points, got {len(x)}")
    if np.ptp(x) == 0:
        raise ValueError("degenerate abscissa: all points share the same x")
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.linalg.norm(A @ coef - y))
    return FitResult(
        slope=float(coef[0]), intercept=float(coef[1]), residual=resid,
        x_transform=x_transform, n_points=len(x),
    )


def _positive(values, name):
    values = np.asarray(values, dtype=float)
    if np.any(~(values > 0)):
        raise ValueError(f"{name} must be positive")
    return values


def fit_exponential_in_beta(betas, times) -> FitResult:
    """Fit ``t = C exp(mu beta)``: least squares on ``(beta, ln t)``."""
    return _line_fit(betas, np.log(_positive(times, "times")), "identity")


def fit_power_law(betas, times) -> FitResult:
    """Fit ``t = C beta**mu``: least squares on ``(ln beta, ln t)``."""
    return _line_fit(np.log(_positive(betas, "betas")), np.log(_positive(times, "times")), "log")


def fit_decay(n, values, window: tuple[float, float] | None = None) -> FitResult:
    """Fit ``v = C n**slope`` over ``window[0] <= n <= window[1]``; decay exponent is ``-slope``."""
    n = np.asarray(n, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is not None:
        keep = (n >= window[0]) & (n <= window[1])
        n, values = n[keep], values[keep]
    return _line_fit(np.log(_positive(n, "n")), np.log(_positive(values, "values")), "log")


def fits_from_estimates(estimates: Sequence[ExitTimeEstimate]) -> dict[str, FitResult]:
    """Both scaling fits over the cells with no censored replica."""
    usable = [e for e in estimates if e.n_censored == 0]
    if len(usable) < len(estimates):
        logger.warning("excluding %d cell(s) with censored replicas from fits", len(estimates) - len(usable))
    if len(usable) < 3:
        raise ValueError("fewer than 3 fully uncensored cells; cannot fit")
    betas = [e.beta for e in usable]
    means = [e.mean for e in usable]
    return {
        "exponential": fit_exponential_in_beta(betas, means),
        "power": fit_power_law(betas, means),
    }


# ---------------------------------------------------------------------------
# weight statistics


@dataclass
class WeightStatistics:
    """Across-replica statistics of ``ln theta_n(i)``.

    ``mean`` and ``variance`` have shape ``(T, d)``; ``bias`` has shape ``(T,)``
    and is ``sqrt(sum_i (mean(i) / ln theta*(i) - 1)**2)``.
    """

    n: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    bias: np.ndarray
    K: int
    log_theta_star: np.ndarray = field(repr=False, default=None)

    @property
    def bias_noise(self) -> np.ndarray:
        """Expected contribution of finite-``K`` sampling noise to ``bias**2``.

        ``E[bias**2]`` exceeds the squared systematic bias by
        ``sum_i variance(i) / (K ln theta*(i)**2)``.
        """
        return (self.variance / self.K / self.log_theta_star**2).sum(axis=1)

    def noise_corrected_bias(self) -> np.ndarray:
        """``bias`` with :attr:`bias_noise` subtracted (clipped at zero)."""
        return np.sqrt(np.clip(self.bias**2 - self.bias_noise, 0.0, None))

    def signal_dominated(self, min_ratio: float = BIAS_SNR) -> np.ndarray:
        """Checkpoints where ``bias**2`` is at least ``min_ratio`` times :attr:`bias_noise`.

        Past these the measured bias decays like the noise of the means,
        ``n**(-alpha/2)``, rather than like the systematic error.
        """
        noise = self.bias_noise
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(noise > 0, self.bias**2 >= min_ratio * noise, self.bias > 0)

    def to_csv(self, path, header: Sequence[str] = ()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["n", "stratum", "mean", "variance", "bias"])
            for t, n in enumerate(self.n):
                for i in range(self.mean.shape[1]):
                    w.writerow([int(n), i + 1, repr(float(self.mean[t, i])),
                                repr(float(self.variance[t, i])), repr(float(self.bias[t]))])


def weight_statistics(log_thetas, theta_star, n=None) -> WeightStatistics:
    """Empirical mean, variance and normalized bias of ``ln theta_n`` over replicas.

    Parameters
    ----------
    log_thetas : array, shape (K, T, d)
        ``ln theta_n^k(i)`` for replica ``k`` at checkpoint ``t``.
    theta_star : array, shape (d,)
        Reference weights; none may equal 1 (their logs divide).
    n : array, shape (T,), optional
        Step indices of the checkpoints.
    """
    x = np.asarray(log_thetas, dtype=float)
    if x.ndim != 3:
        raise ValueError("log_thetas must have shape (K, T, d)")
    K = x.shape[0]
    if K < 2:
        raise ValueError("need K >= 2 replicas for a variance")
    theta_star = np.asarray(theta_star, dtype=float)
    if np.any(theta_star <= 0):
        raise ValueError("reference weights must be positive")
    lts = np.log(theta_star)
    if np.any(lts == 0):
        raise ValueError("reference weight equal to 1: normalized bias undefined")
    mean = x.mean(axis=0)
    var = x.var(axis=0, ddof=1)
    bias = np.sqrt(((mean / lts - 1.0) ** 2).sum(axis=1))
    n = np.arange(x.shape[1]) if n is None else np.asarray(n)
    return WeightStatistics(n=n, mean=mean, variance=var, bias=bias, K=K, log_theta_star=lts)


def fit_variance_decay(stats: WeightStatistics, window=None) -> np.ndarray:
    """Per-stratum decay exponents ``a_i`` of ``variance(i) ~ C n**(-a_i)``."""
    return np.array([-fit_decay(stats.n, stats.variance[:, i], window).slope for i in range(stats.variance.shape[1])])


def fit_bias_decay(stats: WeightStatistics, window=None, min_ratio: float = BIAS_SNR) -> FitResult:
    """Fit ``bias ~ C n**slope`` over the signal-dominated checkpoints inside ``window``."""
    n = np.asarray(stats.n, dtype=float)
    keep = stats.signal_dominated(min_ratio) & (stats.bias > 0)
    if window is not None:
        keep &= (n >= window[0]) & (n <= window[1])
    return fit_decay(n[keep], stats.bias[keep])


def _checkpoint_task(args):
    model, scheme, sigma, seq, checkpoints, M = args
    chain = Chain(model, scheme, sigma=sigma, seed=seq, M=M)
    return chain.run_checkpoints(checkpoints)


def replica_log_weights(
    model: TargetModel,
    scheme: UpdateScheme,
    K: int,
    checkpoints: Sequence[int],
    sigma: float | None = None,
    seed: int = 0,
    M: float = DEFAULT_M,
    workers: int = 1,
) -> np.ndarray:
    """``ln theta_n`` of ``K`` independent replicas at ``checkpoints``; shape ``(K, T, d)``."""
    tasks = [(model, scheme, sigma, replica_seed_sequence(seed, r), list(checkpoints), M) for r in range(K)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_checkpoint_task, tasks, chunksize=max(1, K // (4 * workers))))
    else:
        rows = [_checkpoint_task(t) for t in tasks]
    return np.stack(rows)


def log_checkpoints(n_max: int, per_decade: int = 10, n_min: int = 10) -> np.ndarray:
    """Roughly log-spaced distinct integer step indices in ``[n_min, n_max]``."""
    decades = math.log10(n_max / n_min)
    pts = np.unique(np.round(np.logspace(math.log10(n_min), math.log10(n_max), int(decades * per_decade) + 1)))
    return pts.astype(np.int64)


# ---------------------------------------------------------------------------
# stepsizes and visited strata


def stepsize_trace(n, stepsizes, scheme: UpdateScheme, d: int) -> np.ndarray:
    """Stepsizes rescaled so that their long-run limit is known.

    SHUS and other ``1/n`` schemes: ``n * gamma_n`` (limit ``d``).
    SHUS^alpha: ``n**alpha * gamma_n`` divided by its almost-sure limit
    ``gamma(alpha)**(1-alpha) d**alpha (1-alpha)**alpha`` (limit 1).
    """
    n = np.asarray(n, dtype=float)
    g = np.asarray(stepsizes, dtype=float)
    if isinstance(scheme, SHUSAlpha):
        return n**scheme.alpha * g / scheme.limit_constant(d)
    return n * g


def stratum_histogram(strata, d: int, fraction: float = DSV_FRACTION) -> tuple[np.ndarray, int]:
    """Visit counts per stratum and the number ``d_sv`` of well-visited strata.

    ``strata`` are 1-based stratum indices of the visited points.  A stratum
    counts as visited when its count reaches ``fraction`` of the largest count.
    """
    strata = np.asarray(strata, dtype=np.int64)
    if strata.size and (strata.min() < 1 or strata.max() > d):
        raise ValueError(f"stratum indices must lie in 1..{d}")
    counts = np.bincount(strata - 1, minlength=d)
    return counts, visited_strata(counts, fraction)


def visited_strata(counts, fraction: float = DSV_FRACTION) -> int:
    counts = np.asarray(counts)
    if counts.sum() == 0:
        return 0
    return int(np.sum(counts >= fraction * counts.max()))


def pre_exit_histogram(
    model: TargetModel,
    scheme: UpdateScheme,
    sigma: float | None = None,
    seed=0,
    cap: int = DEFAULT_CAP,
    threshold: float = EXIT_THRESHOLD,
    fraction: float = DSV_FRACTION,
) -> tuple[np.ndarray, int, int | None]:
    """Occupancy counts up to the first exit, ``d_sv`` and the exit index."""
    chain = Chain(model, scheme, sigma=sigma, seed=seed)
    t = chain.run_until_exit(threshold, cap)
    counts = chain.counts.copy()
    return counts, visited_strata(counts, fraction), t
