"""Weight-update schemes for the adaptive biasing samplers.

Every scheme keeps unnormalized stratum weights ``tau_n(i)`` in logarithmic
scale, ``nu(i) = ln tau_n(i) - r_n ln M``, where ``r_n`` counts how many times
``ln M`` has been subtracted from all entries.  A renormalization happens right
after any update that brings ``sum(exp(nu))`` to ``M`` or above, so the
stored numbers stay bounded whatever the growth of ``tau_n``.  The
normalized weights ``theta_n`` and every stepsize are invariant under this
bookkeeping (up to rounding).

Schemes
-------
``SHUS``
    Additive update ``tau(i) += gamma * theta(i) * 1{hit = i}``, equivalently
    multiplicative with the adaptive stepsize ``gamma / S_n``.
``WLDeterministic``
    Wang-Landau with deterministic stepsizes ``gamma_star / n**alpha``, either
    the nonlinear (multiplicative) update or its linearization on ``theta``.
``SHUSAlpha``
    Multiplicative update with stepsize
    ``gamma(alpha) / ln(1 + S_n)**(alpha / (1 - alpha))``.
``PartialBias``
    ``tau(i) += gamma * theta(i)**a * 1{hit = i}``; the chain targets the
    partially biased density ``pi_{theta, a}``.

The scalar stepsize helpers below are the single definition used by the
reference (step-by-step) path; ``_pycore`` and ``_core`` inline the same
expressions operation for operation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

DEFAULT_M = 1e10

SHUS_CODE = 0
WL_NONLINEAR_CODE = 1
WL_LINEAR_CODE = 2
SHUS_ALPHA_CODE = 3
PARTIAL_BIAS_CODE = 4


@dataclass(frozen=True)
class SHUS:
    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    code = SHUS_CODE
    bias_exponent = 1.0


@dataclass(frozen=True)
class WLDeterministic:
    """Wang-Landau with stepsizes ``gamma_star / n**alpha``."""

    gamma_star: float
    alpha: float = 1.0
    linear: bool = False

    def __post_init__(self):
        if not self.gamma_star > 0:
            raise ValueError(f"gamma_star must be positive, got {self.gamma_star}")
        if not 0.5 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (1/2, 1], got {self.alpha}")
        if self.linear and not self.gamma_star < 1.0:
            # theta'(i) >= theta(i) * (1 - stepsize) must stay positive from the first step
            raise ValueError(
                f"the linear update needs a first stepsize below 1, got gamma_star={self.gamma_star}"
            )

    bias_exponent = 1.0

    @property
    def code(self) -> int:
        return WL_LINEAR_CODE if self.linear else WL_NONLINEAR_CODE


@dataclass(frozen=True)
class SHUSAlpha:
    """SHUS with stepsizes decaying like ``n**-alpha``.

    ``gamma`` is the user-facing scale; the update uses
    ``gamma_alpha = (1 - alpha)**(-alpha / (1 - alpha)) * gamma``, the choice
    for which the rule tends to plain SHUS as ``alpha -> 1``.
    """

    gamma: float = 1.0
    alpha: float = 0.6

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0.5 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (1/2, 1), got {self.alpha}")

    code = SHUS_ALPHA_CODE
    bias_exponent = 1.0

    @property
    def exponent(self) -> float:
        return self.alpha / (1.0 - self.alpha)

    @property
    def gamma_alpha(self) -> float:
        return gamma_alpha(self.alpha, self.gamma)

    def limit_constant(self, d: int) -> float:
        """Almost-sure limit of ``n**alpha * gamma_n``."""
        a = self.alpha
        return self.gamma_alpha ** (1.0 - a) * d**a * (1.0 - a) ** a


@dataclass(frozen=True)
class PartialBias:
    gamma: float = 1.0
    a: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 < self.a <= 1.0:
            raise ValueError(f"a must lie in (0, 1], got {self.a}")

    code = PARTIAL_BIAS_CODE

    @property
    def bias_exponent(self) -> float:
        return self.a


UpdateScheme = Union[SHUS, WLDeterministic, SHUSAlpha, PartialBias]


def gamma_alpha(alpha: float, gamma: float = 1.0) -> float:
    """``(1 - alpha)**(-alpha / (1 - alpha)) * gamma``."""
    return (1.0 - alpha) ** (-alpha / (1.0 - alpha)) * gamma


def scheme_gamma(scheme: UpdateScheme) -> float:
    """The scale parameter the kernels consume for ``scheme``."""
    if isinstance(scheme, WLDeterministic):
        return scheme.gamma_star
    if isinstance(scheme, SHUSAlpha):
        return scheme.gamma_alpha
    return scheme.gamma


# ---------------------------------------------------------------------------
# scalar stepsize helpers


def shus_stepsize(sum_exp: float, r: int, log_M: float, gamma: float) -> float:
    """``gamma / S_n`` with ``ln S_n = ln sum(exp(nu)) + r ln M``."""
    return gamma * math.exp(-(math.log(sum_exp) + r * log_M))


def shus_alpha_stepsize(sum_exp: float, r: int, log_M: float, gamma_a: float, exponent: float) -> float:
    """``gamma_a / ln(1 + S_n)**exponent`` evaluated from renormalized weights."""
    log1p_total = math.log(math.exp(-r * log_M) + sum_exp) + r * log_M
    return gamma_a / math.pow(log1p_total, exponent)


def wl_stepsize(n_next: int, gamma_star: float, alpha: float) -> float:
    return gamma_star / math.pow(n_next, alpha)


def _sequential_sum_exp(nu) -> float:
    s = 0.0
    for v in nu:
        s += math.exp(v)
    return s


# ---------------------------------------------------------------------------
# occupation state


@dataclass
class LogOccupation:
    """Renormalized log-weights of one chain.

    Attributes
    ----------
    nu : ndarray, shape (d,)
        ``ln tau_n(i) - r ln M``.
    scheme : UpdateScheme
    renorm_threshold : float
        ``M``.
    renorm_count : int
        ``r_n``.
    n : int
        Number of updates applied so far.
    sum_exp : float
        Running value of ``sum(exp(nu))``; refreshed exactly at each
        renormalization.
    """

    nu: np.ndarray
    scheme: UpdateScheme = field(default_factory=SHUS)
    renorm_threshold: float = DEFAULT_M
    renorm_count: int = 0
    n: int = 0
    sum_exp: float = float("nan")

    def __post_init__(self):
        self.nu = np.array(self.nu, dtype=float)
        if not self.renorm_threshold > 1.0:
            raise ValueError("renorm_threshold M must exceed 1")
        if math.isnan(self.sum_exp):
            self.sum_exp = _sequential_sum_exp(self.nu)

    @classmethod
    def uniform(cls, d: int, scheme: UpdateScheme = None, M: float = DEFAULT_M) -> "LogOccupation":
        """Start from ``tau_0 = (1/d, ..., 1/d)``."""
        scheme = SHUS() if scheme is None else scheme
        return cls(nu=np.full(d, -math.log(d)), scheme=scheme, renorm_threshold=M)

    @property
    def d(self) -> int:
        return len(self.nu)

    @property
    def log_M(self) -> float:
        return math.log(self.renorm_threshold)

    @property
    def log_total(self) -> float:
        """``ln S_n = ln sum_i tau_n(i)``."""
        return math.log(self.sum_exp) + self.renorm_count * self.log_M

    @property
    def log_theta(self) -> np.ndarray:
        return self.nu - math.log(self.sum_exp)

    @property
    def theta(self) -> np.ndarray:
        return np.exp(self.log_theta)

    def tau(self) -> np.ndarray:
        """Unrenormalized weights; overflows for long runs, meant for small tests."""
        return np.exp(self.nu + self.renorm_count * self.log_M)

    def copy(self) -> "LogOccupation":
        return replace(self, nu=self.nu.copy())


def _apply_log_increment(occ: LogOccupation, hit: int, g: float) -> LogOccupation:
    out = occ.copy()
    old = out.nu[hit]
    new = old + math.log1p(g)
    out.nu[hit] = new
    out.sum_exp = out.sum_exp + (math.exp(new) - math.exp(old))
    out.n += 1
    return _renormalize(out)


def _renormalize(occ: LogOccupation) -> LogOccupation:
    if occ.sum_exp >= occ.renorm_threshold:
        log_M = occ.log_M
        occ.nu -= log_M
        occ.renorm_count += 1
        occ.sum_exp = _sequential_sum_exp(occ.nu)
    return occ


def _check_hit(occ: LogOccupation, hit_stratum: int) -> int:
    if not 1 <= hit_stratum <= occ.d:
        raise ValueError(f"hit_stratum must lie in 1..{occ.d}, got {hit_stratum}")
    return hit_stratum - 1


def current_stepsize(occ: LogOccupation, n: int | None = None, hit_stratum: int | None = None) -> float:
    """Stepsize ``gamma_{n+1}`` of the next update.

    ``n`` defaults to ``occ.n``.  For :class:`PartialBias` the stepsize depends
    on where the chain lands, so ``hit_stratum`` is required and the returned
    value is the effective multiplicative factor
    ``gamma * theta(hit)**(a - 1) / S_n``.
    """
    scheme = occ.scheme
    n = occ.n if n is None else n
    if isinstance(scheme, SHUS):
        return shus_stepsize(occ.sum_exp, occ.renorm_count, occ.log_M, scheme.gamma)
    if isinstance(scheme, WLDeterministic):
        return wl_stepsize(n + 1, scheme.gamma_star, scheme.alpha)
    if isinstance(scheme, SHUSAlpha):
        return shus_alpha_stepsize(
            occ.sum_exp, occ.renorm_count, occ.log_M, scheme.gamma_alpha, scheme.exponent
        )
    if isinstance(scheme, PartialBias):
        if hit_stratum is None:
            raise ValueError("the partial-bias stepsize depends on the hit stratum")
        h = _check_hit(occ, hit_stratum)
        g0 = shus_stepsize(occ.sum_exp, occ.renorm_count, occ.log_M, scheme.gamma)
        log_theta_hit = occ.nu[h] - math.log(occ.sum_exp)
        return g0 * math.exp((scheme.a - 1.0) * log_theta_hit)
    raise TypeError(f"unknown scheme {scheme!r}")


def shus_update(occ: LogOccupation, hit_stratum: int) -> LogOccupation:
    """One SHUS update after the chain landed in ``hit_stratum`` (1-based).

    Equivalent to ``tau(hit) += gamma * theta(hit)``, applied as
    ``nu(hit) += ln(1 + gamma / S_n)``.
    """
    h = _check_hit(occ, hit_stratum)
    g = shus_stepsize(occ.sum_exp, occ.renorm_count, occ.log_M, occ.scheme.gamma)
    return _apply_log_increment(occ, h, g)


def wl_nonlinear_update(occ: LogOccupation, hit_stratum: int, stepsize: float) -> LogOccupation:
    """``tau(hit) *= 1 + stepsize``."""
    if stepsize < 0:
        raise ValueError(f"stepsize must be non-negative, got {stepsize}")
    h = _check_hit(occ, hit_stratum)
    return _apply_log_increment(occ, h, stepsize)


def wl_linear_update(theta: np.ndarray, hit_stratum: int, stepsize: float) -> np.ndarray:
    """Linearized Wang-Landau step on normalized weights.

    ``theta'(i) = theta(i) + stepsize * theta(i) * (1{i = hit} - theta(hit))``.
    """
    theta = np.asarray(theta, dtype=float)
    h = hit_stratum - 1
    if not 0 <= h < len(theta):
        raise ValueError(f"hit_stratum must lie in 1..{len(theta)}, got {hit_stratum}")
    if not 0 <= stepsize < 1:
        raise ValueError(f"the linear update needs 0 <= stepsize < 1, got {stepsize}")
    indicator = np.zeros_like(theta)
    indicator[h] = 1.0
    out = theta + stepsize * theta * (indicator - theta[h])
    if np.any(out <= 0):
        raise ValueError("linear update left the simplex")
    return out


def wl_linear_log_update(occ: LogOccupation, hit_stratum: int, stepsize: float) -> LogOccupation:
    """Linear Wang-Landau step on a log-scale occupation (``nu = ln theta``)."""
    h = _check_hit(occ, hit_stratum)
    if not 0 <= stepsize < 1:
        raise ValueError(f"the linear update needs 0 <= stepsize < 1, got {stepsize}")
    out = occ.copy()
    theta_hit = math.exp(out.nu[h] - math.log(out.sum_exp))
    for i in range(out.d):
        ind = 1.0 if i == h else 0.0
        out.nu[i] = out.nu[i] + math.log1p(stepsize * (ind - theta_hit))
    out.sum_exp = _sequential_sum_exp(out.nu)
    out.n += 1
    return out


def shus_alpha_update(occ: LogOccupation, hit_stratum: int) -> LogOccupation:
    """Multiplicative update with stepsize ``gamma(alpha) / ln(1 + S_n)**(alpha/(1-alpha))``."""
    scheme = occ.scheme
    if not isinstance(scheme, SHUSAlpha):
        raise TypeError("shus_alpha_update needs a SHUSAlpha scheme")
    h = _check_hit(occ, hit_stratum)
    g = shus_alpha_stepsize(occ.sum_exp, occ.renorm_count, occ.log_M, scheme.gamma_alpha, scheme.exponent)
    return _apply_log_increment(occ, h, g)


def partial_bias_update(occ: LogOccupation, hit_stratum: int) -> LogOccupation:
    """``tau(hit) += gamma * theta(hit)**a``, applied in log scale.

    With ``a = 1`` the arithmetic reduces exactly to :func:`shus_update`.
    """
    if not isinstance(occ.scheme, PartialBias):
        raise TypeError("partial_bias_update needs a PartialBias scheme")
    g = current_stepsize(occ, hit_stratum=hit_stratum)
    return _apply_log_increment(occ, hit_stratum - 1, g)


def update(occ: LogOccupation, hit_stratum: int) -> LogOccupation:
    """Dispatch one update for whatever scheme ``occ`` carries."""
    scheme = occ.scheme
    if isinstance(scheme, SHUS):
        return shus_update(occ, hit_stratum)
    if isinstance(scheme, WLDeterministic):
        g = current_stepsize(occ)
        if scheme.linear:
            return wl_linear_log_update(occ, hit_stratum, g)
        return wl_nonlinear_update(occ, hit_stratum, g)
    if isinstance(scheme, SHUSAlpha):
        return shus_alpha_update(occ, hit_stratum)
    if isinstance(scheme, PartialBias):
        return partial_bias_update(occ, hit_stratum)
    raise TypeError(f"unknown scheme {scheme!r}")


def sa_residual(theta: np.ndarray, hit_stratum: int, stepsize: float) -> tuple[np.ndarray, np.ndarray]:
    """Stochastic-approximation split of the multiplicative update.

    Returns ``(H, Lambda)`` such that the normalized weights after a
    multiplicative step of size ``stepsize`` equal
    ``theta + stepsize * H + stepsize * Lambda``, with ``H`` the mean-field
    direction and ``Lambda = O(stepsize)``.
    """
    theta = np.asarray(theta, dtype=float)
    h = hit_stratum - 1
    indicator = np.zeros_like(theta)
    indicator[h] = 1.0
    th = theta[h]
    H = theta * (indicator - th)
    Lam = stepsize * theta * th * (th - indicator) / (1.0 + stepsize * th)
    return H, Lam


def multiplicative_theta_update(theta: np.ndarray, hit_stratum: int, stepsize: float) -> np.ndarray:
    """``theta(i) (1 + stepsize 1{i = hit}) / (1 + stepsize theta(hit))``."""
    theta = np.asarray(theta, dtype=float)
    h = hit_stratum - 1
    factor = np.ones_like(theta)
    factor[h] += stepsize
    return theta * factor / (1.0 + stepsize * theta[h])
