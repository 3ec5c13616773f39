"""Benchmark target: a two-dimensional double-well potential on a slab.

The state space is ``[-R, R] x R``; the target density is proportional to
``exp(-beta * U(x1, x2))`` on it.  The slab is cut into ``d`` vertical strata of
equal width along ``x1``, which serves as the (discrete) reaction coordinate.

Only density ratios are ever used, so the normalization constant ``Z`` is never
computed.  Strata are numbered ``1..d`` in the public API and ``0..d-1`` inside
the kernels.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_HALF_WIDTH = 1.2
DEFAULT_X2_BOUNDS = (-3.0, 4.5)
DEFAULT_GRID_RESOLUTION = 2001


def potential_energy(x1, x2):
    """Double-well potential with an upper channel.

    Works on scalars and numpy arrays.  The two side wells are summed first
    (IEEE addition commutes), so ``U(-x1, x2) == U(x1, x2)`` holds bit for bit.
    """
    if isinstance(x1, np.ndarray) or isinstance(x2, np.ndarray):
        exp = np.exp
    else:
        exp = math.exp
    x1sq = x1 * x1
    dy1 = x2 - 1.0 / 3.0
    dy2 = x2 - 5.0 / 3.0
    xm = x1 - 1.0
    xp = x1 + 1.0
    x2sq = x2 * x2
    wells = exp(-xm * xm - x2sq) + exp(-xp * xp - x2sq)
    dy1sq = dy1 * dy1
    return (
        3.0 * exp(-x1sq - dy1sq)
        - 3.0 * exp(-x1sq - dy2 * dy2)
        - 5.0 * wells
        + 0.2 * x1sq * x1sq
        + 0.2 * dy1sq * dy1sq
    )


def potential_gradient(x1: float, x2: float) -> tuple[float, float]:
    """Analytic gradient of :func:`potential_energy`."""
    x1sq = x1 * x1
    dy1 = x2 - 1.0 / 3.0
    dy2 = x2 - 5.0 / 3.0
    xm = x1 - 1.0
    xp = x1 + 1.0
    g1 = 3.0 * math.exp(-x1sq - dy1 * dy1)
    g2 = -3.0 * math.exp(-x1sq - dy2 * dy2)
    g3 = -5.0 * math.exp(-xm * xm - x2 * x2)
    g4 = -5.0 * math.exp(-xp * xp - x2 * x2)
    d1 = -2.0 * x1 * (g1 + g2) - 2.0 * xm * g3 - 2.0 * xp * g4 + 0.8 * x1**3
    d2 = -2.0 * dy1 * g1 - 2.0 * dy2 * g2 - 2.0 * x2 * (g3 + g4) + 0.8 * dy1**3
    return d1, d2


@dataclass(frozen=True)
class TargetModel:
    """Boltzmann target restricted to the slab ``|x1| <= half_width``.

    Parameters
    ----------
    beta : float
        Inverse temperature, strictly positive.
    d : int
        Number of strata, at least 2.
    half_width : float
        ``R``; the slab is ``[-R, R] x R``.
    potential : callable
        Energy function ``U(x1, x2)``.  The compiled kernels hard-wire the
        default potential and refuse models carrying any other one.
    """

    beta: float
    d: int
    half_width: float = DEFAULT_HALF_WIDTH
    potential: Callable = field(default=potential_energy, compare=False, repr=False)

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def boundaries(self) -> np.ndarray:
        """Stratum edges ``a_1 < ... < a_{d+1}`` with ``a_1 = -R`` and ``a_{d+1} = R``."""
        R = self.half_width
        edges = -R + 2.0 * np.arange(self.d + 1) * R / self.d
        edges[-1] = R
        return edges

    @property
    def stratum_width(self) -> float:
        return 2.0 * self.half_width / self.d

    def in_domain(self, x1: float) -> bool:
        return abs(x1) <= self.half_width


def log_target_density(model: TargetModel, x1: float, x2: float) -> float:
    """Unnormalized log-density ``-beta * U``; ``-inf`` outside the slab."""
    if abs(x1) > model.half_width:
        return -math.inf
    return -model.beta * model.potential(x1, x2)


def stratum_index(model: TargetModel, x1: float) -> int:
    """1-based stratum of ``x1``; the right edge ``x1 = R`` belongs to stratum ``d``."""
    R = model.half_width
    if not abs(x1) <= R:
        raise ValueError(f"x1={x1} lies outside [-{R}, {R}]")
    i = int(math.floor((x1 + R) / (2.0 * R) * model.d)) + 1
    return min(i, model.d)


@dataclass
class ReferenceWeights:
    """Quadrature masses of the strata under the target, normalized to one."""

    theta_star: np.ndarray
    grid_resolution: int
    x2_bounds: tuple[float, float]
    estimated_error: float

    @property
    def log_theta_star(self) -> np.ndarray:
        return np.log(self.theta_star)

    def to_csv(self, path, header: Sequence[str] = ()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            fh.write(f"# grid_resolution={self.grid_resolution}\n")
            fh.write(f"# x2_bounds={self.x2_bounds[0]!r},{self.x2_bounds[1]!r}\n")
            fh.write(f"# estimated_error={self.estimated_error!r}\n")
            writer = csv.writer(fh)
            writer.writerow(["stratum_index", "theta_star", "ln_theta_star"])
            for i, (t, lt) in enumerate(zip(self.theta_star, self.log_theta_star), start=1):
                writer.writerow([i, repr(float(t)), repr(float(lt))])

    @classmethod
    def from_csv(cls, path) -> "ReferenceWeights":
        meta = {}
        rows = []
        with open(path, newline="") as fh:
            for line in fh:
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    meta[key] = value
                    continue
                rows.append(line)
        reader = csv.DictReader(rows)
        theta = np.array([float(r["theta_star"]) for r in reader])
        lo, hi = (float(v) for v in meta.get("x2_bounds", "nan,nan").split(","))
        return cls(
            theta_star=theta,
            grid_resolution=int(meta.get("grid_resolution", 0)),
            x2_bounds=(lo, hi),
            estimated_error=float(meta.get("estimated_error", "nan")),
        )


def _simpson_weights(n_intervals: int, h: float) -> np.ndarray:
    w = np.ones(n_intervals + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def _stratum_masses(model: TargetModel, grid_resolution: int, x2_bounds) -> np.ndarray:
    d = model.d
    # x1 intervals: a multiple of 2d so every stratum edge is an even Simpson node
    per = max(1, math.ceil((grid_resolution - 1) / (2 * d)))
    n1 = 2 * d * per
    n2 = grid_resolution - 1 + (grid_resolution - 1) % 2
    x1 = np.linspace(-model.half_width, model.half_width, n1 + 1)
    x2 = np.linspace(x2_bounds[0], x2_bounds[1], n2 + 1)
    w2 = _simpson_weights(n2, (x2_bounds[1] - x2_bounds[0]) / n2)

    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    energy = model.potential(X1, X2)
    shift = energy.min()
    column = np.exp(-model.beta * (energy - shift)) @ w2  # integral over x2 at each x1 node

    h1 = 2.0 * model.half_width / n1
    w1 = _simpson_weights(2 * per, h1)
    masses = np.empty(d)
    for i in range(d):
        masses[i] = column[2 * per * i : 2 * per * (i + 1) + 1] @ w1
    return masses


def reference_weights(
    model: TargetModel,
    grid_resolution: int = DEFAULT_GRID_RESOLUTION,
    x2_bounds: tuple[float, float] = DEFAULT_X2_BOUNDS,
    tol: float | None = None,
) -> ReferenceWeights:
    """Stratum weights of the target by tensor-product Simpson quadrature.

    The error estimate compares the requested grid with one of half the
    resolution (Richardson: Simpson error scales as ``h**4``, so the fine grid
    error is about ``|fine - coarse| / 15``), measured as the largest relative
    deviation over the strata.

    Raises
    ------
    ValueError
        If ``tol`` is given and the estimated relative error exceeds it.
    """
    if grid_resolution < 5:
        raise ValueError("grid_resolution must be at least 5")
    lo, hi = x2_bounds
    if not hi > lo:
        raise ValueError(f"empty x2 interval {x2_bounds}")
    fine = _stratum_masses(model, grid_resolution, x2_bounds)
    coarse = _stratum_masses(model, (grid_resolution - 1) // 2 + 1, x2_bounds)
    theta = fine / fine.sum()
    theta_coarse = coarse / coarse.sum()
    err = float(np.max(np.abs(theta - theta_coarse) / theta) / 15.0)
    if tol is not None and err > tol:
        raise ValueError(f"quadrature error estimate {err:.3e} exceeds tolerance {tol:.3e}")
    return ReferenceWeights(
        theta_star=theta,
        grid_resolution=grid_resolution,
        x2_bounds=(float(lo), float(hi)),
        estimated_error=err,
    )
