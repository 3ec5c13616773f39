"""Experiment configuration: flat ``key = value`` files plus overrides.

A config file holds one ``key = value`` pair per line; ``#`` starts a comment.
Lists (the ``betas`` grid, sweep values, fit windows) are comma separated,
booleans are spelled ``true``/``false``.  Resolution order, later wins:

1. dataclass defaults,
2. the config file,
3. the ``SHUS_OUTPUT_DIR`` environment variable (``output_dir`` only),
4. command-line flags.
"""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field, fields

from ..adapt import DEFAULT_M, PartialBias, SHUS, SHUSAlpha, UpdateScheme, WLDeterministic
from ..model import DEFAULT_HALF_WIDTH, TargetModel

OUTPUT_DIR_ENV = "SHUS_OUTPUT_DIR"

SCHEMES = ("shus", "wl", "shus-alpha", "partial-bias")
SWEEPS = ("none", "gamma", "gamma_star")

# settings that cannot change any result; kept out of file headers so outputs
# are byte-identical across worker counts and output locations
EXECUTION_ONLY = ("workers", "output_dir")


@dataclass(frozen=True)
class ExperimentConfig:
    # scheme
    scheme: str = "shus"
    gamma: float = 1.0
    gamma_star: float | None = None
    alpha: float = 1.0
    wl_linear: bool = False
    a: float = 1.0
    M: float = DEFAULT_M
    # model
    beta: float = 10.0
    betas: tuple[float, ...] = (5.0, 6.0, 7.0, 8.0)
    d: int = 48
    half_width: float = DEFAULT_HALF_WIDTH
    sigma: float | None = None
    # run
    seed: int = 0
    K: int = 200
    n_steps: int = 10**6
    max_iters: int = 10**9
    stride: int = 1000
    threshold: float = 1.0
    workers: int = 1
    output_dir: str = "results"
    # exit-time sweeps
    sweep: str = "none"
    sweep_values: tuple[float, ...] = ()
    # weight statistics
    n_min: int = 1000
    per_decade: int = 10
    fit_window: tuple[float, ...] = ()
    # quadrature
    grid_resolution: int = 2001
    x2_bounds: tuple[float, ...] = (-3.0, 4.5)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {SWEEPS}, got {self.sweep!r}")
        if self.sweep != "none" and not self.sweep_values:
            raise ValueError("a sweep needs sweep_values")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if any(b2 <= b1 for b1, b2 in zip(self.betas, self.betas[1:])):
            raise ValueError(f"betas must be strictly increasing, got {self.betas}")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be positive")
        for name in ("K", "n_steps", "max_iters", "stride", "workers", "n_min", "per_decade"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.fit_window and len(self.fit_window) != 2:
            raise ValueError("fit_window takes two values: low, high")
        if len(self.x2_bounds) != 2:
            raise ValueError("x2_bounds takes two values")
        self.make_scheme()  # validates scheme parameters

    @property
    def resolved_sigma(self) -> float:
        return 2.0 * self.half_width / self.d if self.sigma is None else self.sigma

    @property
    def resolved_gamma_star(self) -> float:
        return float(self.d) if self.gamma_star is None else self.gamma_star

    def model(self, beta: float | None = None) -> TargetModel:
        return TargetModel(beta=self.beta if beta is None else beta, d=self.d, half_width=self.half_width)

    def make_scheme(self, **override) -> UpdateScheme:
        cfg = dataclasses.replace(self, **override) if override else self
        if cfg.scheme == "shus":
            return SHUS(cfg.gamma)
        if cfg.scheme == "wl":
            return WLDeterministic(cfg.resolved_gamma_star, cfg.alpha, cfg.wl_linear)
        if cfg.scheme == "shus-alpha":
            return SHUSAlpha(cfg.gamma, cfg.alpha)
        return PartialBias(cfg.gamma, cfg.a)

    def header_lines(self) -> list[str]:
        """``key = value`` lines for every result-affecting field, in declaration order."""
        lines = [
            f"{f.name} = {format_value(getattr(self, f.name))}"
            for f in fields(self)
            if f.name not in EXECUTION_ONLY
        ]
        lines.append(f"resolved_sigma = {format_value(self.resolved_sigma)}")
        return lines


def format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(format_value(x) for x in v)
    return str(v)


def _parse_bool(s: str) -> bool:
    s = s.strip().lower()
    if s in ("true", "yes", "1"):
        return True
    if s in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_float(s: str) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("nan is not a valid setting")
    return v


def _parse_int(s: str) -> int:
    v = float(s)  # accepts 1e6
    if v != int(v):
        raise ValueError(f"not an integer: {s!r}")
    return int(v)


_PARSERS = {
    "scheme": str.strip,
    "sweep": str.strip,
    "output_dir": str.strip,
    "wl_linear": _parse_bool,
    "d": _parse_int,
    "seed": _parse_int,
    "K": _parse_int,
    "n_steps": _parse_int,
    "max_iters": _parse_int,
    "stride": _parse_int,
    "workers": _parse_int,
    "n_min": _parse_int,
    "per_decade": _parse_int,
    "grid_resolution": _parse_int,
}
_TUPLES = {"betas", "sweep_values", "fit_window", "x2_bounds"}
_OPTIONAL = {"gamma_star", "sigma"}


def parse_value(key: str, text: str):
    """Convert the textual ``text`` for ``key`` to its field type."""
    if key not in FIELD_NAMES:
        raise KeyError(f"unknown config key {key!r}")
    text = text.strip()
    if key in _OPTIONAL and text.lower() in ("", "none"):
        return None
    if key in _TUPLES:
        if text.lower() in ("", "none"):
            return ()
        return tuple(_parse_float(p) for p in text.split(","))
    return _PARSERS.get(key, _parse_float)(text)


FIELD_NAMES = tuple(f.name for f in fields(ExperimentConfig))


def read_config_file(path) -> dict:
    """Parse a ``key = value`` file into typed values."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, text = (s.strip() for s in line.split("=", 1))
            try:
                values[key] = parse_value(key, text)
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return values


def resolve_config(path=None, overrides: dict | None = None, environ=None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from defaults, file, environment and overrides."""
    environ = os.environ if environ is None else environ
    values = read_config_file(path) if path is not None else {}
    if environ.get(OUTPUT_DIR_ENV):
        values["output_dir"] = environ[OUTPUT_DIR_ENV]
    for key, v in (overrides or {}).items():
        if key not in FIELD_NAMES:
            raise KeyError(f"unknown config key {key!r}")
        values[key] = v
    return ExperimentConfig(**values)
