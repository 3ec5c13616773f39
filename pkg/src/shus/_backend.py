"""Pick the chain loop implementation at import time.

The compiled ``_core`` extension is used when it was built; otherwise, or when
``SHUS_PURE_PYTHON`` is set to a non-empty value other than ``0``, the
pure-Python ``_pycore`` is used.  Both expose the same ``run_steps``.
"""
import logging
import os

from . import _pycore

logger = logging.getLogger(__name__)

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_BACKENDS = {"python": _pycore}
if _core is not None:
    _BACKENDS["compiled"] = _core


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None):
    """Module implementing ``run_steps`` for ``name`` (default: the import-time choice)."""
    if name is None:
        return DEFAULT
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {available_backends()}") from None


if os.environ.get("SHUS_PURE_PYTHON", "") not in ("", "0") or _core is None:
    DEFAULT = _pycore
    DEFAULT_NAME = "python"
    if _core is None:
        logger.debug("compiled kernel unavailable, using the pure-Python loop")
else:
    DEFAULT = _core
    DEFAULT_NAME = "compiled"
