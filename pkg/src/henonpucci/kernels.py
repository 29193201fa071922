"""Backend selection for the integration kernel.

The compiled core (``_ckernels``) is used when it imports; otherwise the
pure-Python kernel runs the same algorithm. Set ``HENONPUCCI_PURE=1`` to
force the fallback.
"""
import os

from . import _pykernels
from ._pykernels import (  # noqa: F401
    DONE,
    NONFINITE,
    PHASE,
    RADIAL,
    STEP_LIMIT,
    STEP_UNDERFLOW,
    TERMINAL,
)

_compiled = None
if not os.environ.get("HENONPUCCI_PURE"):
    try:
        from . import _ckernels as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def get_integrator(backend=None):
    """Return the ``integrate`` function of ``backend`` ('compiled', 'python' or None)."""
    if backend is None:
        backend = BACKEND
    if backend == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel is not available")
        return _compiled.integrate
    if backend == "python":
        return _pykernels.integrate
    raise ValueError(f"unknown backend {backend!r}")


def compiled_available() -> bool:
    return _compiled is not None


integrate = get_integrator()
