"""Kernel path selection.

``GSCL_KERNELS`` picks how operators are applied:

* ``numba`` (default when numba imports): compiled point kernels where an
  operator ships one, vectorized numpy otherwise.
* ``numpy``: vectorized numpy blocks only; numba is never imported.
* ``checked``: one Python call per core element with every halo, footprint
  and access-mode check enabled.

The mode can be changed at run time with :func:`set_kernel_mode`.
"""

import os

MODES = ("numba", "numpy", "checked")

_requested = os.environ.get("GSCL_KERNELS", "numba").strip().lower() or "numba"
if _requested not in MODES:
    raise ValueError(f"GSCL_KERNELS must be one of {MODES}, got {_requested!r}")

HAVE_NUMBA = False
if _requested != "numpy":
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass

_mode = _requested if (_requested != "numba" or HAVE_NUMBA) else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is available, otherwise a no-op decorator."""
    if HAVE_NUMBA:
        import numba

        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def kernel_mode():
    return _mode


def set_kernel_mode(mode):
    """Switch the kernel path; returns the previous mode."""
    global _mode
    mode = mode.lower()
    if mode not in MODES:
        raise ValueError(f"kernel mode must be one of {MODES}, got {mode!r}")
    if mode == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba kernels requested but numba is unavailable")
    previous, _mode = _mode, mode
    return previous
