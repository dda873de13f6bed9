import numpy as np
import pytest

import stencilkit as sk
from stencilkit.context import LibraryPhase


@pytest.fixture(autouse=True)
def lib(monkeypatch, tmp_path):
    """A fresh, initialized library per test, with no arch overrides leaking in."""
    monkeypatch.delenv("GSCL_ARCH", raising=False)
    monkeypatch.delenv("GSCL_WORKERS", raising=False)
    monkeypatch.setenv("GSCL_CONFIG", str(tmp_path / "absent.ini"))
    fresh = sk.Library()
    fresh.init()
    previous = sk.set_library(fresh)
    mode = sk.kernel_mode()
    yield fresh
    sk.set_kernel_mode(mode)
    if fresh.context is not None and fresh.context.active:
        fresh.end(fresh.context)
    if fresh.phase is LibraryPhase.READY:
        fresh.finalize()
    sk.set_library(previous)


@pytest.fixture(params=["numba", "numpy", "checked"])
def kernel_mode(request):
    sk.set_kernel_mode(request.param)
    return request.param


# architectures of the backend-equivalence matrix: (levels, workers)
ARCHS = [
    ("sequential", None),
    ("threaded,sequential", 2),
    ("threaded,sequential", 4),
    ("threaded,sequential", 8),
    ("tiled,sequential", 1),
    ("tiled,sequential", 2),
    ("tiled,sequential", 4),
    ("tiled,threaded,sequential", 2),
    ("device", None),
    ("tiled,device", 4),
]


def arch_id(item):
    levels, w = item
    return levels.replace(",", "+") + (f"x{w}" if w else "")


def grids_for(arch, extents, n, halo=1, fill=0.0, role="float64"):
    store = sk.default_storage(arch, role)
    return [sk.make_grid(extents, halo, fill, storage=store) for _ in range(n)]


def random_core(shape, seed=0):
    return np.random.default_rng(seed).random(shape)
