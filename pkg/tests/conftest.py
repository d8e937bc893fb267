import numpy as np
import pytest

from adine import backend
from adine.core import ParamVector


def max_rel_err(a, b, floor=1e-2):
    """Max elementwise |a-b| / max(|a|, |b|, floor); the floor treats entries
    near zero absolutely."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def central_diff(f, x, h):
    """Central finite-difference gradient of a scalar function of a 1-D array."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for j in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        g[j] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def pv(*values) -> ParamVector:
    return ParamVector(np.array(values, dtype=np.float64))


@pytest.fixture(params=backend.available_backends())
def each_backend(request):
    """Run a test once per kernel backend, restoring the default afterwards."""
    previous = backend.active_backend()
    backend.set_backend(request.param)
    yield request.param
    backend.set_backend(previous)
