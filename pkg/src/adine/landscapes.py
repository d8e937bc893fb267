"""Synthetic saddle landscapes with analytic gradients and seeded sampling.

Three test functions: a diagonal quadratic with alternating-sign coefficients
(indefinite Hessian, so the origin is a saddle), a diagonal cubic (zero
Hessian at the origin, a degenerate saddle), and the fixed 2-D special case
f(x, y) = x^2 - y^2. All are unbounded below, so escaping runs terminate via
a loss threshold or divergence, never by converging.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import backend
from .core import Objective, ParamVector, Rng

# Default race settings. Starting points sit near the saddle so that escape
# times separate adjacent momentum values measurably; starting far away makes
# every run cross the threshold within a handful of steps and the counts tie.
SADDLE2D_X0 = (1.0, 0.001)
SADDLE2D_ETA = 0.01
SADDLE2D_THRESHOLD = -10.0
QUAD_X0_FILL = 0.01
QUAD_ETA = 0.001
# The cubic needs a larger step size: its gradient vanishes quadratically at
# the origin, and with eta much below this the sub-unit-momentum runs shed
# their velocity before coasting through the flat region and effectively
# never escape.
CUBIC_X0_FILL = 1.0
CUBIC_ETA = 0.005
ND_THRESHOLD = -8.0


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class QuadraticSaddle:
    """f(x) = sum_i lambda_i * x_i^2 with a diagonal coefficient matrix."""

    lambda_diag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lambda_diag", _readonly(self.lambda_diag))
        if self.lambda_diag.ndim != 1 or self.lambda_diag.size == 0:
            raise ValueError("lambda_diag must be a non-empty 1-D array")

    @property
    def n(self) -> int:
        return self.lambda_diag.size


@dataclass(frozen=True)
class CubicSaddle:
    """g(x) = sum_i theta_i * x_i^3 with a diagonal coefficient matrix."""

    theta_diag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta_diag", _readonly(self.theta_diag))
        if self.theta_diag.ndim != 1 or self.theta_diag.size == 0:
            raise ValueError("theta_diag must be a non-empty 1-D array")

    @property
    def n(self) -> int:
        return self.theta_diag.size


@dataclass(frozen=True)
class Saddle2D:
    """The fixed two-dimensional saddle f(x, y) = x^2 - y^2."""

    def as_quadratic(self) -> QuadraticSaddle:
        return QuadraticSaddle(np.array([1.0, -1.0]))

    @property
    def n(self) -> int:
        return 2


Landscape = Union[QuadraticSaddle, CubicSaddle, Saddle2D]


def sample_quadratic(n: int, rng: Rng) -> QuadraticSaddle:
    """Diagonal entries with magnitudes drawn from U[0.99, 1.01) and signs
    alternating by index (even indices positive), so the origin is a saddle."""
    if n < 2:
        raise ValueError(f"quadratic saddle needs n >= 2, got {n}")
    mags = rng.uniform(0.99, 1.01, n)
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    return QuadraticSaddle(mags * signs)


def sample_cubic(n: int, rng: Rng) -> CubicSaddle:
    """Diagonal entries drawn i.i.d. from U[1, 2)."""
    if n < 1:
        raise ValueError(f"cubic saddle needs n >= 1, got {n}")
    return CubicSaddle(rng.uniform(1.0, 2.0, n))


def quad_eval_grad(q: QuadraticSaddle, x: ParamVector) -> tuple[float, ParamVector]:
    """Value and gradient: f = sum lambda_i x_i^2, grad_i = 2 lambda_i x_i."""
    if x.dim != q.n:
        raise ValueError(f"dimension mismatch: x has {x.dim}, landscape has {q.n}")
    f, g = backend.kernels.quad_f_grad(q.lambda_diag, x.values)
    return f, ParamVector._wrap(np.asarray(g))


def cubic_eval_grad(c: CubicSaddle, x: ParamVector) -> tuple[float, ParamVector]:
    """Value and gradient: f = sum theta_i x_i^3, grad_i = 3 theta_i x_i^2."""
    if x.dim != c.n:
        raise ValueError(f"dimension mismatch: x has {x.dim}, landscape has {c.n}")
    f, g = backend.kernels.cubic_f_grad(c.theta_diag, x.values)
    return f, ParamVector._wrap(np.asarray(g))


class LandscapeObjective(Objective):
    """Full-batch objective over a landscape; stateless and shareable."""

    def __init__(self, landscape: Landscape):
        if isinstance(landscape, Saddle2D):
            landscape = landscape.as_quadratic()
        self._landscape = landscape

    @property
    def dim(self) -> int:
        return self._landscape.n

    def eval(self, theta: ParamVector) -> float:
        if isinstance(self._landscape, QuadraticSaddle):
            return quad_eval_grad(self._landscape, theta)[0]
        return cubic_eval_grad(self._landscape, theta)[0]

    def grad(self, theta: ParamVector) -> ParamVector:
        if isinstance(self._landscape, QuadraticSaddle):
            return quad_eval_grad(self._landscape, theta)[1]
        return cubic_eval_grad(self._landscape, theta)[1]


def as_objective(landscape: Landscape) -> Objective:
    """Wrap a landscape in the shared objective interface (full-batch)."""
    return LandscapeObjective(landscape)


def default_x0(landscape: Landscape) -> ParamVector:
    """Documented default starting point for an escape race."""
    if isinstance(landscape, Saddle2D):
        return ParamVector(SADDLE2D_X0)
    if isinstance(landscape, QuadraticSaddle):
        return ParamVector(np.full(landscape.n, QUAD_X0_FILL))
    return ParamVector(np.full(landscape.n, CUBIC_X0_FILL))


__all__ = [
    "CUBIC_ETA",
    "CUBIC_X0_FILL",
    "CubicSaddle",
    "Landscape",
    "ND_THRESHOLD",
    "QUAD_ETA",
    "QUAD_X0_FILL",
    "QuadraticSaddle",
    "SADDLE2D_ETA",
    "SADDLE2D_THRESHOLD",
    "SADDLE2D_X0",
    "Saddle2D",
    "as_objective",
    "cubic_eval_grad",
    "default_x0",
    "quad_eval_grad",
    "sample_cubic",
    "sample_quadratic",
]
