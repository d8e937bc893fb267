"""Pure-numpy kernels: fallback backend for the compiled extension.

Function-for-function mirror of ``_kernels_c``. Elementwise results are
bit-identical to the compiled kernels (both avoid fused multiply-add);
reductions (``nrm2`` and the landscape values) may differ in the last ulp
because numpy reduces pairwise while the C loops reduce sequentially.
"""

import numpy as np

NAME = "python"


def axpy(a, x, y):
    """a*x + y, elementwise."""
    return a * x + y


def nrm2(x):
    return float(np.sqrt(np.dot(x, x)))


def momentum_apply(theta, v, g, m, eta):
    """One velocity/position update: v' = m*v - eta*g, theta' = theta + v'."""
    v_new = m * v - eta * g
    return theta + v_new, v_new


def quad_f_grad(lam, x):
    """f = sum(lam * x^2), grad = 2*lam*x for a diagonal quadratic."""
    xx = x * x
    return float(np.dot(lam, xx)), 2.0 * lam * x


def cubic_f_grad(coef, x):
    """f = sum(coef * x^3), grad = 3*coef*x^2 for a diagonal cubic."""
    xx = x * x
    return float(np.dot(coef, xx * x)), 3.0 * coef * xx
