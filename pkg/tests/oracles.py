"""Independent reference computations shared across the test modules.

Everything here is built from scipy primitives and first principles,
never from the package's own tables or kernels, so agreement with these
values is a genuine cross-check rather than a tautology.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.integrate import solve_bvp
from scipy.interpolate import interp1d
from scipy.optimize import brentq
from scipy.special import airy, iv


class EdgeLaw:
    """One largest-eigenvalue limit law on a dense grid."""

    def __init__(self, grid: np.ndarray, cdf: np.ndarray):
        self.grid = grid
        self.cdf_values = cdf
        self._cdf = interp1d(grid, cdf, bounds_error=False, fill_value=(0.0, 1.0))
        pdf = np.gradient(cdf, grid)
        self.mean = float(np.trapezoid(grid * pdf, grid))
        second = float(np.trapezoid(grid**2 * pdf, grid))
        self.std = float(np.sqrt(second - self.mean**2))
        self.median = float(
            brentq(lambda s: float(self._cdf(s)) - 0.5, grid[0], grid[-1])
        )

    def cdf(self, x):
        return self._cdf(x)


@lru_cache(maxsize=1)
def painleve_edge_laws() -> dict:
    """Beta=1 and beta=2 soft-edge laws from the Painleve II connection.

    The Hastings-McLeod branch is unstable under forward shooting, so the
    solution comes from a boundary value solve on [-13, 12]: Airy decay on
    the right, the sqrt(-s/2) algebraic asymptote (two correction terms)
    on the left.  The distribution functions follow from the standard
    log-derivative integrals done as right-to-left cumulative trapezoids.
    """

    def rhs(s, y):
        return np.vstack([y[1], s * y[0] + 2.0 * y[0] ** 3])

    s_left = -13.0
    left_value = np.sqrt(-s_left / 2.0) * (
        1.0 + 1.0 / (8.0 * s_left**3) - 73.0 / (128.0 * s_left**6)
    )
    right_value = airy(12.0)[0]

    def bc(ya, yb):
        return np.array([ya[0] - left_value, yb[0] - right_value])

    mesh = np.linspace(s_left, 12.0, 4001)
    guess = np.where(mesh < 0.0, np.sqrt(np.maximum(-mesh, 0.0) / 2.0),
                     airy(np.minimum(mesh, 12.0))[0])
    sol = solve_bvp(rhs, bc, mesh, np.vstack([guess, np.gradient(guess, mesh)]),
                    tol=1e-11, max_nodes=200_000)
    if sol.status != 0:
        raise RuntimeError(f"Painleve solve failed: {sol.message}")

    grid = np.linspace(-10.0, 8.0, 40_001)
    q = sol.sol(grid)[0]
    dx = grid[1] - grid[0]

    def right_cumtrapz(values):
        # I(s) = integral from s to the right end, trapezoid rule
        seg = 0.5 * (values[1:] + values[:-1]) * dx
        out = np.zeros_like(values)
        out[:-1] = np.cumsum(seg[::-1])[::-1]
        return out

    A = right_cumtrapz(q**2)
    B = right_cumtrapz(grid * q**2)
    J = right_cumtrapz(q)
    K = B - grid * A
    f2 = np.exp(-K)
    f1 = np.exp(-0.5 * (K + J))
    return {1: EdgeLaw(grid, f1), 2: EdgeLaw(grid, f2)}


def skellam_direct(k: int, D: float, tau: float, d: int = 1) -> float:
    """Wrapped symmetric Bessel walk probability, straight from scipy.iv."""
    z = 2.0 * tau / d
    if np.isinf(D):
        return float(np.exp(-z) * iv(abs(k), z))
    total = 0.0
    for image in range(-60, 61):
        total += float(iv(abs(k + image * int(D)), z))
    return float(np.exp(-z) * total)


def dense_kernel_power(matrix: np.ndarray, n: int) -> np.ndarray:
    """Plain repeated-squaring matrix power for kernel cross-checks."""
    return np.linalg.matrix_power(matrix, n)


def gumbel_cdf(x):
    return np.exp(-np.exp(-np.asarray(x, dtype=float)))
