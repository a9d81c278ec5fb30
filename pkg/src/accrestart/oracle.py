"""Slow reference computations used to check the production paths.

Nothing here is meant for hot loops: the gamma table is an explicit
triangular array and the center is the literal weighted sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .schedule import theta_next, theta_path

__all__ = ["GammaTable", "gamma_table", "naive_center", "fd_gradient", "xi_from_table",
           "DenseApprox"]

MAX_ROWS = 5000


@dataclass(frozen=True)
class GammaTable:
    """Row ``k`` holds ``gamma_k^0..gamma_k^k``; ``x_k = sum_i gamma_k^i z_i``."""

    rows: tuple
    thetas: np.ndarray
    theta0: float
    ratio: float

    def __getitem__(self, k: int) -> np.ndarray:
        return self.rows[k]

    def __len__(self) -> int:
        return len(self.rows)


@lru_cache(maxsize=32)
def gamma_table(theta0: float, ratio: float, k_max: int) -> GammaTable:
    if k_max > MAX_ROWS:
        raise ValueError(f"k_max={k_max} exceeds the oracle limit {MAX_ROWS}")
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    thetas = theta_path(theta0, max(k_max, 1))
    rows = [np.array([1.0])]
    if k_max >= 1:
        rows.append(np.array([0.0, 1.0]))
    for k in range(1, k_max):
        prev = rows[k]
        t, tm = thetas[k], thetas[k - 1]
        row = np.empty(k + 2)
        row[:k] = (1.0 - t) * prev[:k]
        row[k] = t * (1.0 - ratio * tm) + ratio * (tm - t)
        row[k + 1] = ratio * t
        rows.append(row)
    for r in rows:
        r.setflags(write=False)
    return GammaTable(tuple(rows), thetas, float(theta0), float(ratio))


def _inv_theta_sq_shifted(thetas, k: int, theta0: float) -> np.ndarray:
    """``[1/theta_{-1}^2, 1/theta_0^2, ..., 1/theta_{k-1}^2]`` with the
    convention ``1/theta_{-1}^2 = (1 - theta0)/theta0^2``."""
    out = np.empty(k + 1)
    out[0] = (1.0 - theta0) / theta0**2
    out[1:] = 1.0 / np.asarray(thetas[:k], dtype=float) ** 2
    return out


def xi_from_table(table: GammaTable, k: int) -> float:
    """``xi_k = sum_i gamma_k^i / theta_{i-1}^2`` summed literally."""
    w = _inv_theta_sq_shifted(table.thetas, k, table.theta0)
    return float(np.dot(table[k], w))


def naive_center(history, gammas, thetas, ratio: float) -> np.ndarray:
    """Literal history-weighted center of ``x_0..x_k``.

    Weights are ``gamma_k^i / theta_{i-1}^2`` for ``i < k`` and
    ``1/(theta_0 theta_{k-1}) - (1 - theta_0)/theta_0^2`` for ``x_k``,
    normalized to sum to one.
    """
    k = len(history) - 1
    if k < 1:
        raise ValueError("need at least x_0 and x_1")
    thetas = np.asarray(thetas, dtype=float)
    theta0 = float(thetas[0])
    gammas = np.asarray(gammas, dtype=float)
    inv = _inv_theta_sq_shifted(thetas, k, theta0)
    w = np.empty(k + 1)
    w[:k] = gammas[:k] * inv[:k]
    w[k] = 1.0 / (theta0 * thetas[k - 1]) - (1.0 - theta0) / theta0**2
    X = np.asarray(history, dtype=float)
    return (w @ X) / w.sum()


def center_weights(k: int, theta0: float, ratio: float) -> np.ndarray:
    """Normalized weights of ``x_0..x_k`` in the center (for inspection)."""
    table = gamma_table(theta0, ratio, k)
    inv = _inv_theta_sq_shifted(table.thetas, k, theta0)
    w = np.empty(k + 1)
    w[:k] = table[k][:k] * inv[:k]
    w[k] = 1.0 / (theta0 * table.thetas[k - 1]) - (1.0 - theta0) / theta0**2
    return w / w.sum()


def fd_gradient(problem, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central differences of the smooth part ``f`` only."""
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    e = np.zeros_like(x)
    for i in range(x.size):
        e[i] = step
        g[i] = (problem.smooth_value(x + e) - problem.smooth_value(x - e)) / (2.0 * step)
        e[i] = 0.0
    return g


class DenseApprox:
    """Textbook APPROX on dense vectors with the full iterate history kept.

    Used to check the aggregate-based engine; every quantity is recomputed
    from scratch from ``(x_k, z_k, theta_k)``.
    """

    def __init__(self, problem, x0, tau: int, v=None):
        self.problem = problem
        self.n = problem.n
        self.tau = tau
        self.ratio = self.n / tau
        self.theta0 = tau / self.n
        self.v = problem.eso_vector(tau) if v is None else np.asarray(v, dtype=float)
        self.x = np.array(x0, dtype=float)
        self.z = self.x.copy()
        self.theta = self.theta0
        self.history = [self.x.copy()]
        self.z_history = [self.z.copy()]

    def step(self, S) -> None:
        th, r = self.theta, self.ratio
        y = (1.0 - th) * self.x + th * self.z
        g = self.problem.gradient(y)
        z_new = self.z.copy()
        for i in S:
            w = th * r * self.v[i]
            z_new[i] = self.problem.regularizer.prox(g[i], self.z[i], w)
        self.x = y + r * th * (z_new - self.z)
        self.z = z_new
        self.theta = theta_next(th)
        self.history.append(self.x.copy())
        self.z_history.append(self.z.copy())

    def restart_point(self, sigma: float) -> np.ndarray:
        k = len(self.history) - 1
        table = gamma_table(self.theta0, self.ratio, k)
        c = naive_center(self.history, table[k], table.thetas, self.ratio)
        return sigma * self.x + (1.0 - sigma) * c

    def restart(self, point) -> None:
        self.x = np.array(point, dtype=float)
        self.z = self.x.copy()
        self.theta = self.theta0
        self.history = [self.x.copy()]
        self.z_history = [self.z.copy()]
