"""APPROX with the history-weighted restart, using cumulative aggregates.

The iterate is stored as ``x_k = z_k + theta_{k-1}^2 w_k`` and the restart
center is assembled from the scalars ``a, b, r`` and the vectors ``g, h``,
so an iteration only touches the sampled coordinates (plus, for the GLM
objectives here, the rows of the sampled columns through the cached
products ``A z`` and ``A w``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .schedule import theta_next

__all__ = ["EfficientState", "init_state", "efficient_step", "efficient_restart_point",
           "materialize_x", "state_value", "MAX_PERIOD_SCALE"]

# Usable period before the 1/theta^2 growth of w, g, h costs accuracy: MAX_PERIOD_SCALE / theta0.
MAX_PERIOD_SCALE = 1e6


@dataclass
class EfficientState:
    z: np.ndarray
    w: np.ndarray
    g: np.ndarray
    h: np.ndarray
    a: float
    b: float
    r: float
    theta: float
    theta_prev: float
    theta0: float
    ratio: float
    Az: np.ndarray
    Aw: np.ndarray
    period_counter: int = 0
    k: int = 0

    def copy(self) -> "EfficientState":
        return EfficientState(self.z.copy(), self.w.copy(), self.g.copy(), self.h.copy(),
                              self.a, self.b, self.r, self.theta, self.theta_prev,
                              self.theta0, self.ratio, self.Az.copy(), self.Aw.copy(),
                              self.period_counter, self.k)

    def restarted(self, point: np.ndarray, A=None) -> "EfficientState":
        """Reseed in place at ``point``; ``A`` refreshes the cached ``A z``."""
        self.z[:] = point
        self.w[:] = 0.0
        self.g[:] = 0.0
        self.h[:] = 0.0
        self.a = self.b = self.r = 0.0
        self.theta = self.theta_prev = self.theta0
        self.Aw[:] = 0.0
        if A is not None:
            self.Az[:] = A @ self.z
        self.period_counter = 0
        return self


def init_state(problem, x0: np.ndarray, tau: int) -> EfficientState:
    n = problem.n
    x0 = np.array(x0, dtype=float)
    theta0 = tau / n
    zeros = np.zeros(n)
    m = problem.design.m
    return EfficientState(x0, zeros.copy(), zeros.copy(), zeros.copy(), 0.0, 0.0, 0.0,
                          theta0, theta0, theta0, n / tau, problem.A @ x0, np.zeros(m))


def materialize_x(state: EfficientState) -> np.ndarray:
    return state.z + state.theta_prev**2 * state.w


def state_value(problem, state: EfficientState) -> float:
    """``F(x_k)`` from the cached products, without touching ``A``."""
    t2 = state.theta_prev**2
    return problem.value_from_linear(state.Az + t2 * state.Aw, state.z + t2 * state.w)


def efficient_step(problem, state: EfficientState, sampling, v: np.ndarray) -> EfficientState:
    """One non-restart iteration, updating ``state`` in place."""
    th, ratio = state.theta, state.ratio
    th2 = th * th
    state.a += state.r * (1.0 - th) / (th2 * th2)
    state.b += state.r / th2
    a, b = state.a, state.b
    coef = (1.0 - ratio * th) / th2

    S = sampling.draw()
    A = problem.A
    indptr, indices, data = A.indptr, A.indices, A.data
    loss, reg = problem.loss, problem.regularizer
    Az, Aw = state.Az, state.Aw

    # All partial derivatives are taken at the same y_k = z_k + theta_k^2 w_k.
    cols = []
    for i in S:
        lo, hi = indptr[i], indptr[i + 1]
        rows, vals = indices[lo:hi], data[lo:hi]
        u = Az[rows] + th2 * Aw[rows]
        cols.append((i, rows, vals, float(vals @ loss.derivative(u, rows))))

    z, w, g, h = state.z, state.w, state.g, state.h
    for i, rows, vals, grad_i in cols:
        zi = z[i]
        t = reg.prox(grad_i, zi, th * ratio * v[i]) - zi
        if t == 0.0:
            continue
        z[i] = zi + t
        w[i] -= coef * t
        g[i] += a * t
        h[i] -= b * coef * t
        Az[rows] += t * vals
        Aw[rows] -= (coef * t) * vals

    th_new = theta_next(th)
    state.r = th_new * (1.0 - ratio * th) + ratio * (th - th_new)
    state.theta_prev = th
    state.theta = th_new
    state.period_counter += 1
    state.k += 1
    if state.period_counter == int(MAX_PERIOD_SCALE / state.theta0) + 1:
        warnings.warn(
            f"APPROX period exceeded {MAX_PERIOD_SCALE:g}/theta0 iterations without restart; "
            "aggregate coefficients grow like k^2 and lose accuracy",
            RuntimeWarning, stacklevel=2)
    return state


def efficient_restart_point(state: EfficientState, sigma: float, ratio: float | None = None) -> np.ndarray:
    """Closed-form ``sigma x + (1 - sigma) x_ring`` from the aggregates."""
    if not (0.0 <= sigma <= 1.0):
        raise ValueError(f"sigma must lie in [0, 1], got {sigma!r}")
    if state.period_counter < 1:
        raise ValueError("the center needs at least one iteration since the last restart")
    ratio = state.ratio if ratio is None else ratio
    th = state.theta_prev
    th2 = th * th
    denom = th2 * state.a + ratio * (1.0 / th - ratio + 1.0)
    assert denom > 0.0, "restart normalizer must be positive"
    x = state.z + th2 * state.w
    corr = (1.0 - sigma) * (th2 * (-state.g - state.h) + (th2 * state.b - th2 * th2 * state.a) * state.w)
    return x + corr / denom
