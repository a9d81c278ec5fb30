"""Restart policies: when to restart and where to restart from."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import oracle
from .schedule import (
    ThetaSequence,
    choose_restart_period,
    choose_sigma,
    conditional_restart_threshold,
    theta_path,
)

__all__ = [
    "NoRestart",
    "ConditionalAtX",
    "ConditionalAtZ",
    "FixedCombination",
    "ApproxCombination",
    "FunctionValueAdaptive",
    "IntervalAdaptive",
    "RestartPolicy",
    "RestartEvent",
    "restart_point_full",
    "restart_point_approx_naive",
    "HistoryCenter",
    "should_restart",
    "apply_restart",
    "needs_objective",
]


def _check_sigma(sigma: float) -> None:
    if not (0.0 <= sigma <= 1.0):
        raise ValueError(f"sigma must lie in [0, 1], got {sigma!r}")


def _check_period(K: int) -> None:
    if int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K!r}")


@dataclass(frozen=True)
class NoRestart:
    pass


@dataclass(frozen=True)
class ConditionalAtX:
    """Restart at ``x_k`` once the period reaches the threshold for ``(mu, alpha)``.

    The default ``alpha = e^-2`` minimizes the threshold per unit of
    ``log(1/alpha)`` for small ``mu``.
    """

    mu: float
    alpha: float = math.exp(-2.0)

    def __post_init__(self):
        conditional_restart_threshold(self.mu, self.alpha, 1.0)


@dataclass(frozen=True)
class ConditionalAtZ:
    """Restart at ``z_k`` whenever ``F(z_k) <= F(x_k)``."""


@dataclass(frozen=True)
class FixedCombination:
    """Every ``K`` iterations restart at ``(1 - sigma) x + sigma z``."""

    sigma: float
    K: int

    def __post_init__(self):
        _check_sigma(self.sigma)
        _check_period(self.K)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "K", int(self.K))

    @classmethod
    def from_estimate(cls, mu: float) -> "FixedCombination":
        """Period from the main-text chooser with ``theta0 = 1``; ``sigma``
        equalizes both branches of ``max(sigma, 1 - sigma mu / theta_{K-1}^2)``."""
        K = choose_restart_period(mu, 1.0)
        t = theta_path(1.0, K)[K - 1]
        return cls(1.0 / (1.0 + mu / t**2), K)


@dataclass(frozen=True)
class ApproxCombination:
    """Every ``K`` iterations restart at ``sigma x + (1 - sigma) x_ring``."""

    sigma: float
    K: int

    def __post_init__(self):
        _check_sigma(self.sigma)
        _check_period(self.K)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "K", int(self.K))

    @classmethod
    def from_estimate(cls, mu: float, theta0: float = 1.0, ratio: float | None = None,
                      tradeoff_lambda: float | None = None) -> "ApproxCombination":
        ratio = 1.0 / theta0 if ratio is None else ratio
        K = choose_restart_period(mu, theta0, tradeoff_lambda)
        return cls(choose_sigma(mu, K, theta0, ratio), K)


@dataclass(frozen=True)
class FunctionValueAdaptive:
    """Restart at ``x_{k+1}`` when ``F(x_{k+1}) > F(x_k)``."""


@dataclass(frozen=True)
class IntervalAdaptive:
    """Adaptive rule allowed only for periods in ``[K_low, K_high)``, forced at ``K_high``.

    Every restart, adaptive or forced, uses the certified combination point
    with blend ``sigma`` (``(1-sigma) x + sigma z`` for full-gradient
    methods, ``sigma x + (1-sigma) x_ring`` for APPROX).
    """

    K_low: int
    K_high: int
    inner: Union[FunctionValueAdaptive, ConditionalAtZ] = FunctionValueAdaptive()
    sigma: float = 0.5

    def __post_init__(self):
        _check_period(self.K_high)
        if not (0 <= self.K_low <= self.K_high):
            raise ValueError("need 0 <= K_low <= K_high")
        if not isinstance(self.inner, (FunctionValueAdaptive, ConditionalAtZ)):
            raise TypeError("inner rule must be FunctionValueAdaptive or ConditionalAtZ")
        _check_sigma(self.sigma)


RestartPolicy = Union[NoRestart, ConditionalAtX, ConditionalAtZ, FixedCombination,
                      ApproxCombination, FunctionValueAdaptive, IntervalAdaptive]


@dataclass(frozen=True)
class RestartEvent:
    at_iteration: int
    point: np.ndarray
    theta_reset: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.point)):
            raise ValueError("restart point is not finite")


def restart_point_full(x: np.ndarray, z: np.ndarray, sigma: float) -> np.ndarray:
    """``(1 - sigma) x + sigma z``."""
    _check_sigma(sigma)
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise ValueError("length mismatch between x and z")
    return (1.0 - sigma) * x + sigma * z


def restart_point_approx_naive(history, thetas, gammas, sigma: float, ratio: float) -> np.ndarray:
    """``sigma x_k + (1 - sigma) x_ring_k`` from the explicit history ``x_0..x_k``.

    ``thetas`` holds ``theta_0..theta_k`` (at least up to ``k - 1``) and
    ``gammas`` the row ``gamma_k^0..gamma_k^k``.
    """
    _check_sigma(sigma)
    if len(history) < 2:
        raise ValueError("the center needs at least one iteration (k >= 1)")
    center = oracle.naive_center(history, gammas, thetas, ratio)
    return sigma * np.asarray(history[-1], dtype=float) + (1.0 - sigma) * center


class HistoryCenter:
    """Running form of the history-weighted center ``x_ring_k``.

    Keeps ``S_k = sum_{i<k} gamma_k^i / theta_{i-1}^2 x_i`` and the matching
    scalar sum, updated in O(n) per iteration through
    ``S_{k+1} = (1 - theta_k) S_k + gamma_{k+1}^k / theta_{k-1}^2 x_k``.
    """

    def __init__(self, n: int, theta0: float, ratio: float):
        self.theta0 = float(theta0)
        self.ratio = float(ratio)
        self.thetas = ThetaSequence(theta0)
        self.reset(n)

    def reset(self, n: int | None = None) -> None:
        n = self.S.shape[0] if n is None else n
        self.S = np.zeros(n)
        self.s = 0.0
        self.k = 0

    def advance(self, x_k: np.ndarray) -> None:
        """Account for ``x_k`` before the step ``k -> k+1`` overwrites it."""
        k, th, r = self.k, self.thetas, self.ratio
        if k >= 1:
            t_km1, t_k = th[k - 1], th[k]
            g = t_k * (1.0 - r * t_km1) + r * (t_km1 - t_k)
            c = g / t_km1**2
            self.S *= 1.0 - t_k
            self.S += c * x_k
            self.s = (1.0 - t_k) * self.s + c
        self.k = k + 1

    def center(self, x_k: np.ndarray) -> np.ndarray:
        k = self.k
        if k < 1:
            raise ValueError("the center needs at least one iteration (k >= 1)")
        t0 = self.theta0
        c_k = 1.0 / (t0 * self.thetas[k - 1]) - (1.0 - t0) / t0**2
        return (self.S + c_k * x_k) / (self.s + c_k)


def needs_objective(policy) -> bool:
    """Whether the policy reads ``F(x_k)`` every iteration."""
    if isinstance(policy, IntervalAdaptive):
        return needs_objective(policy.inner)
    return isinstance(policy, FunctionValueAdaptive)


def should_restart(policy, solver_kind: str, period_counter: int, *,
                   F_prev: float | None = None, F_curr: float | None = None,
                   F_z: float | None = None, theta0: float = 1.0) -> bool:
    """Decide whether to restart after the iteration that completed ``period_counter`` steps.

    ``F_prev``/``F_curr`` are ``F(x_k)`` and ``F(x_{k+1})``; ``F_z`` is
    ``F(z_{k+1})`` and is only required by :class:`ConditionalAtZ`.
    """
    if policy is None or isinstance(policy, NoRestart):
        return False
    if isinstance(policy, ConditionalAtX):
        return period_counter >= conditional_restart_threshold(policy.mu, policy.alpha, theta0)
    if isinstance(policy, ConditionalAtZ):
        if solver_kind == "ista":
            raise ValueError("restart at z needs a solver with a z iterate")
        if F_z is None or F_curr is None:
            raise ValueError("restart at z needs F(z_k) and F(x_k)")
        return F_z <= F_curr
    if isinstance(policy, (FixedCombination, ApproxCombination)):
        return period_counter % policy.K == 0
    if isinstance(policy, FunctionValueAdaptive):
        if F_prev is None or F_curr is None:
            raise ValueError("function-value restart needs F(x_k) and F(x_{k+1})")
        return F_curr > F_prev
    if isinstance(policy, IntervalAdaptive):
        if period_counter >= policy.K_high:
            return True
        if period_counter >= policy.K_low:
            return should_restart(policy.inner, solver_kind, period_counter, F_prev=F_prev,
                                  F_curr=F_curr, F_z=F_z, theta0=theta0)
        return False
    raise TypeError(f"unknown restart policy {policy!r}")


def apply_restart(state, point: np.ndarray):
    """Return ``state`` reseeded at ``point`` with ``x = z = point`` and ``theta = theta_0``."""
    point = np.asarray(point, dtype=float)
    if not np.all(np.isfinite(point)):
        raise ValueError("restart point is not finite")
    return state.restarted(point)
