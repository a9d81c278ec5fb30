"""Scalar recursions and closed-form parameter and rate formulas.

Everything here is a pure function of a handful of scalars: the momentum
sequence ``theta_k``, the aggregate ``xi_k`` of the history weights, the
contraction modulus ``m_k(mu)``, the restart period/blend chooser and the
theoretical rates used to compare restarted methods with plain coordinate
descent.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

__all__ = [
    "theta_next",
    "ThetaSequence",
    "theta_path",
    "xi_next",
    "xi_path",
    "xi_at",
    "XiAggregate",
    "m_k",
    "choose_restart_period",
    "choose_sigma",
    "RestartParameterChoice",
    "restart_parameters",
    "contraction_factor",
    "rate_bound",
    "restart_rate",
    "cd_rate",
    "iteration_complexity",
    "conditional_restart_threshold",
]

_SQRT3 = math.sqrt(3.0)


def theta_next(theta: float) -> float:
    """Return the positive root of ``X**2 + theta**2 X - theta**2``.

    Evaluated as ``2 theta^2 / (sqrt(theta^4 + 4 theta^2) + theta^2)``; the
    textbook difference form loses digits once ``theta`` is of order 1/k.
    """
    if not (0.0 < theta <= 1.0):
        raise ValueError(f"theta must lie in (0, 1], got {theta!r}")
    t2 = theta * theta
    return 2.0 * t2 / (math.sqrt(t2 * t2 + 4.0 * t2) + t2)


class ThetaSequence:
    """Append-only sequence ``theta_0, theta_1, ...`` grown on demand.

    >>> seq = ThetaSequence(1.0)
    >>> round(seq[1], 10)
    0.6180339887
    """

    def __init__(self, theta0: float):
        if not (0.0 < theta0 <= 1.0):
            raise ValueError(f"theta0 must lie in (0, 1], got {theta0!r}")
        self.theta0 = float(theta0)
        self.values: list[float] = [self.theta0]

    def extend_to(self, k: int) -> None:
        vals = self.values
        t = vals[-1]
        for _ in range(len(vals), k + 1):
            t = theta_next(t)
            vals.append(t)

    def __getitem__(self, k: int) -> float:
        if k < 0:
            raise IndexError("theta index must be nonnegative")
        if k >= len(self.values):
            self.extend_to(k)
        return self.values[k]

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self, k_max: int | None = None) -> np.ndarray:
        if k_max is not None:
            self.extend_to(k_max)
            return np.asarray(self.values[: k_max + 1])
        return np.asarray(self.values)


def theta_path(theta0: float, k_max: int) -> np.ndarray:
    """Array ``[theta_0, ..., theta_{k_max}]``."""
    return ThetaSequence(theta0).as_array(k_max)


def xi_next(xi: float, theta_k: float, ratio: float) -> float:
    """One step of the ``xi`` recursion; ``ratio`` is ``n / tau``."""
    if theta_k <= 0.0:
        raise ValueError("theta_k must be positive")
    if ratio < 1.0:
        raise ValueError(f"ratio n/tau must be >= 1, got {ratio!r}")
    if xi < 0.0:
        raise ValueError("xi must be nonnegative")
    return (1.0 - theta_k) * xi + (1.0 + (ratio - 1.0) * theta_k) / theta_k


def xi_path(theta0: float, ratio: float, k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(thetas, xis)`` for ``k = 0..k_max``.

    ``xis[0]`` holds the convention ``(1 - theta_0) / theta_0**2`` and the
    recursion is seeded with ``xi_1 = 1 / theta_0**2``.
    """
    thetas = theta_path(theta0, max(k_max, 1))
    xis = np.empty(max(k_max, 1) + 1)
    xis[0] = (1.0 - theta0) / theta0**2
    xis[1] = 1.0 / theta0**2
    for k in range(1, len(xis) - 1):
        xis[k + 1] = xi_next(xis[k], thetas[k], ratio)
    return thetas[: k_max + 1], xis[: k_max + 1]


class XiAggregate:
    """Lazily grown ``(theta_k, xi_k)`` tables for a fixed ``(theta0, ratio)``."""

    def __init__(self, theta0: float, ratio: float):
        if ratio < 1.0:
            raise ValueError(f"ratio n/tau must be >= 1, got {ratio!r}")
        self.theta0 = float(theta0)
        self.ratio = float(ratio)
        self.thetas = ThetaSequence(theta0)
        self.xis: list[float] = [(1.0 - theta0) / theta0**2, 1.0 / theta0**2]
        self._lock = threading.Lock()

    def __getitem__(self, k: int) -> float:
        if k < 0:
            raise IndexError("xi index must be nonnegative")
        if k >= len(self.xis):
            with self._lock:
                self.thetas.extend_to(k)
                xis, th, r = self.xis, self.thetas.values, self.ratio
                xi = xis[-1]
                for j in range(len(xis) - 1, k):
                    t = th[j]
                    xi = (1.0 - t) * xi + (1.0 + (r - 1.0) * t) / t
                    xis.append(xi)
        return self.xis[k]


_XI_CACHE: dict[tuple[float, float], XiAggregate] = {}
_XI_CACHE_LOCK = threading.Lock()


def xi_at(k: int, theta0: float, ratio: float) -> float:
    """``xi_k`` for the given ``theta0`` and ``ratio``; tables are cached."""
    key = (float(theta0), float(ratio))
    with _XI_CACHE_LOCK:
        agg = _XI_CACHE.get(key)
        if agg is None:
            agg = _XI_CACHE[key] = XiAggregate(theta0, ratio)
    return agg[k]


def m_k(mu: float, xi_k: float, theta0: float) -> float:
    """Contraction modulus ``m_k(mu)`` expressed through ``xi_k``."""
    if mu <= 0.0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    floor = (1.0 - theta0) / theta0**2
    if xi_k < floor * (1.0 - 1e-12):
        raise ValueError("xi_k below its lower limit (1 - theta0) / theta0**2")
    return mu * theta0**2 / (1.0 + mu * (1.0 - theta0)) * (xi_k - floor)


def _check_mu_lambda(mu: float, tradeoff_lambda: float) -> None:
    if not (0.0 < mu <= 1.0):
        raise ValueError(f"mu must lie in (0, 1], got {mu!r}")
    if tradeoff_lambda < mu:
        raise ValueError("tradeoff_lambda must be >= mu")


def choose_restart_period(
    mu: float,
    theta0: float,
    tradeoff_lambda: float | None = None,
    variant: str = "main",
) -> int:
    """Restart period ``K`` for a strong-convexity estimate ``mu``.

    ``variant="main"`` is ``ceil(2 sqrt3/theta0 sqrt(lambda/mu) - 2/theta0 + 1)``
    with ``lambda = 1 + mu`` by default. ``variant="general"`` drops the
    trailing ``+ 1``; it is the form for which ``lambda <= mu theta0^2 xi_K
    <= 9 lambda`` is guaranteed.
    """
    lam = 1.0 + mu if tradeoff_lambda is None else float(tradeoff_lambda)
    _check_mu_lambda(mu, lam)
    if not (0.0 < theta0 <= 1.0):
        raise ValueError(f"theta0 must lie in (0, 1], got {theta0!r}")
    expr = 2.0 * _SQRT3 / theta0 * math.sqrt(lam / mu) - 2.0 / theta0
    if variant == "main":
        expr += 1.0
    elif variant != "general":
        raise ValueError(f"unknown variant {variant!r}")
    return max(1, math.ceil(expr))


def choose_sigma(mu: float, K: int, theta0: float, ratio: float) -> float:
    """Blend weight ``sigma = 1 / (1 + m_K(mu))``."""
    if K < 1:
        raise ValueError("K must be a positive integer")
    return 1.0 / (1.0 + m_k(mu, xi_at(K, theta0, ratio), theta0))


@dataclass(frozen=True)
class RestartParameterChoice:
    mu: float
    tradeoff_lambda: float
    K: int
    sigma: float
    m_K: float


def restart_parameters(
    mu: float,
    theta0: float,
    ratio: float,
    tradeoff_lambda: float | None = None,
    variant: str = "main",
) -> RestartParameterChoice:
    """Period, blend and modulus chosen together from an estimate ``mu``."""
    lam = 1.0 + mu if tradeoff_lambda is None else float(tradeoff_lambda)
    K = choose_restart_period(mu, theta0, lam, variant)
    mK = m_k(mu, xi_at(K, theta0, ratio), theta0)
    return RestartParameterChoice(mu, lam, K, 1.0 / (1.0 + mK), mK)


def contraction_factor(sigma: float, m_K_at_muF: float) -> float:
    """Per-period factor ``max(sigma, 1 - sigma m_K(mu_F))``."""
    if not (0.0 < sigma <= 1.0):
        raise ValueError(f"sigma must lie in (0, 1], got {sigma!r}")
    if m_K_at_muF < 0.0:
        raise ValueError("m_K must be nonnegative")
    return max(sigma, 1.0 - sigma * m_K_at_muF)


def rate_bound(
    mu: float,
    mu_F: float,
    theta0: float,
    tradeoff_lambda: float | None = None,
) -> float:
    """Simplified per-iteration rate of restarted APPROX.

    ``(1 - min(mu_F/mu, 1) (lam - mu(1-theta0))/(lam + 1)) ** (theta0 sqrt(mu) / (2 sqrt3 sqrt(lam)))``
    """
    lam = 1.0 + mu if tradeoff_lambda is None else float(tradeoff_lambda)
    _check_mu_lambda(mu, lam)
    if mu_F <= 0.0:
        raise ValueError("mu_F must be positive")
    base = 1.0 - min(mu_F / mu, 1.0) * (lam - mu * (1.0 - theta0)) / (lam + 1.0)
    return base ** (theta0 * math.sqrt(mu) / (2.0 * _SQRT3 * math.sqrt(lam)))


def restart_rate(
    mu: float,
    mu_F: float,
    theta0: float,
    ratio: float,
    tradeoff_lambda: float | None = None,
    variant: str = "main",
) -> float:
    """Exact per-iteration factor ``max(sigma, 1 - sigma m_K(mu_F))**(1/K)``
    with ``K`` and ``sigma`` picked from the estimate ``mu``."""
    choice = restart_parameters(mu, theta0, ratio, tradeoff_lambda, variant)
    mK_true = m_k(mu_F, xi_at(choice.K, theta0, ratio), theta0)
    return contraction_factor(choice.sigma, mK_true) ** (1.0 / choice.K)


def cd_rate(mu_F: float, tau: int, n: int) -> float:
    """Rate ``1 - tau mu_F / n`` of plain randomized coordinate descent."""
    return 1.0 - tau * mu_F / n


def iteration_complexity(mu: float, mu_F: float, theta0: float, eps: float, D0: float) -> float:
    """Iteration count after which the restarted scheme reaches accuracy ``eps``.

    ``D0`` is ``(1 - theta0)(F(x0) - F*) + ||x0 - x*||_v^2 / 2``; ``n/tau`` is
    taken as ``1/theta0``.
    """
    if eps <= 0.0 or D0 <= 0.0:
        raise ValueError("eps and D0 must be positive")
    if not (0.0 < mu <= 1.0):
        raise ValueError(f"mu must lie in (0, 1], got {mu!r}")
    if mu_F <= 0.0:
        raise ValueError("mu_F must be positive")
    worst = max(1.0 / math.sqrt(mu), math.sqrt(mu) / mu_F)
    return (6.0 * math.sqrt(6.0) * worst * math.log(D0 / eps)
            + 2.0 * _SQRT3 * math.sqrt(1.0 + 1.0 / mu)) / theta0


def conditional_restart_threshold(mu: float, alpha: float, theta0: float) -> float:
    """Iteration count after which restarting at ``x_k`` contracts the gap by ``alpha``."""
    if mu <= 0.0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    # alpha = 1 is admitted: it is the weakest (non-expanding) trigger.
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    return 2.0 / theta0 * (math.sqrt((1.0 + mu) / (alpha * mu)) - 1.0) + 1.0
