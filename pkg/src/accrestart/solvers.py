"""Iteration engines (ISTA, FISTA, APG, APPROX) and the restart-aware driver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import approx_efficient as eff
from .oracle import gamma_table
from .problems import CompositeProblem, weighted_norm_sq
from .restart import (
    ApproxCombination,
    ConditionalAtX,
    ConditionalAtZ,
    FixedCombination,
    FunctionValueAdaptive,
    HistoryCenter,
    IntervalAdaptive,
    NoRestart,
    RestartEvent,
    needs_objective,
    restart_point_approx_naive,
    restart_point_full,
    should_restart,
)
from .schedule import ThetaSequence, theta_next

__all__ = [
    "FullGradientState",
    "ApproxState",
    "Sampling",
    "RunTrace",
    "StopRule",
    "NumericalError",
    "SOLVERS",
    "fista_step",
    "apg_step",
    "approx_step",
    "prox_grad_step",
    "run",
    "compute_reference",
]

SOLVERS = ("ista", "fista", "apg", "approx")


class NumericalError(RuntimeError):
    """The objective became non-finite during a run."""


@dataclass
class FullGradientState:
    x: np.ndarray
    z: np.ndarray
    theta: float
    k: int = 0
    theta0: float = 1.0

    @classmethod
    def initial(cls, x0, theta0: float = 1.0):
        x0 = np.array(x0, dtype=float)
        return cls(x0, x0.copy(), theta0, 0, theta0)

    @property
    def y(self) -> np.ndarray:
        return (1.0 - self.theta) * self.x + self.theta * self.z

    def restarted(self, point: np.ndarray):
        return type(self)(point.copy(), point.copy(), self.theta0, self.k, self.theta0)


class ApproxState(FullGradientState):
    """Same variables as the full-gradient state, with ``theta0 = tau / n``."""


class Sampling:
    """Seeded tau-nice sampling: each draw is a uniform subset of size ``tau``."""

    def __init__(self, n: int, tau: int = 1, seed: int = 0):
        if not (1 <= tau <= n):
            raise ValueError(f"tau must lie in [1, {n}], got {tau}")
        self.n, self.tau, self.seed = int(n), int(tau), int(seed)
        self.rng = np.random.default_rng(seed)

    def draw(self) -> np.ndarray:
        n, tau = self.n, self.tau
        if tau == n:
            return np.arange(n)
        if tau == 1:
            return np.array([self.rng.integers(n)])
        return np.sort(self.rng.choice(n, size=tau, replace=False))


def _v(problem, v):
    return problem.v_full if v is None else np.asarray(v, dtype=float)


def fista_step(problem: CompositeProblem, state: FullGradientState, v=None) -> FullGradientState:
    v = _v(problem, v)
    th = state.theta
    y = (1.0 - th) * state.x + th * state.z
    x_new = problem.regularizer.prox(problem.gradient(y), y, v)
    z_new = state.z + (x_new - y) / th
    return type(state)(x_new, z_new, theta_next(th), state.k + 1, state.theta0)


def apg_step(problem: CompositeProblem, state: FullGradientState, v=None) -> FullGradientState:
    v = _v(problem, v)
    th = state.theta
    y = (1.0 - th) * state.x + th * state.z
    z_new = problem.regularizer.prox(problem.gradient(y), state.z, th * v)
    x_new = y + th * (z_new - state.z)
    return type(state)(x_new, z_new, theta_next(th), state.k + 1, state.theta0)


def prox_grad_step(problem: CompositeProblem, state: FullGradientState, v=None) -> FullGradientState:
    v = _v(problem, v)
    x_new = problem.regularizer.prox(problem.gradient(state.x), state.x, v)
    return type(state)(x_new, x_new.copy(), state.theta, state.k + 1, state.theta0)


def approx_step(problem: CompositeProblem, state: FullGradientState, sampling: Sampling,
                v=None) -> FullGradientState:
    """Textbook APPROX iteration with a dense ``y``; ``theta0`` must be ``tau / n``."""
    n, tau = problem.n, sampling.tau
    v = problem.eso_vector(tau) if v is None else np.asarray(v, dtype=float)
    ratio = n / tau
    th = state.theta
    y = (1.0 - th) * state.x + th * state.z
    grad = problem.gradient(y)
    S = sampling.draw()
    z_new = state.z.copy()
    z_new[S] = problem.regularizer.prox(grad[S], state.z[S], th * ratio * v[S])
    x_new = y + ratio * th * (z_new - state.z)
    return type(state)(x_new, z_new, theta_next(th), state.k + 1, state.theta0)


@dataclass
class StopRule:
    max_epochs: float | None = None
    gap_tol: float | None = None


@dataclass
class RunTrace:
    """Per-record history of a run; ``gap`` and ``dist_v`` are NaN without a reference."""

    iters: list = field(default_factory=list)
    epochs: list = field(default_factory=list)
    F: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    dist_v: list = field(default_factory=list)
    restarted: list = field(default_factory=list)
    events: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    x_final: np.ndarray | None = None

    def append(self, k, epoch, F, gap=math.nan, dist_v=math.nan, restarted=False):
        self.iters.append(int(k))
        self.epochs.append(float(epoch))
        self.F.append(float(F))
        self.gap.append(float(gap))
        self.dist_v.append(float(dist_v))
        self.restarted.append(bool(restarted))

    def __len__(self) -> int:
        return len(self.iters)

    def iterations_to(self, tol: float) -> int | None:
        """First recorded iteration whose gap is at most ``tol``."""
        for k, g in zip(self.iters, self.gap):
            if g <= tol:
                return k
        return None

    def restart_iterations(self) -> list[int]:
        return [k for k, r in zip(self.iters, self.restarted) if r]

    def arrays(self) -> dict:
        return {
            "iter": np.asarray(self.iters, dtype=int),
            "epoch": np.asarray(self.epochs),
            "F": np.asarray(self.F),
            "gap": np.asarray(self.gap),
            "dist_v": np.asarray(self.dist_v),
            "restart": np.asarray(self.restarted, dtype=bool),
        }


# -- engines ------------------------------------------------------------------


class _FullEngine:
    def __init__(self, problem, kind, x0, v, track_center):
        self.problem, self.kind = problem, kind
        self.v = _v(problem, v)
        self.theta0 = 1.0
        self.tau, self.n = problem.n, problem.n
        self.state = FullGradientState.initial(x0)
        self._step = {"ista": prox_grad_step, "fista": fista_step, "apg": apg_step}[kind]
        self.center = HistoryCenter(problem.n, 1.0, 1.0) if track_center else None

    @property
    def x(self):
        return self.state.x

    @property
    def z(self):
        return self.state.z

    def step(self):
        if self.center is not None:
            self.center.advance(self.state.x)
        self.state = self._step(self.problem, self.state, self.v)

    def value(self):
        return self.problem.value(self.state.x)

    def value_z(self):
        return self.problem.value(self.state.z)

    def center_point(self, sigma):
        c = self.center.center(self.state.x)
        return sigma * self.state.x + (1.0 - sigma) * c

    def restart(self, point):
        self.state = self.state.restarted(point)
        if self.center is not None:
            self.center.reset()


class _NaiveApproxEngine:
    def __init__(self, problem, x0, tau, seed, v, track_history):
        self.problem = problem
        self.n, self.tau = problem.n, tau
        self.ratio = problem.n / tau
        self.theta0 = tau / problem.n
        self.v = problem.eso_vector(tau) if v is None else np.asarray(v, dtype=float)
        self.sampling = Sampling(problem.n, tau, seed)
        self.state = ApproxState.initial(x0, self.theta0)
        self.history = [self.state.x.copy()] if track_history else None
        self.thetas = ThetaSequence(self.theta0)

    @property
    def x(self):
        return self.state.x

    @property
    def z(self):
        return self.state.z

    def step(self):
        self.state = approx_step(self.problem, self.state, self.sampling, self.v)
        if self.history is not None:
            self.history.append(self.state.x.copy())

    def value(self):
        return self.problem.value(self.state.x)

    def value_z(self):
        return self.problem.value(self.state.z)

    def center_point(self, sigma):
        k = len(self.history) - 1
        table = gamma_table(self.theta0, self.ratio, k)
        return restart_point_approx_naive(self.history, table.thetas, table[k], sigma, self.ratio)

    def restart(self, point):
        self.state = self.state.restarted(point)
        if self.history is not None:
            self.history = [self.state.x.copy()]


class _EfficientApproxEngine:
    def __init__(self, problem, x0, tau, seed, v):
        self.problem = problem
        self.n, self.tau = problem.n, tau
        self.theta0 = tau / problem.n
        self.v = problem.eso_vector(tau) if v is None else np.asarray(v, dtype=float)
        self.sampling = Sampling(problem.n, tau, seed)
        self.state = eff.init_state(problem, x0, tau)

    @property
    def x(self):
        return eff.materialize_x(self.state)

    @property
    def z(self):
        return self.state.z.copy()

    def step(self):
        eff.efficient_step(self.problem, self.state, self.sampling, self.v)

    def value(self):
        return eff.state_value(self.problem, self.state)

    def value_z(self):
        return self.problem.value(self.state.z)

    def center_point(self, sigma):
        return eff.efficient_restart_point(self.state, sigma)

    def restart(self, point):
        self.state.restarted(point, self.problem.A)


def _restart_point(policy, eng, solver):
    if isinstance(policy, (ConditionalAtX, FunctionValueAdaptive)):
        return eng.x
    if isinstance(policy, ConditionalAtZ):
        return eng.z
    if isinstance(policy, FixedCombination):
        return restart_point_full(eng.x, eng.z, policy.sigma)
    if isinstance(policy, ApproxCombination):
        return eng.center_point(policy.sigma)
    if isinstance(policy, IntervalAdaptive):
        if solver == "approx":
            return eng.center_point(policy.sigma)
        return restart_point_full(eng.x, eng.z, policy.sigma)
    raise TypeError(f"unknown restart policy {policy!r}")


def _uses_center(policy, solver) -> bool:
    return isinstance(policy, ApproxCombination) or (
        solver == "approx" and isinstance(policy, IntervalAdaptive))


def run(problem: CompositeProblem, solver: str = "fista", policy=None, budget: int = 1000,
        stop: StopRule | None = None, seed: int = 0, *, tau: int = 1,
        engine: str = "efficient", x0=None, v=None, record_every: int = 1,
        keep_events: bool = True) -> RunTrace:
    """Iterate ``solver`` under ``policy`` for at most ``budget`` iterations.

    Records ``(k, epoch, F, gap, dist_v, restarted)`` at ``k = 0`` and then
    every ``record_every`` iterations (restarts and the final iterate are
    always recorded). Gaps and distances need ``problem.reference``.
    """
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    if engine not in ("efficient", "naive"):
        raise ValueError(f"unknown engine {engine!r}")
    policy = NoRestart() if policy is None else policy
    stop = stop or StopRule()
    if stop.gap_tol is not None and problem.reference is None:
        raise ValueError("a gap-based stop needs a reference optimum on the problem")
    if solver == "ista" and not isinstance(policy, NoRestart):
        raise ValueError("ISTA has no momentum to restart")
    if isinstance(policy, ConditionalAtZ) or (
            isinstance(policy, IntervalAdaptive) and isinstance(policy.inner, ConditionalAtZ)):
        if solver == "ista":
            raise ValueError("restart at z needs a solver with a z iterate")

    n = problem.n
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    if solver == "approx":
        if engine == "efficient":
            eng = _EfficientApproxEngine(problem, x0, tau, seed, v)
        else:
            eng = _NaiveApproxEngine(problem, x0, tau, seed, v, _uses_center(policy, solver))
        epoch_scale = tau / n
    else:
        eng = _FullEngine(problem, solver, x0, v, _uses_center(policy, solver))
        epoch_scale = 1.0
    if isinstance(policy, (FixedCombination, ApproxCombination)) and solver == "approx" \
            and policy.K > eff.MAX_PERIOD_SCALE / eng.theta0:
        raise ValueError(f"K={policy.K} exceeds the usable period {eff.MAX_PERIOD_SCALE:g}/theta0")

    ref = problem.reference
    vnorm = eng.v
    trace = RunTrace(meta={
        "problem": problem.name, "solver": solver,
        "engine": engine if solver == "approx" else "",
        "policy": repr(policy), "seed": seed, "tau": tau if solver == "approx" else n,
        "n": n, "budget": budget,
    })

    def record(k, F, restarted):
        if not math.isfinite(F):
            raise NumericalError(f"objective is {F} at iteration {k}")
        if ref is not None:
            x = eng.x
            gap = F - ref[1]
            dist = math.sqrt(weighted_norm_sq(x - ref[0], vnorm))
        else:
            gap = dist = math.nan
        trace.append(k, k * epoch_scale, F, gap, dist, restarted)
        return gap

    need_F = needs_objective(policy)
    need_Fz = isinstance(policy, ConditionalAtZ) or (
        isinstance(policy, IntervalAdaptive) and isinstance(policy.inner, ConditionalAtZ))
    F = eng.value()
    gap = record(0, F, False)
    counter = 0
    k = 0
    done = stop.gap_tol is not None and gap <= stop.gap_tol
    while not done and k < budget:
        F_prev = F
        eng.step()
        k += 1
        counter += 1
        is_last = k == budget or (stop.max_epochs is not None and k * epoch_scale >= stop.max_epochs)
        rec = is_last or k % record_every == 0
        F = eng.value() if (rec or need_F or need_Fz or stop.gap_tol is not None) else math.nan
        F_z = eng.value_z() if need_Fz else None
        restarted = should_restart(policy, solver, counter, F_prev=F_prev, F_curr=F,
                                   F_z=F_z, theta0=eng.theta0)
        if restarted:
            point = _restart_point(policy, eng, solver)
            eng.restart(point)
            counter = 0
            if keep_events:
                trace.events.append(RestartEvent(k, np.array(point), eng.theta0))
            F = eng.value()
        if rec or restarted or stop.gap_tol is not None:
            if not math.isfinite(F):
                raise NumericalError(f"objective is {F} at iteration {k}")
            if rec or restarted or (ref is not None and F - ref[1] <= stop.gap_tol):
                gap = record(k, F, restarted)
            else:
                gap = F - ref[1] if ref is not None else math.nan
        if stop.gap_tol is not None and gap <= stop.gap_tol:
            done = True
        if is_last:
            break
    trace.x_final = np.array(eng.x)
    return trace


# -- reference optimum -----------------------------------------------------------


def _polish_least_squares(problem, x, kkt_tol=1e-9):
    A, b = problem.A, problem.design.b
    l1, l2 = problem.regularizer.l1, problem.regularizer.l2
    S = np.flatnonzero(x != 0.0)
    if S.size == 0:
        return None
    AS = A[:, S].toarray()
    G = AS.T @ AS + l2 * np.eye(S.size)
    rhs = AS.T @ b - l1 * np.sign(x[S])
    try:
        xS = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        return None
    if np.any(np.sign(xS) != np.sign(x[S])):
        return None
    xp = np.zeros_like(x)
    xp[S] = xS
    grad = problem.gradient(xp)
    off = np.ones(x.size, dtype=bool)
    off[S] = False
    if np.any(np.abs(grad[off]) > l1 * (1.0 + kkt_tol) + kkt_tol):
        return None
    return xp


def compute_reference(problem: CompositeProblem, tol: float = 1e-13,
                      max_iter: int = 10**6, x0=None) -> tuple[np.ndarray, float]:
    """High-accuracy minimizer by FISTA with function-value restarts.

    Stops when the prox-gradient residual ``L ||x - T(x)||`` falls below
    ``tol * max(1, ||grad f(x)||)``; least-squares problems are then
    polished by an exact solve on the detected support (kept only if it
    satisfies the optimality conditions and does not increase ``F``).
    """
    v = problem.v_full
    L = problem.lipschitz
    reg = problem.regularizer
    x = np.zeros(problem.n) if x0 is None else np.array(x0, dtype=float)
    state = FullGradientState.initial(x)
    F = problem.value(x)
    for it in range(1, max_iter + 1):
        new = fista_step(problem, state, v)
        F_new = problem.value(new.x)
        if F_new > F:
            new = new.restarted(new.x)
        state, F = new, F_new
        if it % 10 == 0:
            g = problem.gradient(state.x)
            res = L * np.linalg.norm(state.x - reg.prox(g, state.x, v))
            if res <= tol * max(1.0, np.linalg.norm(g)):
                break
    x = state.x
    F = problem.value(x)
    if problem.loss.kind == "least_squares":
        xp = _polish_least_squares(problem, x)
        if xp is not None:
            Fp = problem.value(xp)
            if Fp <= F + 1e-15 * max(1.0, abs(F)):
                x, F = xp, Fp
    return x, F
