"""Composite objectives ``F = f + psi`` with separable ``psi``.

Two smooth parts are provided, both generalized linear models in ``A x``:
least squares (Lasso) and the logistic loss. The regularizer is the
separable elastic net ``psi^i(t) = l1 |t| + (l2 / 2) t^2``, which covers
both the plain L1 penalty and the ridge-augmented variants.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

__all__ = [
    "SparseDesign",
    "ElasticNet",
    "LeastSquaresLoss",
    "LogisticLoss",
    "CompositeProblem",
    "weighted_norm_sq",
    "soft_threshold",
    "prox_coordinate",
    "lasso_problem",
    "logistic_problem",
    "max_gram_eigenvalue",
]

# Above this size the Gram spectrum is estimated by power iteration.
DENSE_EIG_LIMIT = 2000


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseDesign:
    """Design matrix ``A`` (m x n, compressed columns) and labels/targets ``b``."""

    A: sp.csc_matrix
    b: np.ndarray

    def __post_init__(self):
        A = sp.csc_matrix(self.A, dtype=float)
        A.sum_duplicates()
        A.sort_indices()
        b = _frozen(np.ravel(self.b))
        m, n = A.shape
        if m == 0 or n == 0:
            raise ValueError(f"design has a zero-width dimension: shape {A.shape}")
        if b.shape[0] != m:
            raise ValueError(f"b has length {b.shape[0]}, expected {m}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def column(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices and values of column ``i``."""
        A = self.A
        lo, hi = A.indptr[i], A.indptr[i + 1]
        return A.indices[lo:hi], A.data[lo:hi]

    def empty_columns(self) -> np.ndarray:
        return np.flatnonzero(np.diff(self.A.indptr) == 0)

    def dense(self) -> np.ndarray:
        return self.A.toarray()


def weighted_norm_sq(x: np.ndarray, v: np.ndarray) -> float:
    """``sum_i v_i x_i^2``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != v.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {v.shape}")
    return float(np.dot(v, x * x))


def soft_threshold(u, thresh):
    return np.sign(u) * np.maximum(np.abs(u) - thresh, 0.0)


@dataclass(frozen=True)
class ElasticNet:
    """``psi(x) = l1 ||x||_1 + (l2 / 2) ||x||^2``, applied coordinatewise."""

    l1: float
    l2: float = 0.0

    def __post_init__(self):
        if self.l1 < 0 or self.l2 < 0:
            raise ValueError("regularization weights must be nonnegative")

    def value(self, x: np.ndarray) -> float:
        return self.l1 * float(np.abs(x).sum()) + 0.5 * self.l2 * float(np.dot(x, x))

    def prox(self, g, center, weight):
        """Minimizer of ``g z + (weight/2)(z - center)^2 + psi^i(z)``.

        Works elementwise on arrays; the linear term's anchor is irrelevant
        to the minimizer so it is omitted.
        """
        denom = weight + self.l2
        return soft_threshold((weight * center - g) / denom, self.l1 / denom)

    def in_subdifferential(self, s: float, z: float, tol: float = 1e-10) -> bool:
        """Whether ``s`` lies in ``d psi^i(z)`` up to ``tol``."""
        s = s - self.l2 * z
        if z > 0:
            return abs(s - self.l1) <= tol
        if z < 0:
            return abs(s + self.l1) <= tol
        return abs(s) <= self.l1 + tol


def prox_coordinate(i, g, center, weight, regularizer: ElasticNet):
    """Coordinate prox ``argmin_z g (z - y^i) + (weight/2)(z - center)^2 + psi^i(z)``.

    ``i`` is accepted for interface symmetry; the regularizer is identical
    across coordinates.
    """
    if np.any(np.asarray(weight) <= 0):
        raise ValueError("prox weight must be positive")
    return regularizer.prox(g, center, weight)


class LeastSquaresLoss:
    """``f(x) = 1/2 ||A x - b||^2`` seen as a function of ``u = A x``."""

    kind = "least_squares"
    curvature = 1.0

    def __init__(self, b: np.ndarray):
        self.b = b

    def value(self, u: np.ndarray) -> float:
        r = u - self.b
        return 0.5 * float(np.dot(r, r))

    def derivative(self, u: np.ndarray, rows: np.ndarray | None = None) -> np.ndarray:
        b = self.b if rows is None else self.b[rows]
        return u - b


class LogisticLoss:
    """``f(x) = c sum_j log(1 + exp(b_j a_j^T x))`` as a function of ``u = A x``."""

    kind = "logistic"

    def __init__(self, b: np.ndarray, scale: float):
        self.b = b
        self.scale = float(scale)
        # second derivative of log(1 + e^t) is at most 1/4
        self.curvature = self.scale / 4.0

    def value(self, u: np.ndarray) -> float:
        return self.scale * float(np.logaddexp(0.0, self.b * u).sum())

    def derivative(self, u: np.ndarray, rows: np.ndarray | None = None) -> np.ndarray:
        b = self.b if rows is None else self.b[rows]
        return self.scale * b * expit(b * u)


def max_gram_eigenvalue(A: sp.spmatrix, max_iter: int = 200, rtol: float = 1e-9,
                        seed: int = 0) -> float:
    """Largest eigenvalue of ``A^T A``.

    Exact (dense symmetric eigensolver) up to ``DENSE_EIG_LIMIT`` columns,
    power iteration beyond.
    """
    n = A.shape[1]
    if n <= DENSE_EIG_LIMIT:
        G = (A.T @ A).toarray() if sp.issparse(A) else A.T @ A
        return float(np.linalg.eigvalsh(G)[-1])
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = A.T @ (A @ x)
        lam_new = float(np.linalg.norm(y))
        if lam_new == 0.0:
            return 0.0
        x = y / lam_new
        if abs(lam_new - lam) <= rtol * lam_new:
            lam = lam_new
            break
        lam = lam_new
    return lam


@dataclass(frozen=True, eq=False)
class CompositeProblem:
    """``F(x) = loss(A x) + psi(x)`` with its ESO and strong-convexity data.

    ``v`` is the coordinate (serial sampling) ESO vector; ``lipschitz`` is the
    Euclidean Lipschitz constant of ``grad f`` and gives the full-gradient
    vector ``v_full = lipschitz * ones``. ``mu_F`` is the strong-convexity
    constant with respect to ``||.||_v`` (0 if unknown).
    """

    design: SparseDesign
    loss: object
    regularizer: ElasticNet
    v: np.ndarray
    lipschitz: float
    mu_F: float
    name: str = "composite"
    reference: tuple[np.ndarray, float] | None = None
    _AT: sp.csr_matrix = field(default=None, repr=False)

    def __post_init__(self):
        v = _frozen(self.v)
        if v.shape != (self.design.n,):
            raise ValueError("ESO vector has the wrong length")
        if np.any(v <= 0):
            bad = np.flatnonzero(v <= 0)
            raise ValueError(f"ESO vector must be positive; zero columns {bad[:10].tolist()}")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "_AT", self.design.A.T.tocsr())
        if self.reference is not None:
            x, F = self.reference
            x = _frozen(x)
            if x.shape != (self.n,):
                raise ValueError("reference dimension mismatch")
            object.__setattr__(self, "reference", (x, float(F)))

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def A(self) -> sp.csc_matrix:
        return self.design.A

    @property
    def v_full(self) -> np.ndarray:
        return np.full(self.n, self.lipschitz)

    @property
    def x_star(self) -> np.ndarray | None:
        return None if self.reference is None else self.reference[0]

    @property
    def F_star(self) -> float | None:
        return None if self.reference is None else self.reference[1]

    def with_reference(self, x_star: np.ndarray, F_star: float | None = None) -> "CompositeProblem":
        if F_star is None:
            F_star = self.value(x_star)
        return replace(self, reference=(np.asarray(x_star, dtype=float), float(F_star)), _AT=None)

    # -- oracles ---------------------------------------------------------

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite point")
        return x

    def smooth_value(self, x: np.ndarray) -> float:
        x = self._check(x)
        return self.loss.value(self.A @ x)

    def value(self, x: np.ndarray) -> float:
        x = self._check(x)
        return self.loss.value(self.A @ x) + self.regularizer.value(x)

    def value_from_linear(self, Ax: np.ndarray, x: np.ndarray) -> float:
        """``F(x)`` when ``A x`` is already available."""
        return self.loss.value(Ax) + self.regularizer.value(x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = self._check(x)
        return self._AT @ self.loss.derivative(self.A @ x)

    def partial_derivative(self, x: np.ndarray, i) -> float | np.ndarray:
        """``grad_i f(x)``; ``i`` may be an index array."""
        x = self._check(x)
        r = self.loss.derivative(self.A @ x)
        idx = np.atleast_1d(i)
        out = self._AT[idx] @ r
        return float(out[0]) if np.ndim(i) == 0 else out

    # -- constants -------------------------------------------------------

    def eso_vector(self, tau: int = 1) -> np.ndarray:
        """ESO vector for tau-nice sampling.

        ``v_i = curv * sum_j (1 + (w_j - 1)(tau - 1)/max(1, n - 1)) A_ji^2`` with
        ``w_j`` the number of nonzeros in row ``j``; ``tau = 1`` gives ``v``.
        """
        n = self.n
        if not (1 <= tau <= n):
            raise ValueError(f"tau must lie in [1, {n}], got {tau}")
        if tau == 1:
            return np.array(self.v)
        A = self.A
        omega = np.diff(A.tocsr().indptr).astype(float)
        beta = 1.0 + (omega - 1.0) * (tau - 1.0) / max(1.0, n - 1.0)
        if self.loss.kind == "logistic":
            beta = beta * self.design.b**2
        sq = A.multiply(A)
        return self.loss.curvature * np.asarray(sq.T @ beta).ravel()

    def strong_convexity(self, v: np.ndarray) -> float:
        """Lower bound on ``mu_F(v)``.

        For least squares with at most ``DENSE_EIG_LIMIT`` columns this is the
        smallest eigenvalue of ``V^{-1/2}(A^T A + l2 I)V^{-1/2}``; otherwise
        only the regularizer's share ``l2 / max v`` is certified.
        """
        v = np.asarray(v, dtype=float)
        l2 = self.regularizer.l2
        if self.loss.kind == "least_squares" and self.n <= DENSE_EIG_LIMIT:
            G = (self.A.T @ self.A).toarray() + l2 * np.eye(self.n)
            s = 1.0 / np.sqrt(v)
            lam_min = float(np.linalg.eigvalsh(G * s[:, None] * s[None, :])[0])
            return max(lam_min, l2 / float(v.max()), 0.0)
        return l2 / float(v.max())


def _require_nonempty_columns(design: SparseDesign) -> None:
    empty = design.empty_columns()
    if empty.size:
        raise ValueError(
            f"design has {empty.size} all-zero column(s) (first: {empty[:10].tolist()}); "
            "drop them before building the problem"
        )


def lasso_problem(design: SparseDesign, reg_weight: float | None = None,
                  l2: float = 0.0) -> CompositeProblem:
    """``1/2 ||A x - b||^2 + reg_weight ||x||_1 + (l2/2) ||x||^2``.

    ``reg_weight`` defaults to ``||A^T b||_inf / 10``.
    """
    _require_nonempty_columns(design)
    A, b = design.A, design.b
    if reg_weight is None:
        reg_weight = float(np.abs(A.T @ b).max()) / 10.0
    if reg_weight <= 0:
        raise ValueError("reg_weight must be positive")
    v = np.asarray(A.multiply(A).sum(axis=0)).ravel()
    reg = ElasticNet(float(reg_weight), float(l2))
    prob = CompositeProblem(design, LeastSquaresLoss(b), reg, v,
                            max_gram_eigenvalue(A), 0.0, name="lasso")
    return replace(prob, mu_F=prob.strong_convexity(prob.v), _AT=None)


def logistic_problem(design: SparseDesign, lambda1: float, lambda2: float = 0.0) -> CompositeProblem:
    """``(lambda1 / (2 ||A^T b||_inf)) sum_j log(1 + exp(b_j a_j^T x)) + ||x||_1 + (lambda2/2)||x||^2``."""
    _require_nonempty_columns(design)
    if lambda1 <= 0:
        raise ValueError("lambda1 must be positive")
    if lambda2 < 0:
        raise ValueError("lambda2 must be nonnegative")
    A, b = design.A, design.b
    atb = float(np.abs(A.T @ b).max())
    if atb == 0.0:
        raise ValueError("A^T b vanishes; the loss scaling is undefined")
    loss = LogisticLoss(b, lambda1 / (2.0 * atb))
    Ab = sp.diags(b) @ A
    v = lambda1 / (8.0 * atb) * np.asarray(Ab.multiply(Ab).sum(axis=0)).ravel()
    L = loss.curvature * max_gram_eigenvalue(Ab)
    reg = ElasticNet(1.0, float(lambda2))
    return CompositeProblem(design, loss, reg, v, L, lambda2 / float(v.max()), name="logistic")
