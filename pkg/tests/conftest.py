import functools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import HealthCheck, settings

from accrestart.data_io import synth_lasso
from accrestart.problems import SparseDesign, lasso_problem, logistic_problem
from accrestart.solvers import compute_reference

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@functools.lru_cache(maxsize=None)
def lasso_instance(seed: int, n: int = 12, m: int = 30, l2: float = 0.0, density: float = 0.6,
                   with_ref: bool = True):
    design, _ = synth_lasso(n, m, density=density, cond_hint=4.0, seed=seed, noise=0.1)
    prob = lasso_problem(design, l2=l2)
    if with_ref:
        x, F = compute_reference(prob, tol=1e-14)
        prob = prob.with_reference(x, F)
    return prob


@functools.lru_cache(maxsize=None)
def logistic_instance(seed: int, n: int = 8, m: int = 25, lambda2: float = 0.1):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n)) * (rng.random((m, n)) < 0.7)
    A[0] = 1.0
    b = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    return logistic_problem(SparseDesign(sp.csc_matrix(A), b), 1.0, lambda2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
