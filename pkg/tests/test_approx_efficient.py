import warnings

import numpy as np
import pytest

from accrestart import approx_efficient as eff
from accrestart import oracle
from accrestart.restart import ApproxCombination
from accrestart.solvers import Sampling, run

from conftest import lasso_instance, logistic_instance


def _clone_sampler(samp):
    twin = Sampling(samp.n, samp.tau, samp.seed)
    twin.rng.bit_generator.state = samp.rng.bit_generator.state
    return twin


def test_first_iteration_has_zero_aggregates():
    prob = lasso_instance(0, with_ref=False)
    st = eff.init_state(prob, np.zeros(prob.n), 2)
    eff.efficient_step(prob, st, Sampling(prob.n, 2, 0), prob.eso_vector(2))
    assert st.a == 0.0 and st.b == 0.0
    assert not st.g.any() and not st.h.any()


def test_materialize_after_init_and_restart():
    prob = lasso_instance(0, with_ref=False)
    x0 = np.arange(prob.n, dtype=float)
    st = eff.init_state(prob, x0, 1)
    np.testing.assert_array_equal(eff.materialize_x(st), x0)
    samp, v = Sampling(prob.n, 1, 3), prob.eso_vector(1)
    for _ in range(15):
        eff.efficient_step(prob, st, samp, v)
    p = eff.efficient_restart_point(st, 0.4)
    st.restarted(p, prob.A)
    np.testing.assert_array_equal(eff.materialize_x(st), p)
    assert st.a == st.b == st.r == 0.0 and st.theta == st.theta0


def test_touched_coordinate_matches_prox_at_y():
    prob = lasso_instance(1, with_ref=False)
    tau = 3
    v = prob.eso_vector(tau)
    st = eff.init_state(prob, np.ones(prob.n), tau)
    samp = Sampling(prob.n, tau, 5)
    for _ in range(6):
        eff.efficient_step(prob, st, samp, v)
    before = st.copy()
    S = _clone_sampler(samp).draw()
    th = before.theta
    y = before.z + th**2 * before.w
    g = prob.gradient(y)
    expect = prob.regularizer.prox(g[S], before.z[S], th * before.ratio * v[S])
    eff.efficient_step(prob, st, samp, v)
    np.testing.assert_allclose(st.z[S], expect, rtol=1e-12, atol=1e-14)
    rest = np.setdiff1d(np.arange(prob.n), S)
    for name in ("z", "w", "g", "h"):
        np.testing.assert_array_equal(getattr(st, name)[rest], getattr(before, name)[rest])


@pytest.mark.parametrize("tau", [1, 2])
def test_iterates_and_restart_point_match_dense_oracle(tau):
    prob = lasso_instance(2, n=5, m=12, with_ref=False)
    v = prob.eso_vector(tau)
    x0 = np.random.default_rng(0).standard_normal(prob.n)
    st = eff.init_state(prob, x0, tau)
    dense = oracle.DenseApprox(prob, x0, tau, v)
    samp = Sampling(prob.n, tau, 11)
    for k in range(1, 8):
        S = _clone_sampler(samp).draw()
        eff.efficient_step(prob, st, samp, v)
        dense.step(S)
        np.testing.assert_allclose(eff.materialize_x(st), dense.x, rtol=1e-10, atol=1e-12)
        for sigma in (0.0, 0.37, 1.0):
            np.testing.assert_allclose(eff.efficient_restart_point(st, sigma),
                                       dense.restart_point(sigma), rtol=1e-10, atol=1e-12)


def test_restart_after_one_step_is_x1():
    prob = lasso_instance(3, with_ref=False)
    st = eff.init_state(prob, np.ones(prob.n), 2)
    eff.efficient_step(prob, st, Sampling(prob.n, 2, 1), prob.eso_vector(2))
    np.testing.assert_allclose(eff.efficient_restart_point(st, 0.25), eff.materialize_x(st), rtol=1e-14)


def test_weighted_sum_identity():
    # sum_i alpha_i x_i = -g - h + a z + b w over the explicit history
    prob = lasso_instance(4, n=7, with_ref=False)
    tau = 2
    v = prob.eso_vector(tau)
    st = eff.init_state(prob, np.ones(prob.n), tau)
    samp = Sampling(prob.n, tau, 2)
    theta0, ratio = st.theta0, st.ratio
    table = oracle.gamma_table(theta0, ratio, 201)
    th = table.thetas
    inv_prev = np.concatenate([[(1 - theta0) / theta0**2], 1 / th[:-1] ** 2])
    alphas = np.array([table[i + 1][i] / th[i] ** 2 * inv_prev[i] for i in range(200)])
    xs = [eff.materialize_x(st)]
    for k in range(1, 201):
        eff.efficient_step(prob, st, samp, v)
        xs.append(eff.materialize_x(st))
        if k % 40 == 0:
            # the aggregates after k steps hold alpha_0 .. alpha_{k-1}
            lhs = alphas[:k] @ np.asarray(xs[:k])
            rhs = -st.g - st.h + st.a * st.z + st.b * st.w
            np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * np.abs(lhs).max())


def test_rejects_bad_sigma_and_early_call():
    prob = lasso_instance(0, with_ref=False)
    st = eff.init_state(prob, np.zeros(prob.n), 1)
    with pytest.raises(ValueError):
        eff.efficient_restart_point(st, 0.5)
    with pytest.raises(ValueError):
        eff.efficient_restart_point(st, 1.5)


def test_long_period_warns():
    prob = lasso_instance(0, n=4, m=8, with_ref=False)
    st = eff.init_state(prob, np.zeros(prob.n), 4)
    st.period_counter = int(eff.MAX_PERIOD_SCALE)
    with pytest.warns(RuntimeWarning):
        eff.efficient_step(prob, st, Sampling(prob.n, 4, 0), prob.eso_vector(4))


def test_run_rejects_oversized_period():
    prob = lasso_instance(0, n=4, m=8, with_ref=False)
    with pytest.raises(ValueError):
        run(prob, "approx", ApproxCombination(0.5, 10**7), tau=1)


@pytest.mark.parametrize("seed", range(4))
def test_logistic_engines_agree(seed):
    prob = logistic_instance(seed)
    pol = ApproxCombination.from_estimate(0.05, 1 / prob.n)
    pol = ApproxCombination(pol.sigma, 9)
    a = run(prob, "approx", pol, budget=60, seed=seed, tau=1, engine="efficient")
    b = run(prob, "approx", pol, budget=60, seed=seed, tau=1, engine="naive")
    np.testing.assert_allclose(a.F, b.F, rtol=1e-10)
    for ea, eb in zip(a.events, b.events):
        np.testing.assert_allclose(ea.point, eb.point, rtol=1e-9, atol=1e-12)
