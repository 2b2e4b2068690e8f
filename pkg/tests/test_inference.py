import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fkl import inference, latent_model as lm
from fkl.errors import NonFiniteGradient, NonTerminating
from fkl.gp_math import chol_stable, log_marginal
from fkl.spectral import build_grid, kernel_from_latent
from oracles import amsgrad_recurrence, batch_means_se, conjugate_gaussian_posterior


def small_problem(seed=0, n=10):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.uniform(-3, 3, n))
    y = np.sin(x) + 0.1 * rng.normal(size=n)
    grid = build_grid(x.max() - x.min(), 20)
    hp = lm.HyperParams.default([float(y.mean())], noise_var=0.05)
    g = lm.latent_mean(grid.omegas, hp) + 0.3 * rng.normal(size=20)
    return x, y, grid, hp, g


# ESS -----------------------------------------------------------------------


def random_cov(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    return A @ A.T / n + 0.5 * np.eye(n)


def test_ess_flat_likelihood_keeps_prior():
    K = random_cov(4, 1)
    chol = chol_stable(K)
    state = inference.EssState(np.zeros(4), lambda f: 0.0, np.random.default_rng(2))
    draws = []
    for _ in range(3000):
        state = inference.ess_step(state, chol)
        draws.append(state.current)
    draws = np.array(draws)
    se = batch_means_se(draws)
    assert np.all(np.abs(draws.mean(0)) < 4 * se + 1e-12)
    np.testing.assert_allclose(np.cov(draws.T), K, atol=0.25)


def test_ess_conjugate_gaussian():
    K = random_cov(3, 3)
    m_l = np.array([1.0, -0.5, 0.3])
    S_l = np.diag([0.5, 0.8, 0.3])
    Sinv = np.linalg.inv(S_l)
    like = lambda f: -0.5 * (f - m_l) @ Sinv @ (f - m_l)
    state = inference.EssState(np.zeros(3), like, np.random.default_rng(5))
    chol = chol_stable(K)
    draws = []
    for _ in range(4000):
        state = inference.ess_step(state, chol)
        draws.append(state.current)
    draws = np.array(draws)
    mean, cov = conjugate_gaussian_posterior(np.zeros(3), K, m_l, S_l)
    assert np.all(np.abs(draws.mean(0) - mean) < 4 * batch_means_se(draws))


def test_ess_nan_likelihood_guard():
    with pytest.raises(NonTerminating):
        state = inference.EssState(np.zeros(2), lambda f: np.nan, np.random.default_rng(0))
        inference.ess_step(state, chol_stable(np.eye(2)))


def test_ess_impossible_likelihood_terminates_with_error():
    calls = {"n": 0}

    def like(f):
        calls["n"] += 1
        return 0.0 if calls["n"] == 1 else -np.inf

    state = inference.EssState(np.ones(2), like, np.random.default_rng(0))
    with pytest.raises(NonTerminating):
        inference.ess_step(state, chol_stable(np.eye(2)))


def test_ess_step_is_reproducible():
    def run():
        state = inference.EssState(np.zeros(3), lambda f: -np.sum(f**2), np.random.default_rng(9))
        return inference.ess_chain(state, chol_stable(np.eye(3)), 20).current

    assert np.array_equal(run(), run())


# loss ----------------------------------------------------------------------


def test_loss_phi_finite_at_defaults():
    x, y, grid, hp, _ = small_problem()
    assert np.isfinite(inference.loss_phi(hp, np.zeros(grid.count), grid, (x, y)))


def test_loss_phi_compositional_oracle():
    x, y, grid, hp, g = small_problem(1)
    K = kernel_from_latent(g, grid)(np.abs(x[:, None] - x[None, :]))
    want = -(lm.hyper_log_prior(hp) + lm.latent_log_prior(g, grid, hp)
             + log_marginal(y, hp.gamma0[0], K, hp.noise_var()))
    assert abs(inference.loss_phi(hp, g, grid, (x, y)) - want) < 1e-12 * max(1, abs(want))


def test_loss_phi_noise_moves_only_box_and_data_terms():
    x, y, grid, hp, g = small_problem(2)
    term = inference.DataTerm(x, y, grid)
    hp2 = lm.HyperParams(hp.theta, hp.gamma0, [lm.softplus_inverse(9e-4)])
    d_loss = inference.loss_phi(hp2, g, grid, term) - inference.loss_phi(hp, g, grid, term)
    d_parts = -(lm.hyper_log_prior(hp2) - lm.hyper_log_prior(hp)) - (
        term.log_likelihood(g, hp2.gamma0[0], hp2.noise_var()) - term.log_likelihood(g, hp.gamma0[0], hp.noise_var()))
    assert d_loss == pytest.approx(d_parts, abs=1e-10)
    assert lm.latent_log_prior(g, grid, hp2) == lm.latent_log_prior(g, grid, hp)


def test_loss_multi_single_dim_reduces():
    x, y, grid, hp, g = small_problem(3)
    term = inference.DataTerm(x, y, grid)
    assert inference.loss_phi_multi(hp, [g], [grid], term) == inference.loss_phi(hp, g, grid, term)


def test_loss_multi_task_identical_tasks():
    x, y, grid, hp, g = small_problem(4)
    T = 3
    hpT = lm.HyperParams(hp.theta, np.repeat(hp.gamma0, T), np.repeat(hp.noise_raw, T))
    terms = [inference.DataTerm(x, y, grid) for _ in range(T)]
    total = inference.loss_phi_multi(hpT, [g] * T, [grid] * T, terms)
    data_one = terms[0].log_likelihood(g, hp.gamma0[0], hp.noise_var())
    rest = -(lm.hyper_log_prior(hpT) + T * lm.latent_log_prior(g, grid, hp))
    assert total == pytest.approx(rest - T * data_one, abs=1e-10)


def test_loss_multi_product_kernel_oracle():
    rng = np.random.default_rng(5)
    X = rng.uniform(-2, 2, (12, 2))
    y = np.sin(X[:, 0]) * np.cos(X[:, 1])
    grids = [build_grid(np.ptp(X[:, d]), 15) for d in range(2)]
    hp = lm.HyperParams.default([0.0], noise_var=0.01)
    gs = [lm.latent_mean(gr.omegas, hp) + 0.2 * rng.normal(size=15) for gr in grids]
    term = inference.DataTerm(X, y, grids)
    K = np.ones((12, 12))
    for d in range(2):
        K *= kernel_from_latent(gs[d], grids[d])(np.abs(X[:, d, None] - X[None, :, d]))
    want = -(lm.hyper_log_prior(hp) + sum(lm.latent_log_prior(g, gr, hp) for g, gr in zip(gs, grids))
             + log_marginal(y, 0.0, K, hp.noise_var()))
    assert abs(inference.loss_phi_multi(hp, gs, grids, term) - want) < 1e-12 * abs(want)


def test_data_term_rejects_wrong_sample_count():
    term = inference.DataTerm(np.zeros((3, 2)) + np.arange(3)[:, None], np.zeros(3), build_grid(2.0, 5))
    with pytest.raises(ValueError):
        term.gram([np.zeros(5)])


# gradients -----------------------------------------------------------------


@given(arrays(float, 6, elements=st.floats(-50, 50)))
def test_fd_quadratic(raw):
    grad = inference.grad_loss(raw, lambda v: float(np.sum(v**2)))
    np.testing.assert_allclose(grad, 2 * raw, atol=1e-6)


def test_fd_constant():
    assert np.all(inference.grad_loss(np.ones(4), lambda v: 3.0) == 0.0)


def test_fd_gamma0_matches_analytic():
    x, y, grid, hp, g = small_problem(6)
    term = inference.DataTerm(x, y, grid)
    hp = lm.HyperParams(hp.theta, [0.37], hp.noise_raw)
    grad = inference.grad_loss(hp, lambda h: inference.loss_phi(h, g, grid, term))
    A = term.gram(g) + hp.noise_var() * np.eye(len(y))
    analytic = -np.ones(len(y)) @ np.linalg.solve(A, y - 0.37) + 0.37 / lm.MEAN_PRIOR_VAR
    idx = hp.vector_names().index("gamma0[0]")
    assert abs(grad[idx] - analytic) <= 1e-4 * abs(analytic)


def test_fd_nonfinite_raises():
    with pytest.raises(NonFiniteGradient):
        inference.grad_loss(np.zeros(2), lambda v: np.inf)


# AMSGrad -------------------------------------------------------------------


def test_amsgrad_zero_gradient():
    st0 = inference.OptState.zeros(3)
    p, st1 = inference.amsgrad_step(np.arange(3.0), np.zeros(3), st0)
    assert np.array_equal(p, np.arange(3.0))
    assert np.array_equal(st1.v_hat, st0.v_hat)


def test_amsgrad_first_step_closed_form():
    g = 2.5
    p, _ = inference.amsgrad_step(np.array([1.0]), np.array([g]), inference.OptState.zeros(1))
    want = 1.0 - 0.01 * (0.1 * g) / (np.sqrt(0.001 * g * g) + 1e-8)
    assert p[0] == pytest.approx(want, abs=1e-15)
    assert p[0] == pytest.approx(float(amsgrad_recurrence([1.0], lambda x: [g], 1)[0]), abs=1e-15)


def test_amsgrad_matches_recurrence_on_quadratic():
    grad_fn = lambda x: [2 * (x[0] - 3.0), 4 * (x[1] + 1.0)]
    p = np.array([0.5, 0.5])
    state = inference.OptState.zeros(2)
    for _ in range(50):
        p, state = inference.amsgrad_step(p, np.array(grad_fn(p)), state)
    np.testing.assert_allclose(p, amsgrad_recurrence([0.5, 0.5], grad_fn, 50), atol=1e-13)


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_amsgrad_vhat_nondecreasing(seed):
    rng = np.random.default_rng(seed)
    state = inference.OptState.zeros(4)
    p = np.zeros(4)
    prev = state.v_hat
    for _ in range(100):
        p, state = inference.amsgrad_step(p, rng.normal(size=4) * rng.exponential(), state)
        assert np.all(state.v_hat >= prev)
        prev = state.v_hat
