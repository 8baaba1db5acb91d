import math

import numpy as np
import pytest

from esrlab import expr as ex
from esrlab.autodiff import eval_with_grad
from esrlab.dataset import Dataset
from esrlab.objectives import MnrParams, mnr_loglik, mse

from oracles import mnr_quadrature


def test_mse_constant_is_variance(synth):
    value = mse(ex.parse("p1"), [float(np.mean(synth.y))], synth)
    assert value == pytest.approx(float(np.var(synth.y)), rel=1e-12)


def test_mse_perfect_fit_is_zero(linear_data):
    assert mse(ex.parse("p1 * x + p2"), [1.75, -0.5], linear_data) == 0.0


def test_mse_nonfinite_propagates():
    data = Dataset(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
    assert not math.isfinite(mse(ex.parse("1.0 / x"), [], data))


def test_mnr_requires_uncertainties(linear_data):
    with pytest.raises(ValueError):
        mnr_loglik(ex.parse("p1 * x"), MnrParams((1.0,), 0.0, 1.0, 0.1),
                   linear_data)


def test_mnr_params_validation():
    with pytest.raises(ValueError):
        MnrParams((), 0.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        MnrParams((), 0.0, 1.0, -0.1)


def _random_case(rng, n):
    return Dataset(rng.uniform(-2, 2, n), rng.uniform(-2, 2, n),
                   rng.uniform(0.05, 0.5, n), rng.uniform(0.05, 0.5, n))


def test_mnr_matches_quadrature_oracle():
    rng = np.random.default_rng(19)
    e = ex.parse("p1 * x + p2 * |x| ^ 2.0")
    for _ in range(25):
        data = _random_case(rng, int(rng.integers(3, 9)))
        p = MnrParams(tuple(rng.uniform(-2, 2, 2)), float(rng.uniform(-1, 1)),
                      float(rng.uniform(0.3, 2.0)),
                      float(rng.uniform(0.0, 0.5)))
        mine = mnr_loglik(e, p, data)
        f, g = eval_with_grad(e, p.theta, data.x, wrt="x")
        oracle = mnr_quadrature(g[0], f - g[0] * data.x, data, p.mu, p.omega,
                                p.sigma_int)
        assert mine == pytest.approx(oracle, rel=1e-6)


def test_mnr_linear_sigma_x_zero_closed_form():
    # with sigma_x = 0 the marginal reduces to a Gaussian likelihood with
    # variance sigma_y^2 + sigma_int^2 plus the hyperprior term on x_i
    rng = np.random.default_rng(23)
    n = 12
    data = Dataset(rng.uniform(-2, 2, n), rng.uniform(-2, 2, n),
                   np.zeros(n), rng.uniform(0.1, 0.4, n))
    a, b = 0.7, -0.3
    p = MnrParams((a, b), 0.4, 1.3, 0.2)
    e = ex.parse("p1 * x + p2")
    mine = mnr_loglik(e, p, data)
    s2 = data.sigma_y ** 2 + p.sigma_int ** 2
    resid = a * data.x + b - data.y
    direct = float(
        -0.5 * np.sum(resid ** 2 / s2)
        - 0.5 * np.sum((data.x - p.mu) ** 2 / p.omega ** 2)
        - 0.5 * np.sum(np.log(s2 * p.omega ** 2)))
    assert mine == pytest.approx(direct, rel=1e-12)


def test_mnr_affine_exact_vs_oracle():
    # for affine f the linearization is global, so the quadrature oracle
    # agrees to tight tolerance
    rng = np.random.default_rng(29)
    e = ex.parse("p1 * x + p2")
    for _ in range(5):
        data = _random_case(rng, 6)
        p = MnrParams(tuple(rng.uniform(-2, 2, 2)), float(rng.uniform(-1, 1)),
                      float(rng.uniform(0.4, 1.5)),
                      float(rng.uniform(0.0, 0.3)))
        f, g = eval_with_grad(e, p.theta, data.x, wrt="x")
        oracle = mnr_quadrature(g[0], f - g[0] * data.x, data, p.mu, p.omega,
                                p.sigma_int)
        assert mnr_loglik(e, p, data) == pytest.approx(oracle, rel=1e-9)


def test_mnr_permutation_invariant():
    rng = np.random.default_rng(31)
    data = _random_case(rng, 10)
    perm = rng.permutation(10)
    shuffled = Dataset(data.x[perm], data.y[perm], data.sigma_x[perm],
                       data.sigma_y[perm])
    e = ex.parse("p1 * x + p2")
    p = MnrParams((0.5, 0.1), 0.0, 1.0, 0.1)
    assert mnr_loglik(e, p, data) == pytest.approx(
        mnr_loglik(e, p, shuffled), rel=1e-12)


def test_mnr_sigma_int_sensitivity_matches_finite_differences():
    # analytic d logL / d log sigma_int (derived from the closed form)
    # against central differences
    rng = np.random.default_rng(37)
    data = _random_case(rng, 8)
    e = ex.parse("p1 * x + p2")
    p = MnrParams((0.6, -0.2), 0.1, 0.9, 0.25)

    f, g = eval_with_grad(e, p.theta, data.x, wrt="x")
    A = g[0]
    B = f - A * data.x
    sx2 = data.sigma_x ** 2
    s2 = data.sigma_y ** 2 + p.sigma_int ** 2
    w2 = p.omega ** 2
    den = A * A * w2 * sx2 + s2 * (w2 + sx2)
    r_obs = A * data.x + B - data.y
    r_mu = A * p.mu + B - data.y
    num1 = w2 * r_obs ** 2 + sx2 * r_mu ** 2
    num2 = (data.x - p.mu) ** 2
    dden_ds2 = w2 + sx2
    dlog_ds2 = float(np.sum(
        0.5 * num1 * dden_ds2 / den ** 2
        - 0.5 * num2 * (den - s2 * dden_ds2) / den ** 2
        - 0.5 * dden_ds2 / den))
    analytic = dlog_ds2 * 2 * p.sigma_int ** 2  # ds2/dlog(sigma) = 2 sigma^2

    h = 1e-6
    up = MnrParams(p.theta, p.mu, p.omega, p.sigma_int * math.exp(h))
    dn = MnrParams(p.theta, p.mu, p.omega, p.sigma_int * math.exp(-h))
    fd = (mnr_loglik(e, up, data) - mnr_loglik(e, dn, data)) / (2 * h)
    assert analytic == pytest.approx(fd, rel=1e-5)
