import math

import numpy as np
import pytest

from kermab.errors import InputError
from kermab.gp import GpState, gamma_bound, info_gain_logdet, observe, posterior, potential_constant, realized_info_gain
from kermab.kernel import KernelSpec

from oracles import dense_posterior, logdet_info_gain, se_kernel

SE = KernelSpec("se", 0.1)
GRID = np.linspace(0, 1, 100)[:, None]
LAM = 0.04


def kf(a, b):
    return se_kernel(a, b, 0.1)


def random_trajectory(rng, t, on_grid=True):
    if on_grid:
        idx = rng.integers(0, len(GRID), size=t)
        return idx, GRID[idx, 0], rng.normal(size=t)
    xs = rng.random(t)
    return None, xs, rng.normal(size=t)


def test_prior():
    assert posterior(GpState(SE, LAM), [0.3]) == (0.0, 1.0)


def test_single_observation():
    s = observe(GpState(SE, LAM), [0.5], 1.0)
    mu, sigma = s.posterior([0.5])
    assert mu == pytest.approx(0.961538461538461538, abs=1e-12)
    assert sigma**2 == pytest.approx(0.0384615384615384615, abs=1e-12)


def test_far_query_reverts_to_prior():
    s = GpState(SE, LAM)
    for x, y in [(0.0, 0.3), (0.05, -1.2), (0.1, 0.8)]:
        s.observe([x], y)
    mu, sigma = s.posterior([5.0])
    assert abs(mu) < 1e-6 and abs(sigma - 1.0) < 1e-6


def test_first_info_gain():
    s = observe(GpState(SE, LAM), [0.2], 0.0)
    # 0.5*ln(26) to 30 digits via mpmath
    assert s.realized_info_gain == pytest.approx(1.62904826901074102, abs=1e-12)
    assert realized_info_gain(GpState(SE, LAM)) == 0.0


def test_repeated_point_is_fine():
    s = GpState(SE, LAM)
    s.observe([0.4], 1.0)
    s.observe([0.4], 1.2)
    mu, sigma = s.posterior([0.4])
    assert math.isfinite(mu) and 0 < sigma < 1


def test_ten_sequential_vs_batch():
    rng = np.random.default_rng(11)
    _, xs, ys = random_trajectory(rng, 10, on_grid=False)
    s = GpState(SE, LAM)
    for x, y in zip(xs, ys):
        s.observe([x], y)
    mu, sigma = s.posterior_batch(GRID)
    mu_ref, sigma_ref = dense_posterior(xs, ys, GRID[:, 0], LAM, kf)
    np.testing.assert_allclose(mu, mu_ref, atol=1e-8, rtol=0)
    np.testing.assert_allclose(sigma, sigma_ref, atol=1e-8, rtol=0)


@pytest.mark.parametrize("seed", range(8))
def test_grid_cache_matches_dense(seed):
    rng = np.random.default_rng(seed)
    t = int(rng.integers(1, 31))
    idx, xs, ys = random_trajectory(rng, t)
    s = GpState(SE, LAM, grid=GRID, store_chol=False)
    for j, y in zip(idx, ys):
        s.observe(None, y, grid_index=int(j))
    mu, sigma = s.grid_posterior()
    mu_ref, sigma_ref = dense_posterior(xs, ys, GRID[:, 0], LAM, kf)
    np.testing.assert_allclose(mu, mu_ref, atol=1e-8, rtol=0)
    np.testing.assert_allclose(sigma, sigma_ref, atol=1e-8, rtol=0)


def test_chol_reconstructs_gram():
    rng = np.random.default_rng(5)
    _, xs, ys = random_trajectory(rng, 8, on_grid=False)
    s = GpState(SE, LAM)
    for x, y in zip(xs, ys):
        s.observe([x], y)
    gram = np.array([[kf(a, b) for b in xs] for a in xs]) + LAM * np.eye(8)
    L = s.chol
    assert np.allclose(np.triu(L, 1), 0)
    np.testing.assert_allclose(L @ L.T, gram, rtol=1e-8)


def test_chol_rebuilt_without_storage():
    s = GpState(SE, LAM, grid=GRID, store_chol=False)
    for j in (3, 40, 41, 3):
        s.observe(None, 0.1 * j, grid_index=j)
    L = s.chol
    xs = GRID[[3, 40, 41, 3], 0]
    gram = np.array([[kf(a, b) for b in xs] for a in xs]) + LAM * np.eye(4)
    np.testing.assert_allclose(L @ L.T, gram, rtol=1e-10)


def test_info_gain_forms_agree():
    rng = np.random.default_rng(9)
    _, xs, ys = random_trajectory(rng, 5, on_grid=False)
    s = GpState(SE, LAM)
    for x, y in zip(xs, ys):
        s.observe([x], y)
    assert s.realized_info_gain == pytest.approx(logdet_info_gain(xs, LAM, kf), abs=1e-8)
    assert info_gain_logdet(SE, LAM, xs) == pytest.approx(logdet_info_gain(xs, LAM, kf), abs=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_variance_monotone_and_capped(seed):
    rng = np.random.default_rng(100 + seed)
    s = GpState(SE, LAM, grid=GRID, store_chol=False)
    prev = s.grid_posterior()[1]
    gains = [0.0]
    for _ in range(40):
        s.observe(None, rng.normal(), grid_index=int(rng.integers(100)))
        sigma = s.grid_posterior()[1]
        assert np.all(sigma <= prev + 1e-10)
        assert np.all((sigma >= 0) & (sigma <= 1))
        prev = sigma
        gains.append(s.realized_info_gain)
    assert np.all(np.diff(gains) >= 0)


@pytest.mark.parametrize("lam", [0.04, 0.5, 2.0])
def test_elliptical_potential(lam):
    rng = np.random.default_rng(7)
    s = GpState(SE, lam, grid=GRID, store_chol=False)
    for _ in range(60):
        s.observe(None, rng.normal(), grid_index=int(rng.integers(100)))
    c = potential_constant(lam)
    var = np.array(s.sampled_variances)
    assert var.sum() <= 2 * lam * c * s.realized_info_gain + 1e-8
    assert np.sqrt(var).sum() <= math.sqrt(2 * len(var) * lam * c * s.realized_info_gain) + 1e-6


def test_uncorrected_potential_constant_fails_for_small_lambda():
    # s/lam <= 2 log(1 + s/lam) breaks once s/lam exceeds ~2.51, e.g. lam=0.04, s=1
    x = 1 / 0.04
    assert x > 2 * math.log1p(x)
    assert x <= potential_constant(0.04) * math.log1p(x) + 1e-12


def test_offgrid_needs_chol():
    s = GpState(SE, LAM, grid=GRID, store_chol=False)
    with pytest.raises(InputError):
        s.observe([0.123], 1.0)


def test_dimension_mismatch():
    s = GpState(SE, LAM, dim=1)
    with pytest.raises(InputError):
        s.posterior([0.1, 0.2])


def test_copy_is_independent():
    s = GpState(SE, LAM, grid=GRID)
    s.observe(None, 1.0, grid_index=10)
    c = s.copy()
    c.observe(None, -1.0, grid_index=50)
    assert s.t == 1 and c.t == 2
    assert s.grid_posterior()[0][50] != c.grid_posterior()[0][50]


def test_capacity_growth():
    s = GpState(SE, LAM, grid=GRID, capacity=2)
    rng = np.random.default_rng(0)
    idx = rng.integers(0, 100, size=20)
    ys = rng.normal(size=20)
    for j, y in zip(idx, ys):
        s.observe(None, y, grid_index=int(j))
    mu_ref, _ = dense_posterior(GRID[idx, 0], ys, GRID[:, 0], LAM, kf)
    np.testing.assert_allclose(s.grid_posterior()[0], mu_ref, atol=1e-8)
    np.testing.assert_allclose(s.posterior_batch(GRID)[0], mu_ref, atol=1e-8)


class TestGammaBound:
    def test_se_t1(self):
        # (ln 2)^2 via mpmath
        assert gamma_bound("se", 1, 1) == pytest.approx(0.480453013918201425, abs=1e-12)

    def test_zero_constant(self):
        assert gamma_bound("se", 50, 2, c_gamma=0) == 0
        assert gamma_bound("matern", 50, 2, 2.5, c_gamma=0) == 0

    def test_matern_t64(self):
        # 64^(1/6) * ln(65)^(5/6) via mpmath
        assert gamma_bound("matern", 64, 1, 2.5) == pytest.approx(6.57946544111835327, abs=1e-10)

    @pytest.mark.parametrize("family,nu,d", [("se", 2.5, 1), ("se", 2.5, 3), ("matern", 2.5, 1), ("matern", 0.5, 2)])
    def test_monotone(self, family, nu, d):
        vals = [gamma_bound(family, t, d, nu) for t in range(0, 2000)]
        assert np.all(np.diff(vals) >= 0)
