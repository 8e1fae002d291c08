import numpy as np
import pytest

from kermab.envmodel import Environment, inst_regret, make_environment, reward, sample_test_functions, uniform_grid
from kermab.errors import InputError, NumericalError
from kermab.kernel import KernelSpec, eval_kernel

SE = KernelSpec("se", 0.1)
GRID = uniform_grid(100)


def test_grid():
    assert GRID.m == 100 and GRID.d == 1
    assert GRID.points[0, 0] == 0.0 and GRID.points[-1, 0] == 1.0
    with pytest.raises(InputError):
        uniform_grid(1)


def test_sampling_deterministic():
    a = sample_test_functions(SE, GRID, 4, seed=12)
    b = sample_test_functions(SE, GRID, 4, seed=12)
    assert a.shape == (4, 100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_test_functions(SE, GRID, 4, seed=13))


def test_adding_agents_keeps_existing_rows():
    a = sample_test_functions(SE, GRID, 3, seed=2)
    b = sample_test_functions(SE, GRID, 5, seed=2)
    assert np.array_equal(a, b[:3])


def test_sample_moments():
    draws = sample_test_functions(SE, GRID, 200, seed=0)
    assert 0.8 <= draws.var(axis=0).mean() <= 1.2
    corr = np.mean([np.corrcoef(draws[:, j], draws[:, j + 1])[0, 1] for j in range(0, 99, 7)])
    assert corr == pytest.approx(eval_kernel(SE, 0.0, 1 / 99), abs=0.1)


def test_sampling_breakdown_reports_jitter():
    pts = uniform_grid(400)
    with pytest.raises(NumericalError, match="jitter"):
        sample_test_functions(KernelSpec("se", 2.0), pts, 1, jitter=0.0, seed=0)


def test_global_function_and_optimum():
    env = make_environment(SE, GRID, 6, 0.2, 1e-8, seed=3)
    brute = np.array([sum(env.locals[i, j] for i in range(6)) / 6 for j in range(100)])
    np.testing.assert_allclose(env.global_vals, brute, rtol=0, atol=1e-15)
    assert env.opt_value == env.global_vals.max()
    assert env.opt_index == int(np.flatnonzero(env.global_vals == env.global_vals.max())[0])


def test_tied_optimum_lowest_index():
    locals_ = np.array([[0.0, 1.0, 1.0, 0.5]])
    env = Environment(uniform_grid(4), locals_, eta=0.0)
    assert env.opt_index == 1


def test_noiseless_reward():
    env = make_environment(SE, GRID, 2, 0.0, 1e-8, seed=1)
    assert reward(env, 1, 17) == env.locals[1, 17]


def test_reward_mean():
    env = make_environment(SE, GRID, 2, 0.2, 1e-8, seed=1)
    ys = np.array([env.reward(0, 42) for _ in range(10_000)])
    assert abs(ys.mean() - env.locals[0, 42]) <= 3 * 0.2 / 100


def test_reward_streams_deterministic():
    e1 = make_environment(SE, GRID, 3, 0.2, 1e-8, seed=9)
    e2 = make_environment(SE, GRID, 3, 0.2, 1e-8, seed=9)
    assert [e1.reward(i % 3, i) for i in range(30)] == [e2.reward(i % 3, i) for i in range(30)]


def test_agent_streams_independent():
    e1 = make_environment(SE, GRID, 3, 0.2, 1e-8, seed=9)
    e2 = make_environment(SE, GRID, 3, 0.2, 1e-8, seed=9)
    for _ in range(5):
        e2.reward(1, 0)  # drain agent 1 only
    assert e1.reward(0, 5) == e2.reward(0, 5)


class TestRegret:
    env = make_environment(SE, GRID, 4, 0.2, 1e-8, seed=21)

    def test_at_optimum(self):
        assert inst_regret(self.env, [self.env.opt_index] * 4) == 0.0

    def test_common_action(self):
        j = (self.env.opt_index + 30) % 100
        assert inst_regret(self.env, [j] * 4) == pytest.approx(self.env.opt_value - self.env.global_vals[j], abs=1e-15)

    def test_mixed_is_mean_of_single(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            acts = rng.integers(0, 100, size=4)
            single = [self.env.opt_value - self.env.global_vals[a] for a in acts]
            assert inst_regret(self.env, acts) == pytest.approx(sum(single) / 4, abs=1e-12)
            assert inst_regret(self.env, acts) >= 0

    def test_wrong_length(self):
        with pytest.raises(InputError):
            inst_regret(self.env, [0, 1])
