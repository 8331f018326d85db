import numpy as np
import pytest

from aderdg import kernels
from aderdg.systems import make_system

from test_systems import random_elastic_states, random_euler_states


class TestTransposition:
    @pytest.mark.parametrize("width", [1, 3, 8, 64])
    @pytest.mark.parametrize("n_vars", [1, 5, 9, 64])
    def test_round_trip_identity(self, width, n_vars):
        rng = np.random.default_rng(width * 100 + n_vars)
        block = rng.uniform(-1, 1, (width, n_vars))
        back = kernels.soa_to_aos(kernels.aos_to_soa(block))
        assert np.array_equal(back, block)

    def test_soa_is_quantity_major(self):
        block = np.arange(12.0).reshape(4, 3)  # 4 points, 3 quantities
        soa = kernels.aos_to_soa(block)
        assert soa.shape == (3, 4)
        np.testing.assert_array_equal(soa[0], [0.0, 3.0, 6.0, 9.0])
        assert soa.flags.c_contiguous

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError):
            kernels.aos_to_soa(np.zeros(5))


class TestBlockSlices:
    def test_even_split(self):
        assert list(kernels.block_slices(8, 4)) == [slice(0, 4), slice(4, 8)]

    def test_ragged_tail(self):
        got = list(kernels.block_slices(10, 4))
        assert got == [slice(0, 4), slice(4, 8), slice(8, 10)]

    def test_single_short_block(self):
        assert list(kernels.block_slices(3, 8)) == [slice(0, 3)]

    def test_rejects_zero_width(self):
        with pytest.raises(ValueError):
            list(kernels.block_slices(4, 0))


def _states_and_grads(name, dim, count, seed):
    rng = np.random.default_rng(seed)
    if name == "euler":
        states = random_euler_states(dim, count, seed)
    elif name == "elasticity-di":
        states = random_elastic_states(count, seed)
    else:
        states = rng.uniform(-2, 2, (count, 1))
    system = make_system(name, dim)
    grads = rng.uniform(-1, 1, (count, dim, system.n_vars))
    return system, states, grads


class TestBlockedEvaluation:
    @pytest.mark.parametrize("name,dim", [
        ("advection", 1), ("advection", 3), ("euler", 2), ("euler", 3),
        ("elasticity-di", 2),
    ])
    @pytest.mark.parametrize("width", [1, 4, 8])
    def test_bitwise_equal_to_scalar_loop(self, name, dim, width):
        system, states, grads = _states_and_grads(name, dim, 37, seed=width)
        blocked = kernels.eval_blocked(states, system, grads, width=width)
        scalar = kernels.eval_scalar(states, system, grads)
        for got, want in zip(blocked, scalar):
            assert np.array_equal(got, want)  # 0 ulp

    def test_large_population_bitwise(self):
        system, states, grads = _states_and_grads("euler", 3, 100_000, seed=1234)
        blocked = kernels.eval_blocked(states, system, grads, width=8)
        scalar = kernels.eval_scalar(states, system, grads)
        for got, want in zip(blocked, scalar):
            assert np.array_equal(got, want)

    def test_ragged_tail_count(self):
        system, states, grads = _states_and_grads("euler", 2, 13, seed=9)
        flux, ncp, source, ok = kernels.eval_blocked(states, system, grads, width=8)
        assert flux.shape == (13, 2, 4)
        assert ok.shape == (13,)

    def test_per_lane_inadmissible_flags(self):
        system = make_system("euler", 2)
        states = random_euler_states(2, 8, seed=2)
        states[3, 0] = -1.0          # negative density
        states[6, -1] = 0.0          # zero total energy -> negative pressure
        *_, ok = kernels.eval_blocked(states, system, None, width=4)
        assert ok.tolist() == [True, True, True, False, True, True, False, True]

    def test_ncp_system_requires_gradients(self):
        system = make_system("elasticity-di", 2)
        states = random_elastic_states(4, seed=5)
        with pytest.raises(ValueError):
            kernels.eval_block(kernels.aos_to_soa(states), system, None)


class TestThroughputMetric:
    def test_documented_example(self):
        # 10 s over 1000 elements, 100 steps, N=3, d=3 -> 1.5625 us per DOF.
        got = kernels.throughput_per_dof(10.0, 1000, 100, 3, 3)
        assert got == pytest.approx(1.5625, rel=1e-12)

    def test_rejects_empty_run(self):
        with pytest.raises(ValueError):
            kernels.throughput_per_dof(1.0, 0, 10, 3, 3)
