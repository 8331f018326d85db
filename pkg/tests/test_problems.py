"""Initial-condition builders: frozen point values and invariances."""

import numpy as np
import pytest

from aderdg import make_system
from aderdg.problems import (PROBLEMS, advected_sine, blast_2d, build_problem,
                             constant_state, elastic_pwave, gaussian_pulse,
                             isentropic_vortex, sod_shock_tube, step_function)
from aderdg.systems import DiffuseInterfaceElasticity as E


def euler_primitives(state, gamma=1.4):
    rho = state[..., 0]
    vel = state[..., 1:-1] / rho[..., None]
    kin = 0.5 * rho * np.sum(vel * vel, axis=-1)
    p = (gamma - 1.0) * (state[..., -1] - kin)
    return rho, vel, p


class TestVortex:
    def setup_method(self):
        self.system = make_system("euler", 2)
        self.ic, self.exact = isentropic_vortex(self.system)

    def test_far_field_is_free_stream(self):
        corner = np.array([[0.0, 0.0]])
        state = self.ic(corner)[0]
        # (rho, u, v, p) = (1, 1, 1, 1): energy 1/0.4 + 0.5 * 2 = 3.5
        np.testing.assert_allclose(state, [1.0, 1.0, 1.0, 3.5], atol=1e-9)

    def test_center_moves_with_free_stream(self):
        center = np.array([[5.0, 5.0]])
        state0 = self.ic(center)[0]
        rho, vel, p = euler_primitives(state0)
        np.testing.assert_allclose(vel, 1.0, atol=1e-14)
        assert rho < 1.0 and p < 1.0
        moved = self.exact(np.array([[7.0, 7.0]]), 2.0)[0]
        np.testing.assert_allclose(moved, state0, rtol=0, atol=1e-14)

    def test_entropy_is_uniform(self):
        rng = np.random.default_rng(11)
        pts = rng.uniform(0.0, 10.0, size=(40, 2))
        rho, _, p = euler_primitives(self.ic(pts))
        np.testing.assert_allclose(p, rho ** self.system.gamma,
                                   rtol=1e-13, atol=0)

    def test_exact_at_zero_matches_ic(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(0.0, 10.0, size=(25, 2))
        np.testing.assert_array_equal(self.ic(pts), self.exact(pts, 0.0))

    def test_periodic_return_after_one_domain_crossing(self):
        rng = np.random.default_rng(5)
        pts = rng.uniform(0.0, 10.0, size=(25, 2))
        np.testing.assert_allclose(self.exact(pts, 10.0), self.ic(pts),
                                   rtol=0, atol=1e-13)

    def test_displacement_wraps_into_box(self):
        # t = 6 puts the centre at 11 = 1 (mod 10)
        probe = np.array([[0.5, 0.5]])
        shifted = np.array([[4.5, 4.5]])
        np.testing.assert_allclose(self.exact(probe, 6.0),
                                   self.ic(shifted), rtol=0, atol=1e-14)

    def test_velocity_circulates(self):
        right = self.ic(np.array([[6.0, 5.0]]))[0]
        _, vel, _ = euler_primitives(right)
        assert vel[0] == pytest.approx(1.0, abs=1e-12)
        assert vel[1] > 1.0

    def test_rejects_wrong_system(self):
        with pytest.raises(ValueError, match="2-D Euler"):
            isentropic_vortex(make_system("advection", 2))


class TestAdvectionCases:
    def test_sine_translation(self):
        sys1 = make_system("advection", 1)
        ic, exact = advected_sine(sys1)
        x = np.array([[0.3]])
        assert ic(x)[0, 0] == pytest.approx(np.sin(0.6 * np.pi), abs=1e-15)
        assert exact(x, 0.25)[0, 0] == pytest.approx(
            np.sin(2.0 * np.pi * 0.05), abs=1e-15)

    def test_sine_uses_system_velocity(self):
        sys1 = make_system("advection", 1, velocity=[2.0])
        _, exact = advected_sine(sys1)
        x = np.array([[0.9]])
        assert exact(x, 0.2)[0, 0] == pytest.approx(np.sin(np.pi),
                                                    abs=1e-15)

    def test_pulse_peak_translates(self):
        sys1 = make_system("advection", 1)
        ic, exact = gaussian_pulse(sys1, center=0.25, width=0.08,
                                   amplitude=2.0)
        assert ic(np.array([[0.25]]))[0, 0] == pytest.approx(2.0)
        assert exact(np.array([[0.55]]), 0.3)[0, 0] == pytest.approx(2.0)
        half = exact(np.array([[0.25 + 0.08]]), 0.0)[0, 0]
        assert half == pytest.approx(2.0 * np.exp(-0.5), abs=1e-15)

    def test_step_values(self):
        sys1 = make_system("advection", 1)
        ic, exact = step_function(sys1, position=0.5, left=2.0, right=-1.0)
        vals = ic(np.array([[0.2], [0.8]]))
        assert vals.shape == (2, 1)
        assert vals[0, 0] == 2.0 and vals[1, 0] == -1.0
        assert exact is None


class TestEulerCases:
    def test_sod_states(self):
        sys1 = make_system("euler", 1)
        ic, exact = sod_shock_tube(sys1)
        vals = ic(np.array([[0.25], [0.75]]))
        # e = p/(gamma-1): 2.5 on the left, 0.25 on the right
        np.testing.assert_allclose(vals[0], [1.0, 0.0, 2.5], atol=1e-15)
        np.testing.assert_allclose(vals[1], [0.125, 0.0, 0.25], atol=1e-15)
        assert exact is None

    def test_blast_energy_deposition(self):
        sys2 = make_system("euler", 2)
        ic, _ = blast_2d(sys2, r0=0.1, e0=1.0, p_ambient=1e-14)
        inside = ic(np.array([[0.05, 0.0]]))[0]
        outside = ic(np.array([[0.5, 0.5]]))[0]
        p_in = 0.4 / (np.pi * 0.01)
        np.testing.assert_allclose(inside, [1.0, 0.0, 0.0, p_in / 0.4],
                                   rtol=1e-15)
        np.testing.assert_allclose(outside, [1.0, 0.0, 0.0, 2.5e-14],
                                   rtol=1e-15)

    def test_blast_is_rotation_symmetric(self):
        sys2 = make_system("euler", 2)
        ic, _ = blast_2d(sys2)
        rng = np.random.default_rng(2)
        pts = rng.uniform(-1.0, 1.0, size=(30, 2))
        rot = np.stack([-pts[..., 1], pts[..., 0]], axis=-1)
        np.testing.assert_array_equal(ic(pts)[..., 0], ic(rot)[..., 0])
        np.testing.assert_array_equal(ic(pts)[..., 3], ic(rot)[..., 3])


class TestElasticPWave:
    def test_plane_wave_relations_at_peak(self):
        sysE = make_system("elasticity-di", 2)
        ic, _ = elastic_pwave(sysE, lam=2.0, mu=1.0, rho=1.0,
                              amplitude=1e-3, pulse_center=0.3)
        state = ic(np.array([[0.3, 0.1]]))[0]
        cp = 2.0  # sqrt((2 + 2*1)/1)
        vx = state[E.AVX] / state[E.ALPHA]
        assert vx == pytest.approx(1e-3, rel=1e-15)
        assert state[E.SXX] == pytest.approx(-1.0 * cp * 1e-3, abs=1e-18)
        assert state[E.SYY] == pytest.approx(0.5 * state[E.SXX], abs=1e-18)
        assert state[E.SXY] == 0.0 and state[E.AVY] == 0.0
        assert state[E.ALPHA] == pytest.approx(1.0, abs=1e-6)
        assert (state[E.LAM], state[E.MU], state[E.RHO]) == (2.0, 1.0, 1.0)

    def test_volume_fraction_transition(self):
        sysE = make_system("elasticity-di", 2)
        ic, _ = elastic_pwave(sysE, alpha_min=1e-3, interface=0.7,
                              interface_width=0.05)
        vals = ic(np.array([[0.45, 0.0], [0.7, 0.0], [0.99, 0.0]]))
        assert vals[0, E.ALPHA] == pytest.approx(1.0, abs=1e-4)
        assert vals[1, E.ALPHA] == pytest.approx(0.5, abs=1e-3)
        assert vals[2, E.ALPHA] == pytest.approx(1e-3, rel=1e-2)
        # the ramp narrows with its width parameter
        ic2, _ = elastic_pwave(sysE, interface_width=0.01)
        sharp = ic2(np.array([[0.75, 0.0]]))[0, E.ALPHA]
        wide = ic(np.array([[0.75, 0.0]]))[0, E.ALPHA]
        assert sharp < 0.1 * wide
        # material constants continue across the interface
        np.testing.assert_array_equal(vals[0, E.LAM:], vals[2, E.LAM:])
        with pytest.raises(ValueError, match="width"):
            elastic_pwave(sysE, interface_width=0.0)


class TestConstantState:
    def test_defaults_per_system(self):
        for name, dim in (("advection", 3), ("euler", 2),
                          ("elasticity-di", 2)):
            sysd = make_system(name, dim)
            ic, exact = constant_state(sysd)
            pts = np.zeros((4, dim))
            vals = ic(pts)
            assert vals.shape == (4, sysd.n_vars)
            assert np.ptp(vals, axis=0).max() == 0.0
            np.testing.assert_array_equal(exact(pts, 17.3), vals)

    def test_custom_values_and_length_check(self):
        sys1 = make_system("advection", 1)
        ic, _ = constant_state(sys1, values=[4.0])
        assert ic(np.zeros((2, 1)))[0, 0] == 4.0
        with pytest.raises(ValueError, match="entries"):
            constant_state(sys1, values=[1.0, 2.0])


class TestRegistry:
    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown problem"):
            build_problem("nope", make_system("advection", 1))

    def test_wrong_system(self):
        with pytest.raises(ValueError, match="needs the euler system"):
            build_problem("vortex", make_system("advection", 2))

    def test_wrong_dimension(self):
        with pytest.raises(ValueError, match="1-D"):
            build_problem("sod", make_system("euler", 2))

    def test_build_passes_parameters(self):
        ic, _ = build_problem("step", make_system("advection", 1),
                              position=0.25)
        assert ic(np.array([[0.3]]))[0, 0] == 0.0

    def test_entries_are_well_formed(self):
        for name, spec in PROBLEMS.items():
            assert callable(spec.builder)
            assert spec.suggested_tend > 0.0
            if spec.extents is not None:
                assert spec.dim == len(spec.extents)
