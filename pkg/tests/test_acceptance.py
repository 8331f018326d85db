"""End-to-end acceptance runs for the solver.

Each test states its wall-clock target in a trailing print; targets are
informational (hardware-dependent), the numerical assertions are hard.
Published fine-grid error magnitudes live in FROZEN constants below and
are compared softly (factor 3) with a printed verdict.
"""

import dataclasses
import time

import numpy as np
import pytest

from riemann_exact import solution_on_grid

from aderdg import (CartesianMesh, Simulation, basis_tables, cli,
                    convergence, corrector, default_cfl, kernels,
                    make_system, output, predictor)
from aderdg.config import assemble, parse_config
from aderdg.problems import build_problem
from aderdg.systems import DiffuseInterfaceElasticity


def report(label, wct, target):
    print(f"[wct] {label}: {wct:.1f}s (target {target})")


# published L1 density errors for the smooth-vortex study, per degree:
# (coarse grid, fine grid, coarse L1, fine L1)
PUBLISHED_VORTEX_L1 = {
    3: (25, 50, 5.77e-04, 2.75e-05),
    4: (20, 30, 1.54e-04, 1.79e-05),
    5: (10, 20, 9.72e-04, 1.56e-05),
}

SOD_LEFT = (1.0, 0.0, 1.0)
SOD_RIGHT = (0.125, 0.0, 0.1)


class TestVortexConvergence:
    """Smooth 2-D vortex, unlimited scheme: observed L1 orders."""

    @pytest.mark.parametrize("degree,bound", [(3, 3.8), (4, 4.8), (5, 5.5)])
    def test_observed_order_meets_bound(self, degree, bound):
        coarse, fine, pub_coarse, pub_fine = PUBLISHED_VORTEX_L1[degree]
        cfg = parse_config(f"ic = vortex\nN = {degree}\n")
        start = time.perf_counter()
        rows = convergence.run_study(cfg, (coarse, fine))
        wct = time.perf_counter() - start
        assert all("error" not in row for row in rows)
        order = rows[1]["o1"]
        assert order >= bound, f"L1 order {order:.3f} below {bound}"
        for row, published in ((rows[0], pub_coarse), (rows[1], pub_fine)):
            ratio = row["l1"] / published
            verdict = "soft pass" if 1.0 / 3.0 <= ratio <= 3.0 else \
                "soft FAIL (reported, not asserted)"
            print(f"N={degree} grid {row['grid']}: L1 {row['l1']:.3e} vs "
                  f"published {published:.2e}, ratio {ratio:.2f} -> {verdict}")
        report(f"vortex order study N={degree}", wct, "< 10 min for N=3")


class TestPredictorTermination:
    """The space-time fixed point is reached in degree+1 sweeps."""

    @pytest.mark.parametrize("degree", range(6))
    def test_defect_at_roundoff_after_degree_plus_one_sweeps(self, degree):
        start = time.perf_counter()
        system = make_system("advection", 1)
        mesh = CartesianMesh([(0.0, 1.0)], [8])
        sim = Simulation(mesh, system, degree, default_cfl(degree))
        rng = np.random.default_rng(11)
        coeff = rng.standard_normal((3, 2))

        def smooth(points):
            x = points[..., 0]
            field = np.ones_like(x)
            for k, (a, b) in enumerate(coeff, start=1):
                field = field + 0.3 / k * (
                    a * np.sin(2 * np.pi * k * x)
                    + b * np.cos(2 * np.pi * k * x))
            return field[..., None]

        sim.project_initial_condition(smooth)
        dt = sim.max_timestep()
        # an unreachable tolerance forces every sweep to run
        result = predictor.picard_solve(
            sim.u, system, mesh.spacings, dt, sim.tables,
            tol=0.0, max_iter=degree + 1)
        assert result.iterations == degree + 1
        defect = predictor.weak_form_defect(
            result.q, sim.u, system, mesh.spacings, dt, sim.tables)
        assert np.max(defect) <= 1e-12
        report(f"fixed-point termination N={degree}",
               time.perf_counter() - start, "< 1 s")


class TestFreeStream:
    """Constant states stay constant to roundoff over many steps."""

    @pytest.mark.parametrize("name", ["euler", "elasticity-di"])
    def test_constant_state_preserved_50_steps(self, name):
        start = time.perf_counter()
        system = make_system(name, 2)
        mesh = CartesianMesh([(0.0, 1.0), (0.0, 1.0)], [8, 8])
        sim = Simulation(mesh, system, 3, default_cfl(3))
        ic, _ = build_problem("constant", system)
        sim.project_initial_condition(ic)
        u0 = sim.u.copy()
        sim.run(float("inf"), max_steps=50)
        assert sim.step_count == 50
        assert np.max(np.abs(sim.u - u0)) <= 1e-12
        report(f"free stream {name}", time.perf_counter() - start, "< 10 s")


class TestConservation:
    """Domain totals of conserved quantities are flat in time."""

    @pytest.mark.parametrize("limited", [False, True])
    def test_vortex_totals_drift_100_steps(self, limited):
        start = time.perf_counter()
        text = "ic = vortex\nN = 3\ncells = 25\n"
        if limited:
            text += "limiter = on\n"
        sim, _ = assemble(parse_config(text))
        before = sim.conserved_totals()
        sim.run(float("inf"), max_steps=100)
        after = sim.conserved_totals()
        drift = np.max(np.abs(after - before) / np.abs(before))
        assert drift <= 1e-11
        if limited:
            fractions = [rec["limited_fraction"] for rec in sim.history]
            print(f"limited fraction over run: max {max(fractions):.4f}")
        report(f"conservation limiter={limited}",
               time.perf_counter() - start, "< 5 min")


class TestShockRobustness:
    """1-D shock tube against the exact solution of the jump problem."""

    def test_sod_density_error_and_admissibility(self):
        start = time.perf_counter()
        sim, tend = assemble(parse_config(
            "ic = sod\nN = 3\ncells = 100\nlimiter = on\n"))
        sim.run(tend)
        assert np.all(np.isfinite(sim.u))
        assert np.all(sim.system.admissible(sim.u))
        x = sim.mesh.node_coords(sim.tables)[..., 0]
        exact = solution_on_grid(SOD_LEFT, SOD_RIGHT, x, tend, x0=0.5)
        h = sim.mesh.spacings[0]
        l1 = h * np.sum(np.abs(sim.u[..., 0] - exact[..., 0])
                        * sim.tables.weights[None, :])
        assert l1 <= 1e-2
        report("sod shock tube", time.perf_counter() - start, "< 30 s")


def quarter_turn(field):
    """Value map of a +90 degree rotation about the grid centre."""
    n = field.shape[0]
    assert field.shape[1] == n
    return field[:, ::-1].T  # out[i, j] = field[j, n-1-i]


class TestBlastRobustness:
    """Near-vacuum ambient blast: completes, limits locally, stays
    four-fold symmetric."""

    def test_blast_run_symmetry_and_limited_fraction(self):
        start = time.perf_counter()
        sim, tend = assemble(parse_config(
            "ic = blast\nN = 3\ncells = 40\nlimiter = on\n"
            "predictor = primitive\n"))
        sim.run(tend)
        wct = time.perf_counter() - start
        assert np.all(np.isfinite(sim.u))
        assert np.all(sim.system.admissible(sim.u))

        fractions = [rec["limited_fraction"] for rec in sim.history]
        post = fractions[10:]
        assert post, "run too short to split off a transient"
        assert max(post) < 0.20
        print(f"limited fraction: transient max {max(fractions[:10]):.3f}, "
              f"after max {max(post):.3f}")

        # index map sanity: rotating the coordinate fields swaps them
        n = sim.mesh.cells[0]
        h = sim.mesh.spacings[0]
        centers = -1.0 + (np.arange(n) + 0.5) * h
        x_field = np.broadcast_to(centers[:, None], (n, n))
        y_field = np.broadcast_to(centers[None, :], (n, n))
        np.testing.assert_array_equal(quarter_turn(x_field), y_field)
        np.testing.assert_allclose(quarter_turn(y_field), -x_field,
                                   rtol=0, atol=1e-15)

        rho = output.cell_averages(sim)[..., 0]
        assert np.max(np.abs(rho - quarter_turn(rho))) <= 1e-10
        report("blast", wct, "< 10 min")


class TestTroubledCellDetector:
    """The relaxed bounds fire on jumps and stay quiet on smooth data."""

    def test_smooth_wave_never_limited_100_steps(self):
        start = time.perf_counter()
        sim, _ = assemble(parse_config(
            "ic = sine\nN = 2\ncells = 48\nlimiter = on\n"))
        sim.run(float("inf"), max_steps=100)
        fractions = [rec["limited_fraction"] for rec in sim.history]
        assert fractions and max(fractions) == 0.0
        report("smooth detector", time.perf_counter() - start, "< 10 s")

    def test_step_function_flagged_at_first_step(self):
        sim, _ = assemble(parse_config(
            "ic = step\nN = 2\ncells = 32\nlimiter = on\n"))
        sim.run(float("inf"), max_steps=1)
        assert sim.history[0]["limited_fraction"] >= 1.0 / 32.0


class QuadraticCoupling:
    """Manufactured system whose gradient coupling is quadratic in the
    state, so the segment integral has a closed form."""

    name = "quadratic-coupling"
    dim = 1
    n_vars = 3
    has_flux = False
    has_ncp = True
    has_source = False
    diss_mask = None

    def ncp_matrix(self, q, normal):
        return normal[0] * q[..., :, None] * q[..., None, :]


class TestFaceTermConsistency:
    """One-sided face terms: flux recovery and segment-integral accuracy."""

    def test_equal_traces_give_the_normal_flux(self):
        start = time.perf_counter()
        rng = np.random.default_rng(23)
        for dim, count in ((2, 500), (3, 500)):
            system = make_system("euler", dim)
            rho = rng.uniform(0.1, 2.0, count)
            vel = rng.uniform(-1.0, 1.0, (count, dim))
            p = rng.uniform(0.1, 2.0, count)
            kinetic = 0.5 * rho * np.sum(vel * vel, axis=-1)
            states = np.concatenate(
                [rho[:, None], rho[:, None] * vel,
                 (p / 0.4 + kinetic)[:, None]], axis=-1)
            assert np.all(system.admissible(states))
            for _ in range(4):
                direction = rng.standard_normal(dim)
                normal = direction / np.linalg.norm(direction)
                got = corrector.riemann_dminus(states, states, normal, system)
                expect = np.einsum("...jk,j->...k", system.flux(states),
                                   normal)
                assert np.max(np.abs(got - expect)
                              / (1.0 + np.abs(expect))) <= 1e-14
        report("flux recovery", time.perf_counter() - start, "< 5 s")

    def test_segment_integral_exact_for_quadratic_coupling(self):
        system = QuadraticCoupling()
        rng = np.random.default_rng(29)
        a = rng.standard_normal((40, 3))
        d = rng.standard_normal((40, 3))
        got = corrector.path_integral_B(a, a + d, np.array([1.0]), system)
        # closed form of the segment average of q_i q_j
        expect = (a[..., :, None] * a[..., None, :]
                  + 0.5 * (a[..., :, None] * d[..., None, :]
                           + a[..., None, :] * d[..., :, None])
                  + d[..., :, None] * d[..., None, :] / 3.0)
        np.testing.assert_allclose(got, expect, rtol=0, atol=1e-14)


class TestSolidVoidInterface:
    """A compressional pulse reflecting off the solid/void transition:
    residual interface traction falls at least twofold per refinement."""

    def test_traction_halves_per_refinement(self):
        start = time.perf_counter()
        system = make_system("elasticity-di", 2)
        tab = basis_tables(2)
        norms = []
        for nx in (40, 80, 160):
            ic, _ = build_problem("pwave", system,
                                  interface_width=1.5 / nx)
            mesh = CartesianMesh([(0.0, 1.0), (0.0, 0.25)], [nx, 4])
            sim = Simulation(mesh, system, 2, default_cfl(2),
                             boundary={0: "outflow", 1: "periodic"})
            sim.project_initial_condition(ic)
            sim.run(0.3)
            col = int(round(0.7 * nx)) - 1
            trace = np.tensordot(tab.right_vals, sim.u[col], axes=(0, 1))
            sxx = trace[..., DiffuseInterfaceElasticity.SXX]
            sxy = trace[..., DiffuseInterfaceElasticity.SXY]
            hy = 0.25 / 4
            norms.append(float(np.sqrt(
                np.sum((sxx ** 2 + sxy ** 2) * tab.weights[None, :]) * hy)))
        print("traction norms:", ", ".join(f"{v:.3e}" for v in norms))
        assert norms[1] <= 0.5 * norms[0]
        assert norms[2] <= 0.5 * norms[1]
        report("interface traction", time.perf_counter() - start, "< 5 min")

    def test_wave_speeds_ignore_the_volume_fraction(self):
        system = make_system("elasticity-di", 2)
        rng = np.random.default_rng(31)
        base = rng.standard_normal((200, 9))
        base[..., DiffuseInterfaceElasticity.LAM] = 2.0
        base[..., DiffuseInterfaceElasticity.MU] = 1.0
        base[..., DiffuseInterfaceElasticity.RHO] = 1.0
        normal = np.array([0.6, 0.8])
        spectra = []
        for alpha in (1.0, 0.3, 1e-3):
            q = base.copy()
            q[..., DiffuseInterfaceElasticity.ALPHA] = alpha
            spectra.append(system.eigenvalues(q, normal))
        np.testing.assert_array_equal(spectra[0], spectra[1])
        np.testing.assert_array_equal(spectra[0], spectra[2])


class TestKernelEquivalence:
    """Blocked evaluation is bit-identical to the per-point loop."""

    def test_blocked_matches_scalar_loop_on_1e5_states(self):
        start = time.perf_counter()
        system = make_system("euler", 3)
        rng = np.random.default_rng(37)
        n = 100_003  # deliberately not a multiple of any block width
        rho = rng.uniform(0.1, 2.0, n)
        vel = rng.uniform(-1.0, 1.0, (n, 3))
        p = rng.uniform(0.1, 2.0, n)
        states = np.concatenate(
            [rho[:, None], rho[:, None] * vel,
             (p / 0.4 + 0.5 * rho * np.sum(vel * vel, -1))[:, None]],
            axis=-1)
        ref = kernels.eval_scalar(states, system)
        for width in (64, 1000, 4096):
            got = kernels.eval_blocked(states, system, width=width)
            for a, b in zip(got, ref):
                np.testing.assert_array_equal(a, b)
        report("kernel equivalence", time.perf_counter() - start, "< 5 s")

    def test_layout_round_trip_identity_with_ragged_tails(self):
        rng = np.random.default_rng(41)
        for n in (1, 7, 64, 129):
            block = rng.standard_normal((n, 5))
            back = kernels.soa_to_aos(kernels.aos_to_soa(block))
            np.testing.assert_array_equal(back, block)
            tails = [sl for sl in kernels.block_slices(n, 8)]
            covered = np.concatenate([block[sl] for sl in tails])
            np.testing.assert_array_equal(covered, block)


class TestDeterminism:
    """Identical runs leave identical bytes on disk."""

    def test_two_solves_byte_identical_diagnostics(self, tmp_path):
        blobs = []
        for sub in ("first", "second"):
            outdir = tmp_path / sub
            cfg = tmp_path / f"{sub}.cfg"
            cfg.write_text("ic = sod\nN = 2\ncells = 50\nlimiter = on\n"
                           f"tend = 0.1\noutput_dir = {outdir}\n")
            assert cli.main(["solve", "--config", str(cfg)]) == 0
            blobs.append((outdir / "diagnostics.csv").read_bytes())
        assert blobs[0] == blobs[1]
