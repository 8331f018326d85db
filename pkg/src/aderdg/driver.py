"""Single-grid time marching.

One step runs in two phases: first every cell solves its local
space-time problem and publishes face traces, then every cell applies
the corrector update from the shared face data.  When the subcell
limiter is enabled the candidate states are screened afterwards and
troubled cells are recomputed from the previous step; if even the
first-order rescue produces inadmissible states the whole step restarts
with half the step size (at most three halvings).

Face contributions are accumulated in a fixed order (low then high face,
axes in x, y, z order), so reruns of the same configuration are
bitwise reproducible.
"""

import numpy as np

from . import corrector, limiter, predictor
from .basis import basis_tables

BOUNDARY_KINDS = ("periodic", "outflow", "wall", "exact")

# Safe default CFL factors: measured one-dimensional linear stability
# thresholds scaled by 0.9.  All sit strictly below the 1/(2N+1) bound
# the predictor-corrector pair requires; for N >= 2 the true threshold
# is noticeably lower than that bound, so 0.9/(2N+1) would NOT be safe.
DEFAULT_CFL = {0: 0.9, 1: 0.30, 2: 0.15, 3: 0.09, 4: 0.062, 5: 0.044,
               6: 0.033, 7: 0.026, 8: 0.021, 9: 0.018}


def default_cfl(degree):
    """Conservative CFL factor for a given polynomial degree."""
    return DEFAULT_CFL.get(degree, 0.4 / (2 * degree + 1))


def normalize_boundary(spec, dim):
    """Expand a boundary spec into a {(axis, side): kind} dict.

    Accepts a single kind for all faces, a per-axis mapping to a kind or
    a (low, high) pair, or an already expanded per-face dict.
    """
    table = {}
    if isinstance(spec, str):
        for j in range(dim):
            table[(j, 0)] = spec
            table[(j, 1)] = spec
    elif isinstance(spec, dict) and spec and all(
            isinstance(k, tuple) for k in spec):
        table = dict(spec)
    elif isinstance(spec, dict):
        for j in range(dim):
            kind = spec.get(j, "periodic")
            if isinstance(kind, str):
                table[(j, 0)] = kind
                table[(j, 1)] = kind
            else:
                table[(j, 0)], table[(j, 1)] = kind
    else:
        raise ValueError(f"unsupported boundary spec: {spec!r}")
    for j in range(dim):
        for side in (0, 1):
            kind = table.get((j, side))
            if kind not in BOUNDARY_KINDS:
                raise ValueError(f"unknown boundary kind {kind!r} "
                                 f"on axis {j} side {side}")
        lo, hi = table[(j, 0)], table[(j, 1)]
        if ("periodic" in (lo, hi)) and lo != hi:
            raise ValueError(f"axis {j}: periodic must be set on both sides")
    return table


class Simulation:
    """Owns the state array and marches it in time.

    Args:
        mesh: CartesianMesh matching the system's dimension.
        system: hyperbolic system instance.
        degree: polynomial degree per axis.
        cfl: time step multiplier, must stay below 1 / (2 * degree + 1).
        boundary: boundary spec, see normalize_boundary.
        use_limiter: enable the a posteriori subcell limiter.
        predictor_mode: "conservative" or "primitive".
        exact_solution: callable (points, t) -> states; required for
            "exact" boundaries, used by error_norms.
        dmp_delta0, dmp_eps: detection relaxation parameters.
        batch_width: lane width for the pointwise kernels (None = whole
            grid in one block).
        picard_tol: predictor convergence tolerance.
    """

    def __init__(self, mesh, system, degree, cfl, boundary="periodic",
                 use_limiter=False, predictor_mode="conservative",
                 exact_solution=None, dmp_delta0=limiter.DMP_DELTA0,
                 dmp_eps=limiter.DMP_EPS, batch_width=None,
                 picard_tol=1e-12):
        if mesh.dim != system.dim:
            raise ValueError("mesh and system dimensions differ")
        if not 0.0 < cfl < corrector.max_cfl_number(degree):
            raise ValueError(
                f"cfl must lie in (0, {corrector.max_cfl_number(degree)}) "
                f"for degree {degree}, got {cfl}")
        self.mesh = mesh
        self.system = system
        self.tables = basis_tables(degree)
        self.cfl = float(cfl)
        self.boundary = normalize_boundary(boundary, mesh.dim)
        self.use_limiter = bool(use_limiter)
        self.predictor_mode = predictor_mode
        self.exact_solution = exact_solution
        self.dmp_delta0 = float(dmp_delta0)
        self.dmp_eps = float(dmp_eps)
        self.batch_width = batch_width
        self.picard_tol = float(picard_tol)
        if exact_solution is None and any(
                k == "exact" for k in self.boundary.values()):
            raise ValueError("exact boundaries need an exact_solution")
        self.u = None
        self.t = 0.0
        self.step_count = 0
        self.force_limit_all = False
        self.last_limited_fraction = 0.0
        self.last_troubled = None
        self.history = []

    # -- setup ---------------------------------------------------------

    def project_initial_condition(self, fn):
        """Collocate an initial state function at the quadrature nodes."""
        coords = self.mesh.node_coords(self.tables)
        u = np.asarray(fn(coords), dtype=float)
        expected = self.mesh.cells \
            + (self.tables.degree + 1,) * self.mesh.dim \
            + (self.system.n_vars,)
        if u.shape != expected:
            raise ValueError(f"initial condition returned shape {u.shape}, "
                             f"expected {expected}")
        if self.use_limiter:
            # Collocating a jump can oscillate outside the physical
            # region between nodes, which poisons the subcell data the
            # rescue path starts from.  Flatten such cells to their
            # admissible cell mean (means of admissible nodal states
            # stay admissible; the mean is preserved exactly).
            dim = self.mesh.dim
            node_axes = tuple(range(dim, 2 * dim))
            sub = limiter.project_to_subcells(u, self.tables, dim)
            ok = np.all(self.system.admissible(u), axis=node_axes) \
                & np.all(self.system.admissible(sub), axis=node_axes)
            if not np.all(ok):
                w = corrector.weight_tensor(self.tables, dim)
                mean = np.sum(u * w[..., None], axis=node_axes)
                bad = ~ok
                u[bad] = mean[bad][(slice(None),) + (None,) * dim]
        self.u = u
        return u

    def set_state(self, u):
        self.u = np.array(u, dtype=float)

    # -- stepping ------------------------------------------------------

    def max_timestep(self):
        return corrector.compute_timestep(self.u, self.system,
                                          self.mesh.spacings, self.cfl,
                                          self.tables.degree)

    def advance(self, dt):
        """Take one step of (at most) the given size; returns the size
        actually used after any stability restarts."""
        trial = float(dt)
        for _ in range(limiter.MAX_HALVINGS + 1):
            result = self._attempt_step(trial)
            if result is not None:
                u_new, fraction, troubled = result
                self.u = u_new
                self.t += trial
                self.step_count += 1
                self.last_limited_fraction = fraction
                self.last_troubled = troubled
                self._record(trial)
                return trial
            trial *= 0.5
        raise RuntimeError(
            f"step at t={self.t:.6g} failed after "
            f"{limiter.MAX_HALVINGS} step halvings")

    def run(self, t_end, max_steps=None, on_step=None):
        """March until t_end (or max_steps); returns the step count."""
        if self.u is None:
            raise RuntimeError("no initial state set")
        scale = abs(t_end) if np.isfinite(t_end) else 1.0
        tiny = 1e-12 * max(1.0, scale)
        while self.t < t_end - tiny:
            if max_steps is not None and self.step_count >= max_steps:
                break
            dt = min(self.max_timestep(), t_end - self.t)
            self.advance(dt)
            if not np.all(np.isfinite(self.u)):
                raise RuntimeError(f"non-finite state after step "
                                   f"{self.step_count}")
            if on_step is not None:
                on_step(self)
        return self.step_count

    def _attempt_step(self, dt):
        sys_ = self.system
        dim = self.mesh.dim
        spacings = self.mesh.spacings
        res = predictor.picard_solve(self.u, sys_, spacings, dt, self.tables,
                                     tol=self.picard_tol,
                                     mode=self.predictor_mode,
                                     width=self.batch_width)
        pred_bad = ~(res.converged & res.admissible)
        traces = predictor.extract_traces(res.q, self.tables, dim)
        vol = corrector.volume_integral(res.q, sys_, spacings, dt,
                                        self.tables, width=self.batch_width)
        face_accs = []
        for j in range(dim):
            qm, qp = self._face_states(traces, j, dt)
            d_low, d_high = corrector.face_fluxes(qm, qp, j, sys_)
            face_accs.append(corrector.face_integral(
                _gslice(d_high, j, slice(None, -1)), j, 0, spacings, dt,
                self.tables, dim))
            face_accs.append(corrector.face_integral(
                _gslice(d_low, j, slice(1, None)), j, 1, spacings, dt,
                self.tables, dim))
        candidate = corrector.element_update(self.u, vol, face_accs,
                                             spacings, self.tables, dim)
        if not self.use_limiter:
            return candidate, 0.0, None
        return self._limit(candidate, pred_bad, dt)

    # -- faces ---------------------------------------------------------

    def _face_states(self, traces, axis, dt):
        """Minus/plus trace pairs for all cells[axis] + 1 faces."""
        lo_tr = traces[(axis, 0)]
        hi_tr = traces[(axis, 1)]
        if self.boundary[(axis, 0)] == "periodic":
            ghost_m = _gslice(hi_tr, axis, slice(-1, None))
            ghost_p = _gslice(lo_tr, axis, slice(None, 1))
        else:
            ghost_m = self._ghost_trace(
                _gslice(lo_tr, axis, slice(None, 1)), axis, 0, dt)
            ghost_p = self._ghost_trace(
                _gslice(hi_tr, axis, slice(-1, None)), axis, 1, dt)
        qm = np.concatenate([ghost_m, hi_tr], axis=axis)
        qp = np.concatenate([lo_tr, ghost_p], axis=axis)
        return qm, qp

    def _ghost_trace(self, interior, axis, side, dt):
        """Exterior trace layer at a non-periodic boundary face."""
        kind = self.boundary[(axis, side)]
        if kind == "outflow":
            return interior
        if kind == "wall":
            return self.system.reflect(interior, axis)
        pts = self.mesh.face_node_coords(self.tables, axis, side)
        slabs = [np.asarray(self.exact_solution(pts, self.t + tau * dt),
                            dtype=float)
                 for tau in self.tables.nodes]
        return np.stack(slabs, axis=-2)

    # -- limiting ------------------------------------------------------

    def _limit(self, candidate, pred_bad, dt):
        sys_ = self.system
        dim = self.mesh.dim
        tables = self.tables
        s = tables.n_subcells
        cand_sub = limiter.project_to_subcells(candidate, tables, dim)
        prev_sub = limiter.project_to_subcells(self.u, tables, dim)
        prev_global = _interleave(prev_sub, dim)
        padded_cells = _deinterleave(
            self._pad_subcells(prev_global, s, self.t), s, dim)
        bounds = limiter.relaxed_bounds(padded_cells, dim,
                                        self.dmp_delta0, self.dmp_eps)
        troubled = limiter.detect_troubled(candidate, cand_sub, bounds,
                                           sys_, dim)
        troubled |= pred_bad
        if self.force_limit_all:
            troubled = np.ones_like(troubled)
        n_troubled = int(troubled.sum())
        fraction = n_troubled / troubled.size
        if n_troubled == 0:
            return candidate, 0.0, troubled
        halo = self._pad_subcells(prev_global, 2, self.t)
        starts = np.argwhere(troubled) * s
        windows = limiter.gather_windows(halo, starts, s + 4, dim)
        sub_spacings = tuple(dx / s for dx in self.mesh.spacings)
        new_avg, failed = limiter.muscl_subcell_step(
            windows, sys_, sub_spacings, dt, mode=self.predictor_mode)
        if np.any(failed):
            return None
        nodal = limiter.recover_from_subcells(new_avg, tables, dim)
        nodal, _ = limiter.flatten_inadmissible(nodal, new_avg, sys_,
                                                tables, dim)
        u_new = candidate.copy()
        u_new[troubled] = nodal
        return u_new, fraction, troubled

    def _pad_subcells(self, field, layers, t):
        """Grow the global subcell-average field by ghost layers."""
        out = field
        dim = self.mesh.dim
        padded = [False] * dim
        for j in range(dim):
            if self.boundary[(j, 0)] == "periodic":
                lo = _gslice(out, j, slice(-layers, None))
                hi = _gslice(out, j, slice(None, layers))
            else:
                lo = self._boundary_slab(out, j, 0, layers, t, padded)
                hi = self._boundary_slab(out, j, 1, layers, t, padded)
            out = np.concatenate([lo, out, hi], axis=j)
            padded[j] = True
        return out

    def _boundary_slab(self, field, axis, side, layers, t, padded):
        kind = self.boundary[(axis, side)]
        if kind == "outflow":
            edge = slice(-1, None) if side else slice(None, 1)
            return np.repeat(_gslice(field, axis, edge), layers, axis=axis)
        if kind == "wall":
            edge = slice(-layers, None) if side else slice(None, layers)
            mirror = np.flip(_gslice(field, axis, edge), axis=axis)
            return self.system.reflect(mirror, axis)
        # exact: evaluate the reference solution at ghost subcell centres
        s = self.tables.n_subcells
        dim = self.mesh.dim
        shape = list(field.shape[:-1])
        shape[axis] = layers
        pts = np.empty(tuple(shape) + (dim,))
        for i in range(dim):
            pad_i = layers if (padded[i] or i == axis) else 0
            coords = self.mesh.subcell_axis_coords(i, s, pad_i)
            if i == axis:
                coords = coords[:layers] if side == 0 else coords[-layers:]
            sh = [1] * len(shape)
            sh[i] = len(coords)
            pts[..., i] = coords.reshape(sh)
        return np.asarray(self.exact_solution(pts, t), dtype=float)

    # -- reductions ----------------------------------------------------

    def conserved_totals(self):
        """Domain integrals of every quantity, shape (n_vars,)."""
        w = corrector.weight_tensor(self.tables, self.mesh.dim)
        axes = tuple(range(self.u.ndim - 1 - self.mesh.dim, self.u.ndim - 1))
        weighted = self.u * w[..., None]
        return self.mesh.cell_volume * weighted.sum(
            axis=tuple(range(self.mesh.dim)) + axes)

    def error_norms(self, reference=None, t=None):
        """Quadrature L1/L2/Linf errors against a reference solution."""
        fn = reference if reference is not None else self.exact_solution
        if fn is None:
            raise ValueError("no reference solution available")
        when = self.t if t is None else t
        coords = self.mesh.node_coords(self.tables)
        diff = self.u - np.asarray(fn(coords, when), dtype=float)
        w = corrector.weight_tensor(self.tables, self.mesh.dim)
        vol = self.mesh.cell_volume
        red = tuple(range(diff.ndim - 1))
        wexp = w[..., None]
        l1 = vol * np.sum(np.abs(diff) * wexp, axis=red)
        l2 = np.sqrt(vol * np.sum(diff * diff * wexp, axis=red))
        linf = np.max(np.abs(diff), axis=red)
        return {"l1": l1, "l2": l2, "linf": linf}

    def _record(self, dt):
        totals = self.conserved_totals()
        self.history.append({
            "step": self.step_count,
            "time": self.t,
            "dt": dt,
            "totals": totals,
            "limited_fraction": self.last_limited_fraction,
        })


def _gslice(arr, axis, sl):
    idx = [slice(None)] * arr.ndim
    idx[axis] = sl
    return arr[tuple(idx)]


def _interleave(sub, dim):
    """(g.., s.., m) cell-major subcell averages -> global subcell field."""
    order = []
    for j in range(dim):
        order += [j, dim + j]
    order.append(2 * dim)
    arr = sub.transpose(order)
    shape = tuple(sub.shape[j] * sub.shape[dim + j] for j in range(dim))
    return arr.reshape(shape + (sub.shape[-1],))


def _deinterleave(field, s, dim):
    """Global subcell field -> (cells.., s.., m) cell-major averages."""
    cells = tuple(n // s for n in field.shape[:dim])
    shape = []
    for n in cells:
        shape += [n, s]
    arr = field.reshape(tuple(shape) + (field.shape[-1],))
    order = [2 * j for j in range(dim)] + [2 * j + 1 for j in range(dim)]
    order.append(2 * dim)
    return arr.transpose(order)
