"""A posteriori subcell limiter.

Every candidate cell is screened after the corrector: a cell is troubled
if its predictor failed, if any nodal or subcell-average state is
inadmissible, or if a subcell average leaves the relaxed discrete
maximum principle bounds built from the previous step's subcell averages
over the cell and its face neighbours.  Troubled cells are recomputed
from the t_n data with a MUSCL-Hancock finite volume step on a
(2N+1)^d subgrid and projected back to the polynomial basis; the
recovery preserves the element mean exactly.
"""

import numpy as np

from . import corrector
from .predictor import apply_matrix

# Absolute DMP slack: smooth moving extrema overshoot their previous
# neighbourhood extremes by O(curvature * h_sub^2) between steps (2e-4
# on the 25^2 vortex), which detection must tolerate; genuine shocks
# violate bounds by orders of magnitude more.
DMP_DELTA0 = 1e-3
DMP_EPS = 1e-3
MAX_HALVINGS = 3


def project_to_subcells(u, tables, dim):
    """Subcell averages of nodal polynomials: (..., n.., m) -> (..., s.., m)."""
    out = u
    first_axis = u.ndim - 1 - dim
    for j in range(dim):
        out = apply_matrix(tables.sub_project, out, first_axis + j)
    return out


def recover_from_subcells(ubar, tables, dim):
    """Mean-preserving least-squares recovery of nodal polynomials."""
    out = ubar
    first_axis = ubar.ndim - 1 - dim
    for j in range(dim):
        out = apply_matrix(tables.sub_recover, out, first_axis + j)
    return out


def minmod(a, b):
    """Componentwise minmod slope limiter."""
    same = a * b > 0.0
    return np.where(same, np.where(np.abs(a) <= np.abs(b), a, b), 0.0)


def relaxed_bounds(prev_sub_cells, dim, delta0=DMP_DELTA0, eps=DMP_EPS):
    """Neighbourhood DMP bounds from previous-step subcell averages.

    prev_sub_cells: (g1+2, .., gd+2, s1, .., sd, m) subcell averages on a
    cell grid already padded with one ghost cell per side.  Returns
    (lo, hi), each (g1, .., gd, m): min/max over the cell and its 2d face
    neighbours, relaxed by max(delta0, eps * (hi - lo)).
    """
    sub_axes = tuple(range(dim, 2 * dim))
    cmin = prev_sub_cells.min(axis=sub_axes)
    cmax = prev_sub_cells.max(axis=sub_axes)
    core = tuple(slice(1, -1) for _ in range(dim))
    lo = cmin[core].copy()
    hi = cmax[core].copy()
    for j in range(dim):
        for shift in (-1, 1):
            sl = tuple(
                slice(1 + shift, (-1 + shift) or None) if i == j else slice(1, -1)
                for i in range(dim))
            np.minimum(lo, cmin[sl], out=lo)
            np.maximum(hi, cmax[sl], out=hi)
    delta = np.maximum(delta0, eps * (hi - lo))
    return lo - delta, hi + delta


def detect_troubled(candidate, cand_sub, bounds, system, dim):
    """Screen candidate cells; True marks cells needing the FV rescue."""
    lo, hi = bounds
    sub_axes = tuple(range(candidate.ndim - 1 - dim, candidate.ndim - 1))
    grid_nd = candidate.ndim - 1 - dim
    expand = (slice(None),) * grid_nd + (None,) * dim
    outside = (cand_sub < lo[expand]) | (cand_sub > hi[expand])
    troubled = np.any(outside, axis=sub_axes + (cand_sub.ndim - 1,))
    node_ok = np.all(system.admissible(candidate), axis=sub_axes)
    sub_ok = np.all(system.admissible(cand_sub), axis=sub_axes)
    return troubled | ~node_ok | ~sub_ok


def gather_windows(padded, starts, size, dim):
    """Slice per-cell windows out of a padded global subcell field.

    padded: (G1, .., Gd, m); starts: (T, dim) window origins.
    Returns (T, size, .., size, m).
    """
    n = starts.shape[0]
    idx = []
    for j in range(dim):
        shape = [n] + [1] * dim
        shape[1 + j] = size
        idx.append((starts[:, j][:, None] + np.arange(size)[None, :]).reshape(shape))
    return padded[tuple(idx)]


def muscl_subcell_step(windows, system, sub_spacings, dt, mode="conservative"):
    """One MUSCL-Hancock step on batched troubled-cell subgrids.

    windows: (T, S+4, .., S+4, m) subcell averages at t_n with a two-layer
    halo.  Returns (new_averages (T, S, .., S, m), failed (T,) bool);
    failed cells exhausted the first-order fallback and require a global
    restart with a smaller step.
    """
    new, bad = _muscl_once(windows, system, sub_spacings, dt, mode)
    if np.any(bad):
        redo, still_bad = _muscl_once(windows[bad], system, sub_spacings, dt,
                                      mode, zero_slopes=True)
        new[bad] = redo
        failed = np.zeros(windows.shape[0], dtype=bool)
        failed[np.flatnonzero(bad)[still_bad]] = True
    else:
        failed = np.zeros(windows.shape[0], dtype=bool)
    return new, failed


def _muscl_once(windows, system, sub_spacings, dt, mode, zero_slopes=False):
    dim = system.dim
    m = system.n_vars
    primitive = mode == "primitive" and not system.identity_primitives
    v = system.cons_to_prim(windows) if primitive else windows

    def grid(sls):
        return (slice(None),) + sls + (slice(None),)

    # Limited slopes per unit length on the 1-halo region.
    inner = tuple(slice(1, -1) for _ in range(dim))
    center = v[grid(inner)]
    sl_in = np.zeros(center.shape[:-1] + (dim, m))
    if not zero_slopes:
        for j in range(dim):
            fwd_sl = tuple(slice(2, None) if i == j else slice(1, -1)
                           for i in range(dim))
            bwd_sl = tuple(slice(None, -2) if i == j else slice(1, -1)
                           for i in range(dim))
            fwd = (v[grid(fwd_sl)] - center) / sub_spacings[j]
            bwd = (center - v[grid(bwd_sl)]) / sub_spacings[j]
            sl_in[..., j, :] = minmod(fwd, bwd)
    if primitive:
        v_half = center + (0.5 * dt) * system.primitive_rhs(center, sl_in)
    else:
        rate = system.source(center) if system.has_source else np.zeros_like(center)
        if system.has_ncp:
            rate = rate - system.ncp(center, sl_in)
        if system.has_flux:
            for j in range(dim):
                offset = 0.5 * sub_spacings[j] * sl_in[..., j, :]
                f_hi = system.flux(center + offset)[..., j, :]
                f_lo = system.flux(center - offset)[..., j, :]
                rate = rate - (f_hi - f_lo) / sub_spacings[j]
        v_half = center + (0.5 * dt) * rate

    # Face states at the half step, converted to conserved variables.
    ok = np.ones(windows.shape[0], dtype=bool)
    face_lo, face_hi = [], []
    for j in range(dim):
        offset = 0.5 * sub_spacings[j] * sl_in[..., j, :]
        lo_v, hi_v = v_half - offset, v_half + offset
        if primitive:
            lo_q, hi_q = system.prim_to_cons(lo_v), system.prim_to_cons(hi_v)
        else:
            lo_q, hi_q = lo_v, hi_v
        face_lo.append(lo_q)
        face_hi.append(hi_q)
        cell_axes = tuple(range(1, 1 + dim))
        ok &= np.all(system.admissible(lo_q), axis=cell_axes)
        ok &= np.all(system.admissible(hi_q), axis=cell_axes)

    core = tuple(slice(1, -1) for _ in range(dim))  # inside the 1-halo arrays
    q_half = system.prim_to_cons(v_half) if primitive else v_half
    new = windows[grid(tuple(slice(2, -2) for _ in range(dim)))].copy()
    grad_eff = np.empty(new.shape[:-1] + (dim, m))
    for j in range(dim):
        # Faces of the S core cells along j: S+1 per row, built from the
        # 1-halo face states; both one-sided terms come from one call so
        # shared faces of adjacent troubled cells telescope bitwise.
        qm_sl = tuple(slice(None, -1) if i == j else slice(1, -1) for i in range(dim))
        qp_sl = tuple(slice(1, None) if i == j else slice(1, -1) for i in range(dim))
        qm = face_hi[j][grid(qm_sl)]
        qp = face_lo[j][grid(qp_sl)]
        d_low, d_high = corrector.face_fluxes(qm, qp, j, system)
        hi_faces = tuple(slice(1, None) if i == j else slice(None) for i in range(dim))
        lo_faces = tuple(slice(None, -1) if i == j else slice(None) for i in range(dim))
        new -= (dt / sub_spacings[j]) * (d_low[grid(hi_faces)] + d_high[grid(lo_faces)])
        grad_eff[..., j, :] = (face_hi[j][grid(core)] - face_lo[j][grid(core)]) \
            / sub_spacings[j]
    q_half_core = q_half[grid(core)]
    if system.has_ncp:
        new -= dt * system.ncp(q_half_core, grad_eff)
    if system.has_source:
        new += dt * system.source(q_half_core)

    cell_axes = tuple(range(1, 1 + dim))
    ok &= np.all(system.admissible(new), axis=cell_axes)
    return new, ~ok


def flatten_inadmissible(nodal, averages, system, tables, dim):
    """Replace recovered cells whose nodal states left the physical region
    by their (admissible) constant cell mean.

    The subcell projection is screened too: the next step's rescue
    windows are built from it, so it must stay physical as well.
    """
    cell_axes = tuple(range(1, 1 + dim))
    ok = np.all(system.admissible(nodal), axis=cell_axes)
    ok &= np.all(system.admissible(
        project_to_subcells(nodal, tables, dim)), axis=cell_axes)
    if np.all(ok):
        return nodal, 0
    mean = averages.mean(axis=cell_axes)
    flat = np.broadcast_to(mean[(slice(None),) + (None,) * dim],
                           nodal.shape).copy()
    bad = ~ok
    nodal[bad] = flat[bad]
    return nodal, int(bad.sum())
