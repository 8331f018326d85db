"""Corrector stage: face coupling, volume integrals, element update.

Face coupling uses a Rusanov-type one-sided jump term

    D(q-, q+) . n = 1/2 (F(q+) + F(q-)) . n
                  + 1/2 (int_0^1 B(psi(s)) . n ds - s_max I) (q+ - q-)

evaluated along the straight segment psi(s) = q- + s (q+ - q-) with a
three-point Gauss rule, s_max the largest signal speed of the two
states.  Accumulators are true space-time integrals; the element update
divides by the diagonal mass (tensor quadrature weights times cell
volume).
"""

import numpy as np

from . import kernels
from .basis import basis_tables, gauss_legendre
from .predictor import apply_matrix

PATH_POINTS = 3
_path_rule = gauss_legendre(PATH_POINTS)


def max_cfl_number(degree):
    """Stability bound on the CFL factor: alpha < 1/(2N+1)."""
    return 1.0 / (2 * degree + 1)


def compute_timestep(u, system, spacings, cfl, degree):
    """Largest stable time step for the current solution.

    dt = cfl / sum_j (max |lambda_j| / dx_j), maxima taken over every
    admissible nodal state of every element.  Inadmissible nodes are
    excluded from the scan (the limiter deals with the cells that carry
    them); if no admissible state exists the run cannot continue.
    """
    if not cfl < max_cfl_number(degree):
        raise ValueError(
            f"cfl {cfl} violates the stability bound 1/(2N+1) = "
            f"{max_cfl_number(degree):.6g} for degree {degree}")
    states = u.reshape(-1, system.n_vars)
    ok = system.admissible(states)
    if not np.any(ok):
        raise RuntimeError("no admissible state found while sizing the time step")
    states = states[ok]
    denom = 0.0
    for j in range(system.dim):
        e_j = np.zeros(system.dim)
        e_j[j] = 1.0
        lam = float(np.max(system.max_abs_eigenvalue(states, e_j)))
        denom += lam / spacings[j]
    if denom == 0.0:
        return np.inf
    return cfl / denom


def rusanov_theta(q_minus, q_plus, normal, system):
    """Pointwise dissipation speed: max |eigenvalue| over both states."""
    lam_m = system.max_abs_eigenvalue(q_minus, normal)
    lam_p = system.max_abs_eigenvalue(q_plus, normal)
    return np.maximum(lam_m, lam_p)


def path_integral_B(q_minus, q_plus, normal, system, n_points=PATH_POINTS):
    """Quadrature of B(psi(s)).n along the straight segment q- -> q+."""
    if not system.has_ncp:
        return np.zeros(q_minus.shape[:-1] + (system.n_vars, system.n_vars))
    if n_points == PATH_POINTS:
        s_nodes, s_weights = _path_rule
    else:
        s_nodes, s_weights = gauss_legendre(n_points)
    jump = q_plus - q_minus
    out = np.zeros(q_minus.shape[:-1] + (system.n_vars, system.n_vars))
    for s, w in zip(s_nodes, s_weights):
        psi = q_minus + s * jump
        out += w * system.ncp_matrix(psi, normal)
    return out


def riemann_dminus(q_minus, q_plus, normal, system):
    """One-sided face term for the element whose outward normal is `normal`."""
    jump = q_plus - q_minus
    s_max = rusanov_theta(q_minus, q_plus, normal, system)
    out = -0.5 * s_max[..., None] * jump
    if system.diss_mask is not None:
        out = out * system.diss_mask
    if system.has_flux:
        f_m = system.flux(q_minus)
        f_p = system.flux(q_plus)
        for j in range(system.dim):
            if normal[j] != 0.0:
                out += 0.5 * normal[j] * (f_m[..., j, :] + f_p[..., j, :])
    if system.has_ncp:
        b_path = path_integral_B(q_minus, q_plus, normal, system)
        out += 0.5 * np.einsum("...ab,...b->...a", b_path, jump)
    return out


def face_fluxes(q_minus, q_plus, axis, system):
    """Both one-sided face terms of an interface, computed once.

    q_minus is the trace of the low-side element, q_plus of the
    high-side element; the interface normal is +e_axis for the low side.
    Returns (d_low, d_high): d_low enters the low-side element's face
    integral (outward normal +e_axis), d_high the high-side element's
    (outward normal -e_axis).  The central flux parts are equal and
    opposite bit for bit, so pure-flux systems telescope exactly.
    """
    normal = np.zeros(system.dim)
    normal[axis] = 1.0
    jump = q_plus - q_minus
    s_max = rusanov_theta(q_minus, q_plus, normal, system)
    diss = 0.5 * s_max[..., None] * jump
    if system.diss_mask is not None:
        diss = diss * system.diss_mask
    central = np.zeros_like(jump)
    if system.has_flux:
        f_m = system.flux(q_minus)
        f_p = system.flux(q_plus)
        central = 0.5 * (f_m[..., axis, :] + f_p[..., axis, :])
    if system.has_ncp:
        b_path = path_integral_B(q_minus, q_plus, normal, system)
        ncp_half = 0.5 * np.einsum("...ab,...b->...a", b_path, jump)
    else:
        ncp_half = np.zeros_like(jump)
    d_low = central + ncp_half - diss
    d_high = -central + ncp_half + diss
    return d_low, d_high


def weight_tensor(tables, dim):
    """Tensor-product quadrature weights, shape (p, .., p) with dim axes."""
    w = tables.weights
    out = w
    for _ in range(dim - 1):
        out = np.multiply.outer(out, w)
    return out


def volume_integral(q, system, spacings, dt, tables, width=None):
    """Space-time volume accumulator: flux, NCP and source tested against
    the element basis (gradient for the flux part).

    q: (..., n_1..n_d, T, m) space-time predictor states.
    Returns a (..., n_1..n_d, m) array of true integrals.
    """
    dim = system.dim
    m = system.n_vars
    first_axis = q.ndim - 2 - dim
    w = tables.weights
    vol = float(np.prod(spacings))
    grads = None
    if system.has_ncp:
        grads = np.empty(q.shape[:-1] + (dim, m))
        for j in range(dim):
            grads[..., j, :] = apply_matrix(tables.diff / spacings[j], q, first_axis + j)
    flat = q.reshape(-1, m)
    flat_g = grads.reshape(-1, dim, m) if grads is not None else None
    flux, ncp, source, _ = kernels.eval_blocked(
        flat, system, flat_g, width=width or max(flat.shape[0], 1),
        need_ok=False)
    w_tensor = weight_tensor(tables, dim)[..., None]
    shape_st = q.shape[:-1] + (dim, m) if system.has_flux else None
    interior = source.reshape(q.shape) - ncp.reshape(q.shape)
    acc = dt * vol * w_tensor * np.einsum("t,...tv->...v", w, interior)
    if system.has_flux:
        flux = flux.reshape(shape_st)
        stiff = (tables.diff * w[:, None]).T  # stiff[k, l] = w_l phi_k'(xi_l)
        for j in range(dim):
            fbar = np.einsum("t,...tv->...v", w, flux[..., j, :])
            contrib = apply_matrix(stiff, fbar, first_axis + j)
            shape = [1] * dim
            shape[j] = -1
            scale = (w_tensor[..., 0] / w.reshape(shape))[..., None]
            acc += (dt * vol / spacings[j]) * scale * contrib
    return acc


def face_integral(d_values, axis, side, spacings, dt, tables, dim):
    """Face accumulator from one-sided jump terms at the face nodes.

    d_values: (..., tangential nodes, T, m) for the (axis, side) face of
    each element.  Returns the (..., n_1..n_d, m) true integral of the
    terms against the element basis restricted to that face.
    """
    w = tables.weights
    dbar = np.einsum("t,...tv->...v", w, d_values)
    if dim > 1:
        w_tang = weight_tensor(tables, dim - 1)[..., None]
        dbar = dbar * w_tang
    area = float(np.prod(spacings)) / spacings[axis]
    vec = tables.right_vals if side == 1 else tables.left_vals
    out = np.tensordot(vec, dbar, axes=0)
    out = np.moveaxis(out, 0, dbar.ndim - dim + axis)
    return dt * area * out


def element_update(u, volume_acc, face_accs, spacings, tables, dim):
    """Candidate solution: u* = u + M^-1 (volume - sum of face integrals)."""
    total = volume_acc.copy()
    for acc in face_accs:
        total -= acc
    mass = float(np.prod(spacings)) * weight_tensor(tables, dim)[..., None]
    return u + total / mass
