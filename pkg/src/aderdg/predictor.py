"""Element-local space-time predictor.

Solves, independently per element, the weak space-time problem whose
fixed point is the local evolution of the element polynomial under
q_t = S - div F - B.grad q, ignoring neighbours.  Arrays are nodal with
layout (..., n_1..n_d, m) for spatial data and (..., n_1..n_d, T, m)
for space-time data; leading axes are arbitrary batch axes (the driver
puts grid indices there).
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .basis import basis_tables

_time_ops_cache = {}


class TimeOperators:
    """Per-degree temporal matrices of the space-time weak form.

    K1 is the operator acting on the time slices of the element
    space-time polynomial: K1[k, l] = phi_k(1) phi_l(1) - w_l phi_k'(tau_l).
    Its inverse, combined with the initial-data column `g0` and the
    weighted projection `gw`, turns one Picard sweep into two small
    matrix applications.
    """

    def __init__(self, degree):
        t = basis_tables(degree)
        w = t.weights
        self.degree = degree
        self.k1 = np.outer(t.right_vals, t.right_vals) - t.diff.T * w[None, :]
        self.k1_inv = np.linalg.inv(self.k1)
        self.g0 = self.k1_inv @ t.left_vals
        self.gw = self.k1_inv * w[None, :]
        self.k1_opnorm = float(np.linalg.norm(self.k1, 2))
        self.w = w
        self.tau = t.nodes


def time_operators(degree):
    if degree not in _time_ops_cache:
        _time_ops_cache[degree] = TimeOperators(degree)
    return _time_ops_cache[degree]


def apply_matrix(mat, arr, axis):
    """Contract mat[k, l] with axis `axis` of arr, keeping the axis in place."""
    axis = axis % arr.ndim
    out = np.tensordot(mat, arr, axes=(1, axis))
    return np.moveaxis(out, 0, axis)


@dataclass
class PredictorResult:
    q: np.ndarray            # (..., n_1..n_d, T, m) space-time conserved states
    iterations: int
    converged: np.ndarray    # (...,) bool, per element
    admissible: np.ndarray   # (...,) bool, per element


def _gradients(states, diff, spacings, first_axis):
    """Nodal gradients, shape (..., dim, m); spatial axes start at first_axis."""
    dim = len(spacings)
    grads = np.empty(states.shape[:-1] + (dim, states.shape[-1]))
    for j in range(dim):
        grads[..., j, :] = apply_matrix(diff / spacings[j], states, first_axis + j)
    return grads


def _rhs_conservative(q, system, spacings, tables, width):
    """S - div F - B.grad q at every node of q (..., nodes, T, m)."""
    dim = system.dim
    m = system.n_vars
    diff = tables.diff
    first_axis = q.ndim - 2 - dim
    grads = _gradients(q, diff, spacings, first_axis) if system.has_ncp else None
    flat = q.reshape(-1, m)
    flat_g = grads.reshape(-1, dim, m) if grads is not None else None
    flux, ncp, source, _ = kernels.eval_blocked(
        flat, system, flat_g, width=width or max(flat.shape[0], 1),
        need_ok=False)
    out = source.reshape(q.shape) - ncp.reshape(q.shape)
    if system.has_flux:
        flux = flux.reshape(q.shape[:-1] + (dim, m))
        for j in range(dim):
            out -= apply_matrix(diff / spacings[j], flux[..., j, :], first_axis + j)
    return out, None


def _rhs_primitive(v, system, spacings, tables, dim):
    grads = _gradients(v, tables.diff, spacings, v.ndim - 2 - dim)
    return system.primitive_rhs(v, grads)


def startup_guess(u, system, spacings, dt, tables, mode="conservative", width=None):
    """Initial space-time iterate from one or two explicit evaluations.

    Degree 0/1 use a single forward evaluation (MUSCL-like linear-in-time
    guess); degree >= 2 uses the two-evaluation third-order guess
    u + s*k1 + s^2 (k2 - k1)/(2 dt), s = t - t_n.
    """
    degree = tables.degree
    ops = time_operators(degree)
    dim = system.dim
    if mode == "primitive":
        u = system.cons_to_prim(u)
        rate = lambda s: _rhs_primitive(s, system, spacings, tables, dim)
        k1 = rate(_expand_time(u, 1))[..., 0, :]
    else:
        rate = lambda s: _rhs_conservative(s, system, spacings, tables, width)[0]
        k1 = rate(_expand_time(u, 1))[..., 0, :]
    tau = ops.tau
    q = np.empty(u.shape[:-1] + (degree + 1, u.shape[-1]))
    if degree <= 1:
        for t in range(degree + 1):
            q[..., t, :] = u + (tau[t] * dt) * k1
    else:
        k2 = rate(_expand_time(u + dt * k1, 1))[..., 0, :]
        for t in range(degree + 1):
            s = tau[t] * dt
            q[..., t, :] = u + s * k1 + (0.5 * s * s / dt) * (k2 - k1)
    return q


def _expand_time(u, n_time):
    """Insert a time axis of length n_time before the quantity axis."""
    rep = np.repeat(u[..., None, :], n_time, axis=-2)
    return rep


def picard_solve(u, system, spacings, dt, tables, tol=1e-12, max_iter=None,
                 mode="conservative", width=None, initial=None):
    """Iterate the space-time weak form to its fixed point.

    Args:
        u: (..., n_1..n_d, m) element polynomials at t_n.
        spacings: element widths per dimension.
        dt: time step.
        tol: relative residual target (discrete L2 per element).
        max_iter: defaults to 2*degree + 2.
        mode: "conservative" iterates conserved states; "primitive"
            iterates primitive states and converts the result back.
        initial: optional space-time iterate overriding the startup guess.

    Returns:
        PredictorResult; `converged` is False for elements still above
        tol at max_iter, `admissible` is False where the converged
        space-time states leave the physical region.  Neither aborts:
        the caller routes such elements to the subcell fallback.
    """
    degree = tables.degree
    dim = system.dim
    ops = time_operators(degree)
    if max_iter is None:
        max_iter = 2 * degree + 2
    primitive = mode == "primitive"
    if initial is None:
        q = startup_guess(u, system, spacings, dt, tables, mode=mode, width=width)
    else:
        q = np.array(initial, dtype=float)
    u_iter = system.cons_to_prim(u) if primitive else u
    batch_axes = tuple(range(u.ndim - 1 - dim))
    red_axes = tuple(range(u.ndim - 1 - dim, q.ndim))
    n_iter = 0
    converged = np.zeros(u.shape[:-1 - dim], dtype=bool)
    for _ in range(max_iter):
        if primitive:
            rate = _rhs_primitive(q, system, spacings, tables, dim)
        else:
            rate, _ = _rhs_conservative(q, system, spacings, tables, width)
        q_new = apply_matrix(ops.gw, rate, -2)
        q_new *= dt
        q_new += ops.g0[:, None] * u_iter[..., None, :]
        n_iter += 1
        # ||K1 (q - q_new)|| <= opnorm(K1) ||q - q_new|| keeps the
        # residual guarantee without applying K1 every sweep.
        diff = q - q_new
        res = ops.k1_opnorm * np.sqrt(np.sum(diff * diff, axis=red_axes))
        scale = 1.0 + np.sqrt(np.sum(q_new * q_new, axis=red_axes))
        q = q_new
        converged = res <= tol * scale
        if np.all(converged):
            break
    q_cons = system.prim_to_cons(q) if primitive else q
    ok = np.all(system.admissible(q_cons), axis=tuple(range(len(batch_axes), q.ndim - 1)))
    return PredictorResult(q=q_cons, iterations=n_iter,
                           converged=converged, admissible=ok)


def weak_form_defect(q, u, system, spacings, dt, tables, mode="conservative", width=None):
    """Relative residual of the space-time weak form at the given iterate.

    Test hook: measures, per element, ||K1 q - (phi(0) u + dt w L(q))||
    over all space-time DOFs, divided by 1 + ||q||.
    """
    dim = system.dim
    ops = time_operators(tables.degree)
    if mode == "primitive":
        q_it = system.cons_to_prim(q)
        u_it = system.cons_to_prim(u)
        rate = _rhs_primitive(q_it, system, spacings, tables, dim)
    else:
        q_it, u_it = q, u
        rate, _ = _rhs_conservative(q, system, spacings, tables, width)
    lhs = apply_matrix(ops.k1, q_it, -2)
    rhs = np.einsum("t,...v->...tv", tables.left_vals, u_it) \
        + dt * ops.w[:, None] * rate
    red_axes = tuple(range(u.ndim - 1 - dim, q.ndim))
    res = np.sqrt(np.sum((lhs - rhs) ** 2, axis=red_axes))
    scale = 1.0 + np.sqrt(np.sum(q_it * q_it, axis=red_axes))
    return res / scale


def extract_traces(q, tables, dim):
    """Element-boundary states of the space-time polynomial.

    Returns a dict {(j, side): array} where side 0 is the low face and 1
    the high face along dimension j; each array drops spatial axis j,
    keeping (..., tangential nodes, T, m).
    """
    traces = {}
    for j in range(dim):
        axis = q.ndim - 2 - dim + j
        traces[(j, 0)] = np.tensordot(tables.left_vals, q, axes=(0, axis))
        traces[(j, 1)] = np.tensordot(tables.right_vals, q, axes=(0, axis))
    return traces
