"""Batched evaluation kernels.

State collections live in AoS order (quantity index fastest).  PDE
evaluation transposes each block to SoA on the fly, evaluates every lane
with identical elementwise operations, and transposes back, so results
match a per-point scalar loop bit for bit.  The block width is a run
configuration, not a hardware probe.
"""

from collections import namedtuple

import numpy as np

DEFAULT_BLOCK_WIDTH = 8

BlockEval = namedtuple("BlockEval", "flux ncp source ok")


def aos_to_soa(block):
    """(n_points, n_vars) AoS -> contiguous (n_vars, n_points) SoA."""
    block = np.asarray(block)
    if block.ndim != 2:
        raise ValueError("expected a 2-D (points, quantities) block")
    return np.ascontiguousarray(block.T)


def soa_to_aos(block):
    """(n_vars, n_points) SoA -> contiguous (n_points, n_vars) AoS."""
    block = np.asarray(block)
    if block.ndim != 2:
        raise ValueError("expected a 2-D (quantities, points) block")
    return np.ascontiguousarray(block.T)


def block_slices(n_points, width):
    """Yield index slices covering 0..n_points in chunks of `width`.

    The final slice is ragged when width does not divide n_points.
    """
    if width < 1:
        raise ValueError("block width must be >= 1")
    for start in range(0, n_points, width):
        yield slice(start, min(start + width, n_points))


def eval_block(states_soa, system, grads_soa=None):
    """Evaluate flux/NCP/source on one SoA block of states.

    Args:
        states_soa: (n_vars, W) block.
        system: HyperbolicSystem.
        grads_soa: optional (dim, n_vars, W) gradient block; required for
            the NCP term of systems that have one.

    Returns:
        BlockEval with flux (dim, n_vars, W), ncp (n_vars, W), source
        (n_vars, W) and per-lane admissibility flags ok (W,).
    """
    q = states_soa.T  # (W, n_vars) view; rows of the SoA block stay contiguous
    ok = system.admissible(q)
    flux = np.moveaxis(system.flux(q), 0, -1) if system.has_flux else \
        np.zeros((system.dim, system.n_vars, states_soa.shape[1]))
    if system.has_ncp:
        if grads_soa is None:
            raise ValueError(f"{system.name} needs gradients for its NCP term")
        grad = np.moveaxis(grads_soa, -1, 0)  # (W, dim, n_vars) view
        ncp = np.ascontiguousarray(system.ncp(q, grad).T)
    else:
        ncp = np.zeros((system.n_vars, states_soa.shape[1]))
    source = np.ascontiguousarray(system.source(q).T) if system.has_source \
        else np.zeros((system.n_vars, states_soa.shape[1]))
    return BlockEval(flux=flux, ncp=ncp, source=source, ok=ok)


def eval_blocked(states, system, grads=None, width=DEFAULT_BLOCK_WIDTH,
                 need_ok=True):
    """Blocked AoS evaluation over an arbitrary number of points.

    Args:
        states: (n_points, n_vars) AoS array.
        grads: optional (n_points, dim, n_vars) AoS gradients.
        width: lanes per block.
        need_ok: when False, skip the admissibility screen and return
            ok=None (callers that re-check the final state elsewhere).

    Returns:
        (flux, ncp, source, ok) in AoS order: flux (n_points, dim, n_vars),
        ncp and source (n_points, n_vars), ok (n_points,).
    """
    n = states.shape[0]
    if width >= n:
        # One block covers everything: evaluate on the AoS arrays as is.
        # The lane arithmetic is elementwise, so results are bitwise
        # identical to the transposed path.
        ok = system.admissible(states) if need_ok else None
        flux = system.flux(states) if system.has_flux else \
            np.zeros((n, system.dim, system.n_vars))
        if system.has_ncp:
            if grads is None:
                raise ValueError(f"{system.name} needs gradients for its "
                                 "NCP term")
            ncp = system.ncp(states, grads)
        else:
            ncp = np.zeros((n, system.n_vars))
        source = system.source(states) if system.has_source else \
            np.zeros((n, system.n_vars))
        return flux, ncp, source, ok
    flux = np.empty((n, system.dim, system.n_vars))
    ncp = np.empty((n, system.n_vars))
    source = np.empty((n, system.n_vars))
    ok = np.empty(n, dtype=bool) if need_ok else None
    for sl in block_slices(n, width):
        g = None if grads is None else np.ascontiguousarray(
            np.moveaxis(grads[sl], 0, -1))
        out = eval_block(aos_to_soa(states[sl]), system, g)
        flux[sl] = np.moveaxis(out.flux, -1, 0)
        ncp[sl] = out.ncp.T
        source[sl] = out.source.T
        if need_ok:
            ok[sl] = out.ok
    return flux, ncp, source, ok


def eval_scalar(states, system, grads=None):
    """Reference per-point loop; the oracle the blocked path must match."""
    n = states.shape[0]
    flux = np.empty((n, system.dim, system.n_vars))
    ncp = np.empty((n, system.n_vars))
    source = np.empty((n, system.n_vars))
    ok = np.empty(n, dtype=bool)
    for i in range(n):
        q = states[i]
        ok[i] = system.admissible(q)
        flux[i] = system.flux(q) if system.has_flux else 0.0
        if system.has_ncp:
            ncp[i] = system.ncp(q, grads[i])
        else:
            ncp[i] = 0.0
        source[i] = system.source(q) if system.has_source else 0.0
    return flux, ncp, source, ok


def throughput_per_dof(wct_seconds, n_elements, n_steps, degree, dim):
    """Wall-clock microseconds spent per element degree of freedom update.

    Normalises total run time by elements * steps * (N+1)^d.
    """
    if min(n_elements, n_steps) < 1:
        raise ValueError("need at least one element and one step")
    dof = n_elements * n_steps * (degree + 1) ** dim
    return wct_seconds / dof * 1e6
