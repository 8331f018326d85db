"""Gauss-Legendre nodal basis tables for tensor-product DG elements.

All one-dimensional objects live on the unit interval [0, 1].  The nodal
basis is the Lagrange basis through the Gauss-Legendre points, so the mass
matrix is diagonal with the quadrature weights on the diagonal and never
needs to be stored.
"""

import numpy as np

_MAX_DEGREE = 9
_NEWTON_TOL = 1e-15
_tables_cache = {}


def gauss_legendre(n_nodes):
    """Nodes and weights of the n-point Gauss-Legendre rule on [0, 1].

    Roots of the Legendre polynomial are found by Newton iteration seeded
    with Chebyshev-point initial guesses; the iteration is carried to
    1e-15 so the tables are reproducible to machine precision.

    Args:
        n_nodes: number of quadrature points (>= 1).

    Returns:
        (nodes, weights): two float arrays of length n_nodes, nodes in
        ascending order, weights summing to one.
    """
    if n_nodes < 1:
        raise ValueError("need at least one quadrature node")
    n = n_nodes
    # Chebyshev initial guesses on [-1, 1], descending.
    x = np.cos(np.pi * (np.arange(n) + 0.75) / (n + 0.5))
    for _ in range(100):
        p_prev, p = np.zeros_like(x), np.ones_like(x)
        for k in range(1, n + 1):
            p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
        # p = P_n(x), p_prev = P_{n-1}(x); standard derivative identity.
        dp = n * (x * p - p_prev) / (x * x - 1.0) if n > 0 else np.zeros_like(x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    p_prev, p = np.zeros_like(x), np.ones_like(x)
    for k in range(1, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    nodes = 0.5 * (1.0 + x[::-1])
    weights = 0.5 * w[::-1]
    return np.ascontiguousarray(nodes), np.ascontiguousarray(weights)


def lagrange_values(nodes, points):
    """Evaluate the Lagrange cardinal functions at arbitrary points.

    Args:
        nodes: interpolation nodes, shape (p,).
        points: evaluation points, shape (q,).

    Returns:
        Array of shape (q, p); entry [j, k] is the k-th cardinal function
        at points[j].  Rows sum to one (partition of unity).
    """
    nodes = np.asarray(nodes, dtype=float)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    p = nodes.size
    out = np.ones((points.size, p))
    for k in range(p):
        for j in range(p):
            if j != k:
                out[:, k] *= (points - nodes[j]) / (nodes[k] - nodes[j])
    return out


def lagrange_derivatives(nodes, points):
    """First derivatives of the Lagrange cardinal functions.

    Same layout as lagrange_values: entry [j, k] is d/dx of the k-th
    cardinal function at points[j].
    """
    nodes = np.asarray(nodes, dtype=float)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    p = nodes.size
    out = np.zeros((points.size, p))
    for k in range(p):
        denom = 1.0
        for j in range(p):
            if j != k:
                denom *= nodes[k] - nodes[j]
        for i in range(p):
            if i == k:
                continue
            term = np.ones(points.size)
            for j in range(p):
                if j != k and j != i:
                    term *= points - nodes[j]
            out[:, k] += term / denom
    return out


def derivative_matrix(nodes, weights, h=1.0):
    """Nodal derivative operator for an interval of width h.

    This is the diagonal-mass-inverse times the stiffness-transpose
    integral of the nodal basis; with Gauss-Legendre collocation it
    collapses to the cardinal-function derivatives sampled at the nodes,
    scaled by 1/h.  Applied from the left to nodal values it returns
    nodal values of the derivative.
    """
    if h <= 0.0:
        raise ValueError("interval width must be positive")
    return lagrange_derivatives(nodes, nodes) / h


def subcell_projection(nodes, weights):
    """Averages of the cardinal functions over 2N+1 equal subcells.

    Returns P of shape (2N+1, N+1): row s holds the exact mean of each
    cardinal function over subcell s, so P applied to nodal values gives
    subcell averages of the interpolant.
    """
    p = len(nodes)
    n_sub = 2 * (p - 1) + 1
    h_sub = 1.0 / n_sub
    proj = np.empty((n_sub, p))
    for s in range(n_sub):
        pts = h_sub * (s + np.asarray(nodes))
        vals = lagrange_values(nodes, pts)
        proj[s, :] = weights @ vals
    return proj


def subcell_recovery(projection, weights):
    """Least-squares inverse of the subcell projection.

    Recovers nodal values from 2N+1 subcell averages, subject to the
    element mean being reproduced exactly.  The single linear constraint
    is eliminated by substitution before solving the normal equations,
    so the result is a plain (N+1) x (2N+1) matrix.  Recovery composed
    with projection is the identity on nodal values.
    """
    proj = np.asarray(projection, dtype=float)
    w = np.asarray(weights, dtype=float)
    n_sub, p = proj.shape
    mean_row = np.full(n_sub, 1.0 / n_sub)
    piv = int(np.argmax(w))
    free = [k for k in range(p) if k != piv]
    if not free:
        return mean_row.reshape(1, n_sub).copy()
    # u = T z + e_piv * (mean / w_piv) parametrises the constraint
    # w . u = mean(ubar); z are the unconstrained free coefficients.
    t_mat = np.zeros((p, p - 1))
    for col, k in enumerate(free):
        t_mat[k, col] = 1.0
        t_mat[piv, col] = -w[k] / w[piv]
    a_mat = proj @ t_mat
    rhs = np.eye(n_sub) - np.outer(proj[:, piv], mean_row) / w[piv]
    z, *_ = np.linalg.lstsq(a_mat, rhs, rcond=None)
    rec = t_mat @ z
    rec[piv, :] += mean_row / w[piv]
    return rec


class BasisTables:
    """Immutable per-degree operator tables shared across the solver.

    Attributes:
        degree: polynomial degree N.
        nodes, weights: Gauss-Legendre rule on [0, 1], length N+1.
        diff: (N+1, N+1) nodal derivative operator for unit width.
        left_vals, right_vals: cardinal functions at 0 and 1.
        sub_project: (2N+1, N+1) nodal values -> subcell averages.
        sub_recover: (N+1, 2N+1) subcell averages -> nodal values.
        n_subcells: 2N+1.
    """

    def __init__(self, degree):
        if not 0 <= degree <= _MAX_DEGREE:
            raise ValueError(f"degree must be in 0..{_MAX_DEGREE}, got {degree}")
        self.degree = degree
        self.nodes, self.weights = gauss_legendre(degree + 1)
        self.diff = derivative_matrix(self.nodes, self.weights, 1.0)
        self.left_vals = lagrange_values(self.nodes, np.array([0.0]))[0]
        self.right_vals = lagrange_values(self.nodes, np.array([1.0]))[0]
        self.sub_project = subcell_projection(self.nodes, self.weights)
        self.sub_recover = subcell_recovery(self.sub_project, self.weights)
        self.n_subcells = 2 * degree + 1
        for arr in (self.nodes, self.weights, self.diff, self.left_vals,
                    self.right_vals, self.sub_project, self.sub_recover):
            arr.flags.writeable = False

    def __repr__(self):
        return f"BasisTables(degree={self.degree})"


def basis_tables(degree):
    """Cached BasisTables for the given degree (0..9)."""
    if degree not in _tables_cache:
        _tables_cache[degree] = BasisTables(degree)
    return _tables_cache[degree]
