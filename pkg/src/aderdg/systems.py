"""Hyperbolic PDE systems: fluxes, nonconservative products, wave speeds.

Every method is written quantity-by-quantity with plain elementwise
arithmetic so a call on a batch of states computes, lane for lane, the
exact same floating-point operations as a call on a single state.  State
arrays carry the quantity index in the last axis; gradients carry the
direction axis just before it, i.e. grad[..., j, v] is the j-derivative
of quantity v.
"""

import numpy as np

ALPHA_FLOOR = 1e-3


class HyperbolicSystem:
    """Base contract for first-order systems q_t + div F(q) + B(q).grad q = S(q)."""

    name = "base"
    has_flux = False
    has_ncp = False
    has_source = False
    identity_primitives = True
    # Per-quantity multiplier for the interface jump dissipation; None
    # means dissipate every component.  Fields with identically zero
    # time derivative (stationary material parameters) must carry 0
    # there: their exact face flux is zero, and smearing them feeds
    # back through any 1/parameter nonlinearity.
    diss_mask = None

    def __init__(self, dim, n_vars, quantity_names):
        self.dim = dim
        self.n_vars = n_vars
        self.quantity_names = tuple(quantity_names)

    def flux(self, q):
        """Physical flux, shape (..., dim, n_vars)."""
        return np.zeros(q.shape[:-1] + (self.dim, self.n_vars))

    def ncp(self, q, grad):
        """Nonconservative term B(q).grad q, shape (..., n_vars)."""
        return np.zeros(q.shape[:-1] + (self.n_vars,))

    def ncp_matrix(self, q, normal):
        """Matrix B(q).n of the nonconservative product, shape (..., n_vars, n_vars)."""
        return np.zeros(q.shape[:-1] + (self.n_vars, self.n_vars))

    def source(self, q):
        return np.zeros_like(q)

    def eigenvalues(self, q, normal):
        raise NotImplementedError

    def max_abs_eigenvalue(self, q, normal):
        lam = self.eigenvalues(q, normal)
        return np.max(np.abs(lam), axis=-1)

    def cons_to_prim(self, q):
        return q

    def prim_to_cons(self, v):
        return v

    def primitive_rhs(self, v, grad):
        """Time derivative in the quasi-linear primitive form."""
        raise NotImplementedError(f"{self.name} has no primitive-variable form")

    def admissible(self, q):
        """Pointwise physical admissibility, shape (...,) bool."""
        return np.all(np.isfinite(q), axis=-1)

    def reflect(self, q, axis):
        """Mirror state for a reflecting wall with normal along `axis`."""
        return q


class LinearAdvection(HyperbolicSystem):
    """Scalar transport q_t + a . grad q = 0 with constant velocity a."""

    name = "advection"
    has_flux = True

    def __init__(self, dim, velocity=None):
        super().__init__(dim, 1, ("q",))
        if velocity is None:
            velocity = [1.0] * dim
        self.velocity = np.asarray(velocity, dtype=float)
        if self.velocity.shape != (dim,):
            raise ValueError("advection velocity must have one entry per dimension")

    def flux(self, q):
        out = np.empty(q.shape[:-1] + (self.dim, 1))
        for j in range(self.dim):
            out[..., j, 0] = self.velocity[j] * q[..., 0]
        return out

    def eigenvalues(self, q, normal):
        a_n = float(np.dot(self.velocity, normal))
        return np.broadcast_to(a_n, q.shape[:-1] + (1,)).copy()

    def max_abs_eigenvalue(self, q, normal):
        a_n = abs(float(np.dot(self.velocity, normal)))
        return np.broadcast_to(a_n, q.shape[:-1]).copy()

    def primitive_rhs(self, v, grad):
        out = np.zeros_like(v)
        for j in range(self.dim):
            out[..., 0] -= self.velocity[j] * grad[..., j, 0]
        return out


class CompressibleEuler(HyperbolicSystem):
    """Ideal-gas Euler equations in d dimensions.

    Conserved state (rho, rho*v_1..d, rho*E); primitive state (rho,
    v_1..d, p) with p = (gamma-1)(rho*E - rho*|v|^2/2).
    """

    name = "euler"
    has_flux = True

    def __init__(self, dim, gamma=1.4):
        names = ("rho",) + tuple(f"mom_{'xyz'[j]}" for j in range(dim)) + ("energy",)
        super().__init__(dim, dim + 2, names)
        self.gamma = float(gamma)
        self.identity_primitives = False

    def pressure(self, q):
        rho = q[..., 0]
        kin = q[..., 1] * q[..., 1]
        for j in range(1, self.dim):
            kin = kin + q[..., 1 + j] * q[..., 1 + j]
        return (self.gamma - 1.0) * (q[..., -1] - 0.5 * kin / rho)

    def sound_speed(self, q):
        # unphysical probe states yield NaN and get screened downstream
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.sqrt(self.gamma * self.pressure(q) / q[..., 0])

    def flux(self, q):
        d = self.dim
        inv_rho = 1.0 / q[..., 0]
        kin = q[..., 1] * q[..., 1]
        for j in range(1, d):
            kin = kin + q[..., 1 + j] * q[..., 1 + j]
        p = (self.gamma - 1.0) * (q[..., -1] - 0.5 * kin * inv_rho)
        e_plus_p = q[..., d + 1] + p
        out = np.empty(q.shape[:-1] + (d, d + 2))
        for j in range(d):
            vj = q[..., 1 + j] * inv_rho
            out[..., j, 0] = q[..., 1 + j]
            for i in range(d):
                out[..., j, 1 + i] = q[..., 1 + i] * vj
            out[..., j, 1 + j] += p
            out[..., j, d + 1] = e_plus_p * vj
        return out

    def eigenvalues(self, q, normal):
        d = self.dim
        rho = q[..., 0]
        u_n = np.zeros_like(rho)
        for j in range(d):
            u_n = u_n + q[..., 1 + j] * normal[j]
        u_n = u_n / rho
        c = self.sound_speed(q)
        out = np.empty(q.shape[:-1] + (d + 2,))
        out[..., 0] = u_n - c
        for j in range(d):
            out[..., 1 + j] = u_n
        out[..., d + 1] = u_n + c
        return out

    def max_abs_eigenvalue(self, q, normal):
        rho = q[..., 0]
        u_n = np.zeros_like(rho)
        for j in range(self.dim):
            u_n = u_n + q[..., 1 + j] * normal[j]
        return np.abs(u_n / rho) + self.sound_speed(q)

    def cons_to_prim(self, q):
        out = np.empty_like(q)
        out[..., 0] = q[..., 0]
        for j in range(self.dim):
            out[..., 1 + j] = q[..., 1 + j] / q[..., 0]
        out[..., -1] = self.pressure(q)
        return out

    def prim_to_cons(self, v):
        out = np.empty_like(v)
        rho = v[..., 0]
        out[..., 0] = rho
        kin = v[..., 1] * v[..., 1]
        for j in range(1, self.dim):
            kin = kin + v[..., 1 + j] * v[..., 1 + j]
        for j in range(self.dim):
            out[..., 1 + j] = rho * v[..., 1 + j]
        out[..., -1] = v[..., -1] / (self.gamma - 1.0) + 0.5 * rho * kin
        return out

    def primitive_rhs(self, v, grad):
        # rho_t = -(v.grad rho + rho div v)
        # v_t   = -(v.grad v + grad p / rho)
        # p_t   = -(v.grad p + gamma p div v)
        d = self.dim
        rho = v[..., 0]
        p = v[..., -1]
        div_v = grad[..., 0, 1]
        for j in range(1, d):
            div_v = div_v + grad[..., j, 1 + j]
        out = np.empty_like(v)
        adv_rho = v[..., 1] * grad[..., 0, 0]
        adv_p = v[..., 1] * grad[..., 0, d + 1]
        for j in range(1, d):
            adv_rho = adv_rho + v[..., 1 + j] * grad[..., j, 0]
            adv_p = adv_p + v[..., 1 + j] * grad[..., j, d + 1]
        out[..., 0] = -(adv_rho + rho * div_v)
        for i in range(d):
            adv_vi = v[..., 1] * grad[..., 0, 1 + i]
            for j in range(1, d):
                adv_vi = adv_vi + v[..., 1 + j] * grad[..., j, 1 + i]
            out[..., 1 + i] = -(adv_vi + grad[..., i, d + 1] / rho)
        out[..., d + 1] = -(adv_p + self.gamma * p * div_v)
        return out

    def admissible(self, q):
        finite = np.all(np.isfinite(q), axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            pos = (q[..., 0] > 0.0) & (self.pressure(q) > 0.0)
        return finite & pos

    def reflect(self, q, axis):
        out = q.copy()
        out[..., 1 + axis] = -q[..., 1 + axis]
        return out


class DiffuseInterfaceElasticity(HyperbolicSystem):
    """Linear elasticity in 2-D with a diffuse solid boundary.

    State (sxx, syy, sxy, avx, avy, alpha, lam, mu, rho) where avx/avy are
    alpha-weighted velocities and alpha is the static volume fraction of
    solid material.  The system is a pure nonconservative product; wave
    speeds depend only on the material constants, not on alpha:

        c_p = sqrt((lam + 2 mu)/rho),  c_s = sqrt(mu/rho).

    A free surface arises where alpha drops to (near) zero: the jump terms
    drive the traction sigma.n to zero there.  1/alpha is evaluated with a
    floor at ALPHA_FLOOR.
    """

    name = "elasticity-di"
    has_ncp = True

    SXX, SYY, SXY, AVX, AVY, ALPHA, LAM, MU, RHO = range(9)
    # alpha and the material constants obey d/dt = 0: no jump dissipation
    diss_mask = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0])

    def __init__(self, dim=2):
        if dim != 2:
            raise ValueError("the diffuse-interface elasticity system is 2-D")
        names = ("sxx", "syy", "sxy", "avx", "avy", "alpha", "lam", "mu", "rho")
        super().__init__(2, 9, names)

    @staticmethod
    def _alpha_eff(q):
        return np.maximum(q[..., DiffuseInterfaceElasticity.ALPHA], ALPHA_FLOOR)

    def ncp(self, q, grad):
        c = self
        a = self._alpha_eff(q)
        lam, mu, rho = q[..., c.LAM], q[..., c.MU], q[..., c.RHO]
        vx = q[..., c.AVX] / a
        vy = q[..., c.AVY] / a
        gx, gy = grad[..., 0, :], grad[..., 1, :]
        # Effective velocity-gradient entries (d v_i / d x_j), built from
        # grad(alpha v) and grad(alpha) so alpha may jump cell to cell.
        dvx_dx = (gx[..., c.AVX] - vx * gx[..., c.ALPHA]) / a
        dvy_dy = (gy[..., c.AVY] - vy * gy[..., c.ALPHA]) / a
        dvx_dy = (gy[..., c.AVX] - vx * gy[..., c.ALPHA]) / a
        dvy_dx = (gx[..., c.AVY] - vy * gx[..., c.ALPHA]) / a
        out = np.zeros_like(q)
        out[..., c.SXX] = -(lam * (dvx_dx + dvy_dy) + 2.0 * mu * dvx_dx)
        out[..., c.SYY] = -(lam * (dvx_dx + dvy_dy) + 2.0 * mu * dvy_dy)
        out[..., c.SXY] = -mu * (dvx_dy + dvy_dx)
        out[..., c.AVX] = -(a * (gx[..., c.SXX] + gy[..., c.SXY])
                            + q[..., c.SXX] * gx[..., c.ALPHA]
                            + q[..., c.SXY] * gy[..., c.ALPHA]) / rho
        out[..., c.AVY] = -(a * (gx[..., c.SXY] + gy[..., c.SYY])
                            + q[..., c.SXY] * gx[..., c.ALPHA]
                            + q[..., c.SYY] * gy[..., c.ALPHA]) / rho
        return out

    def ncp_matrix(self, q, normal):
        c = self
        nx, ny = float(normal[0]), float(normal[1])
        a = self._alpha_eff(q)
        lam, mu, rho = q[..., c.LAM], q[..., c.MU], q[..., c.RHO]
        vx = q[..., c.AVX] / a
        vy = q[..., c.AVY] / a
        b = np.zeros(q.shape[:-1] + (9, 9))
        lp2m = lam + 2.0 * mu
        b[..., c.SXX, c.AVX] = -lp2m * nx / a
        b[..., c.SXX, c.AVY] = -lam * ny / a
        b[..., c.SXX, c.ALPHA] = (lp2m * vx * nx + lam * vy * ny) / a
        b[..., c.SYY, c.AVX] = -lam * nx / a
        b[..., c.SYY, c.AVY] = -lp2m * ny / a
        b[..., c.SYY, c.ALPHA] = (lam * vx * nx + lp2m * vy * ny) / a
        b[..., c.SXY, c.AVX] = -mu * ny / a
        b[..., c.SXY, c.AVY] = -mu * nx / a
        b[..., c.SXY, c.ALPHA] = mu * (vx * ny + vy * nx) / a
        b[..., c.AVX, c.SXX] = -a * nx / rho
        b[..., c.AVX, c.SXY] = -a * ny / rho
        b[..., c.AVX, c.ALPHA] = -(q[..., c.SXX] * nx + q[..., c.SXY] * ny) / rho
        b[..., c.AVY, c.SXY] = -a * nx / rho
        b[..., c.AVY, c.SYY] = -a * ny / rho
        b[..., c.AVY, c.ALPHA] = -(q[..., c.SXY] * nx + q[..., c.SYY] * ny) / rho
        return b

    def eigenvalues(self, q, normal):
        c_p = np.sqrt((q[..., self.LAM] + 2.0 * q[..., self.MU]) / q[..., self.RHO])
        c_s = np.sqrt(q[..., self.MU] / q[..., self.RHO])
        out = np.zeros(q.shape[:-1] + (9,))
        out[..., 0] = -c_p
        out[..., 1] = -c_s
        out[..., 7] = c_s
        out[..., 8] = c_p
        return out

    def max_abs_eigenvalue(self, q, normal):
        return np.sqrt((q[..., self.LAM] + 2.0 * q[..., self.MU]) / q[..., self.RHO])

    def primitive_rhs(self, v, grad):
        return -self.ncp(v, grad)

    def reflect(self, q, axis):
        out = q.copy()
        c = self
        if axis == 0:
            out[..., c.SXX] = -q[..., c.SXX]
            out[..., c.SXY] = -q[..., c.SXY]
        else:
            out[..., c.SYY] = -q[..., c.SYY]
            out[..., c.SXY] = -q[..., c.SXY]
        return out


_SYSTEMS = {
    "advection": LinearAdvection,
    "euler": CompressibleEuler,
    "elasticity-di": DiffuseInterfaceElasticity,
}


def make_system(name, dim, **params):
    """Instantiate a registered system by name."""
    try:
        cls = _SYSTEMS[name]
    except KeyError:
        raise ValueError(f"unknown system '{name}' (choose from {sorted(_SYSTEMS)})")
    return cls(dim, **params)
