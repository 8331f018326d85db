"""Initial conditions and reference solutions for the bundled test cases.

Each builder takes the system instance plus problem parameters and
returns (ic, exact) callables: ic(points) -> states and, where a closed
form exists, exact(points, t) -> states (None otherwise).  Points carry
the coordinate on the last axis; states append the quantity axis.
"""

import numpy as np

from .systems import DiffuseInterfaceElasticity


def isentropic_vortex(system, beta=5.0, center=(5.0, 5.0),
                      domain_size=(10.0, 10.0)):
    """Smooth vortex advecting diagonally through a periodic box.

    Free stream (rho, u, v, p) = (1, 1, 1, 1); the perturbation decays
    like exp((1 - r^2)/2) around the moving centre, so the state is
    smooth and the exact solution is pure translation.
    """
    if system.name != "euler" or system.dim != 2:
        raise ValueError("the vortex case needs 2-D Euler")
    gamma = system.gamma
    beta = float(beta)
    cx, cy = (float(v) for v in center)
    sx, sy = (float(v) for v in domain_size)

    def state_at(dx, dy):
        r2 = dx * dx + dy * dy
        envelope = np.exp(0.5 * (1.0 - r2))
        du = -beta / (2.0 * np.pi) * envelope * dy
        dv = beta / (2.0 * np.pi) * envelope * dx
        temp = 1.0 - (gamma - 1.0) * beta * beta \
            / (8.0 * gamma * np.pi * np.pi) * np.exp(1.0 - r2)
        rho = temp ** (1.0 / (gamma - 1.0))
        p = temp ** (gamma / (gamma - 1.0))
        u = 1.0 + du
        v = 1.0 + dv
        e = p / (gamma - 1.0) + 0.5 * rho * (u * u + v * v)
        return np.stack([rho, rho * u, rho * v, e], axis=-1)

    def exact(points, t):
        # displacement from the advected centre, wrapped periodically
        dx = points[..., 0] - cx - t
        dy = points[..., 1] - cy - t
        dx -= sx * np.round(dx / sx)
        dy -= sy * np.round(dy / sy)
        return state_at(dx, dy)

    return (lambda points: exact(points, 0.0)), exact


def advected_sine(system):
    """sin(2 pi sum(x_j)) transported by a constant velocity field."""
    if system.name != "advection":
        raise ValueError("the sine case needs the advection system")
    vel = system.velocity

    def exact(points, t):
        phase = np.zeros(points.shape[:-1])
        for j in range(system.dim):
            phase += points[..., j] - vel[j] * t
        return np.sin(2.0 * np.pi * phase)[..., None]

    return (lambda points: exact(points, 0.0)), exact


def gaussian_pulse(system, center=0.25, width=0.08, amplitude=1.0):
    """Compact smooth pulse; exact solution translates without wrapping."""
    if system.name != "advection":
        raise ValueError("the pulse case needs the advection system")
    vel = system.velocity

    def exact(points, t):
        r2 = np.zeros(points.shape[:-1])
        for j in range(system.dim):
            d = points[..., j] - center - vel[j] * t
            r2 += d * d
        return (amplitude * np.exp(-r2 / (2.0 * width * width)))[..., None]

    return (lambda points: exact(points, 0.0)), exact


def step_function(system, position=0.5, left=1.0, right=0.0):
    """Discontinuous transport profile; trips the troubled-cell screen."""
    if system.name != "advection":
        raise ValueError("the step case needs the advection system")

    def ic(points):
        return np.where(points[..., 0] < position, left, right)[..., None]

    return ic, None


def sod_shock_tube(system, split=0.5):
    """Standard two-state Riemann problem (1, 0, 1) | (0.125, 0, 0.1)."""
    if system.name != "euler" or system.dim != 1:
        raise ValueError("the shock tube needs 1-D Euler")
    gamma = system.gamma

    def ic(points):
        x = points[..., 0]
        rho = np.where(x < split, 1.0, 0.125)
        p = np.where(x < split, 1.0, 0.1)
        e = p / (gamma - 1.0)
        mom = np.zeros_like(rho)
        return np.stack([rho, mom, e], axis=-1)

    return ic, None


def blast_2d(system, r0=0.1, e0=1.0, p_ambient=1e-14):
    """Point-like energy deposition into a near-vacuum ambient gas.

    Pressure inside radius r0 comes from spreading e0 uniformly over the
    disc; outside it drops to p_ambient.  Density is 1 everywhere, the
    gas starts at rest.
    """
    if system.name != "euler" or system.dim != 2:
        raise ValueError("the blast case needs 2-D Euler")
    gamma = system.gamma
    p_inside = (gamma - 1.0) * e0 / (np.pi * r0 * r0)

    def ic(points):
        r2 = points[..., 0] ** 2 + points[..., 1] ** 2
        p = np.where(r2 <= r0 * r0, p_inside, p_ambient)
        rho = np.ones_like(p)
        zero = np.zeros_like(p)
        return np.stack([rho, zero, zero, p / (gamma - 1.0)], axis=-1)

    return ic, None


def elastic_pwave(system, alpha_min=1e-3, interface=0.7, pulse_center=0.3,
                  pulse_width=0.05, amplitude=1e-3, lam=2.0, mu=1.0, rho=1.0,
                  interface_width=0.05):
    """Plane compressional pulse running toward a solid/void transition.

    Left of `interface` the volume fraction is 1 (solid); right of it
    alpha_min.  The transition follows a tanh ramp of scale
    `interface_width`: projecting a zero-width jump onto the basis is
    linearly unstable (the 1/alpha coupling across a face then dwarfs
    the jump dissipation), while a ramp of one to two cells is stable
    and converges to the free-surface limit as it narrows with the
    grid.  The pulse is a right-moving plane wave, so before any
    reflection the exact solution is translation at c_p.
    """
    if system.name != "elasticity-di":
        raise ValueError("the P-wave case needs the diffuse-interface system")
    if interface_width <= 0.0:
        raise ValueError("interface_width must be positive")
    c = DiffuseInterfaceElasticity
    cp = np.sqrt((lam + 2.0 * mu) / rho)

    def exact(points, t):
        x = points[..., 0]
        vx = amplitude * np.exp(-((x - pulse_center - cp * t) / pulse_width) ** 2)
        sxx = -rho * cp * vx
        syy = lam / (lam + 2.0 * mu) * sxx
        ramp = 0.5 * (1.0 - np.tanh((x - interface) / interface_width))
        alpha = alpha_min + (1.0 - alpha_min) * ramp
        out = np.zeros(points.shape[:-1] + (9,))
        out[..., c.SXX] = sxx
        out[..., c.SYY] = syy
        out[..., c.AVX] = alpha * vx
        out[..., c.ALPHA] = alpha
        out[..., c.LAM] = lam
        out[..., c.MU] = mu
        out[..., c.RHO] = rho
        return out

    return (lambda points: exact(points, 0.0)), None


def constant_state(system, values=None):
    """Spatially uniform state; the exact solution is itself."""
    if values is None:
        defaults = {
            "advection": [0.75],
            "euler": [1.0] + [0.1] * system.dim + [2.5],
            "elasticity-di": [0.3, 0.2, 0.1, 0.05, -0.04, 0.7, 2.0, 1.0, 1.0],
        }
        values = defaults[system.name]
    q0 = np.asarray(values, dtype=float)
    if q0.shape != (system.n_vars,):
        raise ValueError(f"constant state needs {system.n_vars} entries")

    def exact(points, t):
        return np.broadcast_to(q0, points.shape[:-1] + q0.shape).copy()

    return (lambda points: exact(points, 0.0)), exact


class ProblemSpec:
    """Registry entry tying a case name to its system and geometry."""

    def __init__(self, builder, system, dim, extents, boundary,
                 suggested_tend):
        self.builder = builder
        self.system = system
        self.dim = dim
        self.extents = extents
        self.boundary = boundary
        self.suggested_tend = suggested_tend


PROBLEMS = {
    "vortex": ProblemSpec(isentropic_vortex, "euler", 2,
                          ((0.0, 10.0), (0.0, 10.0)), "periodic", 10.0),
    "sine": ProblemSpec(advected_sine, "advection", None,
                        None, "periodic", 1.0),
    # copy boundaries are only well-posed where characteristics leave,
    # so the pulse case feeds the upwind side from its reference solution
    "pulse": ProblemSpec(gaussian_pulse, "advection", None,
                         None, {0: ("exact", "outflow")}, 0.5),
    "step": ProblemSpec(step_function, "advection", None,
                        None, "periodic", 0.5),
    "sod": ProblemSpec(sod_shock_tube, "euler", 1,
                       ((0.0, 1.0),), "outflow", 0.2),
    "blast": ProblemSpec(blast_2d, "euler", 2,
                         ((-1.0, 1.0), (-1.0, 1.0)), "wall", 0.05),
    "pwave": ProblemSpec(elastic_pwave, "elasticity-di", 2,
                         ((0.0, 1.0), (0.0, 0.25)), "outflow", 0.15),
    "constant": ProblemSpec(constant_state, None, None,
                            None, "periodic", 1.0),
}


def build_problem(name, system, **params):
    """Look up a case and build its (ic, exact) pair for `system`."""
    try:
        spec = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem '{name}' "
                         f"(choose from {sorted(PROBLEMS)})")
    if spec.system is not None and system.name != spec.system:
        raise ValueError(f"problem '{name}' needs the {spec.system} system, "
                         f"got {system.name}")
    if spec.dim is not None and system.dim != spec.dim:
        raise ValueError(f"problem '{name}' is {spec.dim}-D")
    return spec.builder(system, **params)
