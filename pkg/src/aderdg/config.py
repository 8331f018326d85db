"""Run configuration: flat key=value files with line-precise errors.

Format rules: one `key = value` pair per line, `#` starts a comment,
blank lines are ignored.  Unknown keys are errors; duplicate keys keep
the last value and record a warning.  All violations in a file are
collected and reported together.

Recognized keys
---------------
system            advection | euler | elasticity-di
N                 polynomial degree, integer >= 0
d                 space dimension, 1..3
cells             cell count, one integer or a comma list per axis
extent_<j>        "lo,hi" domain bounds for axis j (0-based)
cfl               CFL factor, must satisfy cfl < 1/(2N+1)
tend              final time, > 0
bc                boundary kind for every face
bc_<j>            kind, or "low,high" pair, for axis j
ic                initial-condition name from the problem registry
ic.<param>        numeric parameter forwarded to the builder
limiter           on/off
dmp_delta0        absolute slack of the troubled-cell bounds
dmp_eps           relative slack of the troubled-cell bounds
predictor         conservative | primitive
batch_width       PDE evaluation block width, >= 1
output_every      snapshot cadence in steps, 0 = final diagnostics only
output_dir        output directory
output_format     csv | vtk
output_prefix     snapshot filename prefix
gamma             ratio of specific heats (euler only)
velocity          advection speed, one number or a comma list (advection)
error_var         quantity index used for error norms
"""

from dataclasses import dataclass, field

from . import limiter
from .driver import BOUNDARY_KINDS, Simulation, default_cfl
from .mesh import CartesianMesh
from .problems import PROBLEMS, build_problem
from .systems import make_system

_SYSTEM_NAMES = ("advection", "euler", "elasticity-di")
_PREDICTOR_MODES = ("conservative", "primitive")
_OUTPUT_FORMATS = ("csv", "vtk")


class ConfigError(ValueError):
    """All constraint violations found in one config text."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass
class RunConfig:
    system: str = None
    degree: int = None
    dim: int = None
    cells: tuple = None
    extents: tuple = None
    cfl: float = None
    tend: float = None
    bc: object = None
    ic: str = None
    ic_params: dict = field(default_factory=dict)
    limiter: bool = False
    dmp_delta0: float = None
    dmp_eps: float = None
    predictor: str = "conservative"
    batch_width: int = None
    output_every: int = 0
    output_dir: str = "."
    output_format: str = "csv"
    output_prefix: str = "fields"
    gamma: float = None
    velocity: tuple = None
    error_var: int = 0
    warnings: list = field(default_factory=list, compare=False)


def _parse_int(text):
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"expected an integer, got '{text}'")


def _parse_float(text):
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"expected a number, got '{text}'")


def _parse_bool(text):
    low = text.lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got '{text}'")


def _parse_int_list(text):
    return tuple(_parse_int(v.strip()) for v in text.split(","))

def _parse_float_list(text):
    return tuple(_parse_float(v.strip()) for v in text.split(","))


def _parse_extent(text):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected 'low,high', got '{text}'")
    lo, hi = (_parse_float(p) for p in parts)
    if hi <= lo:
        raise ValueError(f"empty extent ({lo}, {hi})")
    return (lo, hi)


def _parse_choice(text, allowed, label):
    if text not in allowed:
        raise ValueError(f"unknown {label} '{text}' "
                         f"(choose from {', '.join(allowed)})")
    return text


def _parse_bc_kind(text):
    return _parse_choice(text, BOUNDARY_KINDS, "boundary kind")


def _parse_bc_axis(text):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) == 1:
        return _parse_bc_kind(parts[0])
    if len(parts) == 2:
        return tuple(_parse_bc_kind(p) for p in parts)
    raise ValueError(f"expected one kind or 'low,high' pair, got '{text}'")


_SCALAR_KEYS = {
    "system": ("system",
               lambda v: _parse_choice(v, _SYSTEM_NAMES, "system")),
    "N": ("degree", _parse_int),
    "d": ("dim", _parse_int),
    "cells": ("cells", _parse_int_list),
    "cfl": ("cfl", _parse_float),
    "tend": ("tend", _parse_float),
    "bc": ("bc", _parse_bc_kind),
    "ic": ("ic",
           lambda v: _parse_choice(v, tuple(sorted(PROBLEMS)), "problem")),
    "limiter": ("limiter", _parse_bool),
    "dmp_delta0": ("dmp_delta0", _parse_float),
    "dmp_eps": ("dmp_eps", _parse_float),
    "predictor": ("predictor",
                  lambda v: _parse_choice(v, _PREDICTOR_MODES,
                                          "predictor mode")),
    "batch_width": ("batch_width", _parse_int),
    "output_every": ("output_every", _parse_int),
    "output_dir": ("output_dir", str),
    "output_format": ("output_format",
                      lambda v: _parse_choice(v, _OUTPUT_FORMATS,
                                              "output format")),
    "output_prefix": ("output_prefix", str),
    "gamma": ("gamma", _parse_float),
    "velocity": ("velocity", _parse_float_list),
    "error_var": ("error_var", _parse_int),
}


def parse_config(text):
    """Parse and validate a config text; raises ConfigError listing every
    violation, each tagged with its line number."""
    cfg = RunConfig()
    extents = {}
    bc_axes = {}
    errors = []
    line_of = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', "
                          f"got '{line}'")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key in line_of:
            cfg.warnings.append(
                f"line {lineno}: duplicate key '{key}' overrides "
                f"line {line_of[key]}")
        line_of[key] = lineno

        try:
            if key in _SCALAR_KEYS:
                attr, parse = _SCALAR_KEYS[key]
                setattr(cfg, attr, parse(value))
            elif key.startswith("ic."):
                name = key[3:]
                if not name:
                    raise ValueError("empty parameter name")
                cfg.ic_params[name] = _parse_float(value)
            elif key.startswith("extent_"):
                extents[_parse_int(key[7:])] = _parse_extent(value)
            elif key.startswith("bc_"):
                bc_axes[_parse_int(key[3:])] = _parse_bc_axis(value)
            else:
                raise ValueError(f"unknown key '{key}'")
        except ValueError as exc:
            errors.append(f"line {lineno}: {exc}")

    def complain(key, message):
        errors.append(f"line {line_of.get(key, '?')}: {message}")

    if cfg.degree is not None and cfg.degree < 0:
        complain("N", f"N must be >= 0, got {cfg.degree}")
    if cfg.dim is not None and not 1 <= cfg.dim <= 3:
        complain("d", f"d must be 1, 2 or 3, got {cfg.dim}")
    if cfg.cells is not None and any(n < 1 for n in cfg.cells):
        complain("cells", f"cell counts must be positive, got {cfg.cells}")
    if cfg.tend is not None and cfg.tend <= 0.0:
        complain("tend", f"tend must be positive, got {cfg.tend}")
    if cfg.batch_width is not None and cfg.batch_width < 1:
        complain("batch_width",
                 f"batch_width must be >= 1, got {cfg.batch_width}")
    if cfg.output_every < 0:
        complain("output_every",
                 f"output_every must be >= 0, got {cfg.output_every}")
    if cfg.error_var < 0:
        complain("error_var",
                 f"error_var must be >= 0, got {cfg.error_var}")
    if cfg.cfl is not None:
        # the one-step scheme is provably unstable at or above 1/(2N+1)
        degree = cfg.degree if cfg.degree is not None else 3
        bound = 1.0 / (2 * degree + 1)
        if not 0.0 < cfg.cfl < bound:
            complain("cfl", f"cfl must lie in (0, {bound:.6g}) for "
                            f"N={degree}, got {cfg.cfl}")
    if cfg.gamma is not None and cfg.system not in (None, "euler"):
        complain("gamma", "gamma only applies to the euler system")
    if cfg.velocity is not None and cfg.system not in (None, "advection"):
        complain("velocity", "velocity only applies to the advection system")
    if extents:
        axes = sorted(extents)
        if axes != list(range(len(axes))):
            complain(f"extent_{axes[-1]}",
                     f"extent axes must be 0..{len(axes) - 1}, got {axes}")
        else:
            cfg.extents = tuple(extents[j] for j in axes)
    if bc_axes:
        bad = [j for j in bc_axes if not 0 <= j <= 2]
        if bad:
            complain(f"bc_{bad[0]}", f"bc axis out of range: {bad[0]}")
        else:
            cfg.bc = dict(sorted(bc_axes.items()))

    if errors:
        raise ConfigError(errors)
    return cfg


def _format_value(value):
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg):
    """Emit a canonical config text; parsing it reproduces `cfg`."""
    lines = []

    def put(key, value):
        lines.append(f"{key} = {_format_value(value)}")

    for key, (attr, _) in _SCALAR_KEYS.items():
        if key == "bc":
            continue
        value = getattr(cfg, attr)
        default = RunConfig.__dataclass_fields__[attr].default
        if value is not None and value != default:
            put(key, value)
    if cfg.extents is not None:
        for j, ext in enumerate(cfg.extents):
            put(f"extent_{j}", ext)
    if isinstance(cfg.bc, str):
        put("bc", cfg.bc)
    elif isinstance(cfg.bc, dict):
        for j, kind in cfg.bc.items():
            put(f"bc_{j}", kind)
    for name in sorted(cfg.ic_params):
        put(f"ic.{name}", cfg.ic_params[name])
    return "\n".join(lines) + "\n"


def assemble(cfg):
    """Build a ready-to-run Simulation from a parsed config.

    Unset fields fall back to the problem registry (geometry, boundary,
    final time) and then to generic defaults.  Returns (sim, tend).
    """
    ic_name = cfg.ic if cfg.ic is not None else "constant"
    spec = PROBLEMS[ic_name]

    system_name = cfg.system if cfg.system is not None else spec.system
    if system_name is None:
        system_name = "advection"
    if spec.system is not None and system_name != spec.system:
        raise ConfigError([f"problem '{ic_name}' needs system "
                           f"'{spec.system}', got '{system_name}'"])

    dim = cfg.dim
    if dim is None:
        dim = spec.dim if spec.dim is not None else 1

    params = {}
    if cfg.gamma is not None:
        params["gamma"] = cfg.gamma
    if cfg.velocity is not None:
        vel = cfg.velocity
        if len(vel) == 1 and dim > 1:
            vel = vel * dim
        params["velocity"] = vel
    try:
        system = make_system(system_name, dim, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError([f"cannot build system '{system_name}': {exc}"])

    extents = cfg.extents
    if extents is None:
        extents = spec.extents if spec.extents is not None \
            else ((0.0, 1.0),) * dim
    if len(extents) != dim:
        raise ConfigError([f"{len(extents)} extents given for a "
                           f"{dim}-D run"])

    cells = cfg.cells if cfg.cells is not None else (10,)
    if len(cells) == 1 and dim > 1:
        cells = cells * dim
    if len(cells) != dim:
        raise ConfigError([f"{len(cells)} cell counts given for a "
                           f"{dim}-D run"])

    degree = cfg.degree if cfg.degree is not None else 3
    cfl = cfg.cfl if cfg.cfl is not None else default_cfl(degree)
    boundary = cfg.bc if cfg.bc is not None else spec.boundary
    tend = cfg.tend if cfg.tend is not None else spec.suggested_tend

    try:
        ic, exact = build_problem(ic_name, system, **cfg.ic_params)
    except (TypeError, ValueError) as exc:
        raise ConfigError([f"cannot build problem '{ic_name}': {exc}"])

    try:
        mesh = CartesianMesh(extents, cells)
        sim = Simulation(
            mesh, system, degree, cfl,
            boundary=boundary,
            use_limiter=cfg.limiter,
            predictor_mode=cfg.predictor,
            exact_solution=exact,
            dmp_delta0=cfg.dmp_delta0 if cfg.dmp_delta0 is not None
            else limiter.DMP_DELTA0,
            dmp_eps=cfg.dmp_eps if cfg.dmp_eps is not None else limiter.DMP_EPS,
            batch_width=cfg.batch_width,
        )
    except ValueError as exc:
        raise ConfigError([str(exc)])
    sim.project_initial_condition(ic)
    return sim, tend
