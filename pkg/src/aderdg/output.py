"""CSV and VTK writers for run diagnostics and field snapshots.

All numbers are written with 17 significant digits so that re-parsing
reproduces the binary values exactly; for a fixed state the writers are
byte-deterministic.
"""

import os

import numpy as np

from . import corrector

AXIS_NAMES = ("x", "y", "z")


def fmt(value):
    return "%.17g" % value


def diagnostics_csv(history, quantity_names):
    """Per-step totals table: step,time,dt,<quantities>,limited_fraction."""
    header = ["step", "time", "dt", *quantity_names, "limited_fraction"]
    lines = [",".join(header)]
    for rec in history:
        row = [str(rec["step"]), fmt(rec["time"]), fmt(rec["dt"])]
        row += [fmt(v) for v in rec["totals"]]
        row.append(fmt(rec["limited_fraction"]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_diagnostics(path, history, quantity_names):
    with open(path, "w") as handle:
        handle.write(diagnostics_csv(history, quantity_names))
    return path


def fields_csv(sim):
    """One row per quadrature node: coordinates, time, quantities."""
    dim = sim.mesh.dim
    coords = sim.mesh.node_coords(sim.tables)
    pts = coords.reshape(-1, dim)
    vals = sim.u.reshape(-1, sim.system.n_vars)
    header = list(AXIS_NAMES[:dim]) + ["t"] + list(sim.system.quantity_names)
    lines = [",".join(header)]
    t_str = fmt(sim.t)
    for point, state in zip(pts, vals):
        row = [fmt(c) for c in point] + [t_str] + [fmt(q) for q in state]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cell_averages(sim):
    """Mean of every quantity per cell, shape (n1, .., nd, m)."""
    w = corrector.weight_tensor(sim.tables, sim.mesh.dim)
    node_axes = tuple(range(sim.mesh.dim, 2 * sim.mesh.dim))
    return np.sum(sim.u * w[..., None], axis=node_axes)


def fields_vtk(sim):
    """Legacy ASCII structured-points dataset carrying cell averages."""
    mesh = sim.mesh
    dims = [n + 1 for n in mesh.cells] + [1] * (3 - mesh.dim)
    origin = [e[0] for e in mesh.extents] + [0.0] * (3 - mesh.dim)
    spacing = list(mesh.spacings) + [1.0] * (3 - mesh.dim)
    averages = cell_averages(sim)

    lines = [
        "# vtk DataFile Version 3.0",
        f"fields step {sim.step_count} time {fmt(sim.t)}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        "DIMENSIONS " + " ".join(str(n) for n in dims),
        "ORIGIN " + " ".join(fmt(v) for v in origin),
        "SPACING " + " ".join(fmt(v) for v in spacing),
        f"CELL_DATA {mesh.n_elements}",
    ]
    for k, name in enumerate(sim.system.quantity_names):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        # VTK expects the first grid axis to vary fastest
        lines += [fmt(v) for v in averages[..., k].ravel(order="F")]
    return "\n".join(lines) + "\n"


def snapshot_filename(prefix, step, fmt_name):
    ext = {"csv": "csv", "vtk": "vtk"}[fmt_name]
    return f"{prefix}_{step:06d}.{ext}"


def write_snapshot(sim, directory, prefix, fmt_name):
    """Write one field snapshot; returns the file path."""
    text = fields_csv(sim) if fmt_name == "csv" else fields_vtk(sim)
    path = os.path.join(directory,
                        snapshot_filename(prefix, sim.step_count, fmt_name))
    with open(path, "w") as handle:
        handle.write(text)
    return path
