"""Grid-refinement studies: run a config on a list of grids and report
errors with observed orders between consecutive grids."""

import dataclasses

import numpy as np

from .config import ConfigError, assemble
from .output import fmt

CSV_HEADER = "grid,l1,l2,linf,o1,o2,oinf"


def run_study(cfg, grids, progress=None):
    """Solve on each grid and collect error norms.

    Returns a list of row dicts with keys grid/l1/l2/linf and, between
    consecutive successful rows, o1/o2/oinf.  A failed run contributes a
    row with an "error" message; later grids still run.
    """
    rows = []
    for n in grids:
        run_cfg = dataclasses.replace(cfg, cells=(int(n),), warnings=[])
        try:
            sim, tend = assemble(run_cfg)
            if sim.exact_solution is None:
                raise ConfigError(
                    [f"problem '{cfg.ic}' has no exact solution"])
            sim.run(tend)
            norms = sim.error_norms()
            k = cfg.error_var
            rows.append({"grid": int(n),
                         "l1": float(norms["l1"][k]),
                         "l2": float(norms["l2"][k]),
                         "linf": float(norms["linf"][k])})
        except (ConfigError, RuntimeError, ValueError) as exc:
            rows.append({"grid": int(n), "error": str(exc)})
        if progress is not None:
            progress(rows[-1])

    last_good = None
    for row in rows:
        if "error" in row:
            continue
        if last_good is not None:
            ratio = np.log(row["grid"] / last_good["grid"])
            for norm, order in (("l1", "o1"), ("l2", "o2"),
                                ("linf", "oinf")):
                row[order] = float(
                    np.log(last_good[norm] / row[norm]) / ratio)
        last_good = row
    return rows


def report_csv(rows):
    lines = [CSV_HEADER]
    for row in rows:
        if "error" in row:
            lines.append(f"{row['grid']},,,,,,")
            continue
        cells = [str(row["grid"])]
        cells += [fmt(row[k]) for k in ("l1", "l2", "linf")]
        cells += [fmt(row[k]) if k in row else ""
                  for k in ("o1", "o2", "oinf")]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def report_text(rows, degree=None):
    """Aligned table for terminal output; failures are annotated."""
    header = f"{'grid':>6} {'L1':>12} {'o1':>6} {'L2':>12} {'o2':>6} " \
             f"{'Linf':>12} {'oinf':>6}"
    lines = []
    if degree is not None:
        lines.append(f"degree {degree}, theoretical order {degree + 1}")
    lines.append(header)
    for row in rows:
        if "error" in row:
            lines.append(f"{row['grid']:>6} FAILED: {row['error']}")
            continue
        parts = [f"{row['grid']:>6}"]
        for norm, order in (("l1", "o1"), ("l2", "o2"), ("linf", "oinf")):
            parts.append(f"{row[norm]:>12.4e}")
            parts.append(f"{row[order]:>6.2f}" if order in row
                         else " " * 6)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
