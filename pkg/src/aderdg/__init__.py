"""One-step ADER-DG solver with a posteriori subcell limiting."""

from .basis import BasisTables, basis_tables
from .driver import DEFAULT_CFL, Simulation, default_cfl
from .mesh import CartesianMesh
from .problems import build_problem
from .systems import make_system

__all__ = ["BasisTables", "CartesianMesh", "DEFAULT_CFL", "Simulation",
           "basis_tables", "build_problem", "default_cfl", "make_system"]
__version__ = "0.1.0"
