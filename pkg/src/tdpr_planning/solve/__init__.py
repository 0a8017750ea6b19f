"""LP/MILP solving: internal simplex + branch-and-bound, and a file-based external bridge."""

from .bnb import BnbNode, BnbStats, solve_milp
from .lp import solve_lp
from .mps import MpsError, read_mps, read_solution, write_mps, write_solution
from .simplex import LpBasis, SolverError, Tolerances

__all__ = [
    "BnbNode",
    "BnbStats",
    "LpBasis",
    "MpsError",
    "SolverError",
    "Tolerances",
    "solve_lp",
    "solve_milp",
    "read_mps",
    "read_solution",
    "write_mps",
    "write_solution",
]
