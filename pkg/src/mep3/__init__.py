"""Iterative solvers for three-parameter eigenvalue problems

    A_i x_i = (lam B_i + mu C_i + eta D_i) x_i,   i = 1, 2, 3.

The main entry points are :func:`jd_solve` (Jacobi-Davidson, point or plane
targets), :func:`si_solve` (subspace iteration for smallest ``|eta|``) and
:func:`solve_direct` (dense reference solver for small problems).
"""
from .core import (EigenPair, EigenTriple, EtaPlane, MepError, Point, ThreeParamProblem,
                   build_deltas, decomposable_form, left_eigenvector, precondition_inverse_A,
                   project, rayleigh_triple, residual, selection_ratio, shift_substitute,
                   solve_direct)
from .discretize import (gen_baer, gen_ellipsoidal, gen_four_point, gen_random_diag,
                         index_triple, eigenfrequency)
from .jd import Exact, Gmres, JdConfig, jd_solve
from .si import SiConfig, si_solve
from .trqi import trqi, trqi_step

__version__ = "0.1.0"

__all__ = [
    "EigenPair", "EigenTriple", "EtaPlane", "MepError", "Point", "ThreeParamProblem",
    "build_deltas", "decomposable_form", "left_eigenvector", "precondition_inverse_A",
    "project", "rayleigh_triple", "residual", "selection_ratio", "shift_substitute",
    "solve_direct", "gen_baer", "gen_ellipsoidal", "gen_four_point", "gen_random_diag",
    "index_triple", "eigenfrequency", "Exact", "Gmres", "JdConfig", "jd_solve",
    "SiConfig", "si_solve", "trqi", "trqi_step",
]
