"""The Kronecker sparse-coding solvers."""

from ._base import (LineSearch, SolveReport, SolverConfig, SolverDivergence, SparseCode,
                    argmax_pair)
from .admm import (admm_c_update_mixed, admm_c_update_over, admm_c_update_under,
                   h_operator, kron_admm)
from .dadmm import kron_dadmm
from .fista import fista_linesearch, kron_fista, lipschitz_bound, momentum_next, \
    solve_orthonormal_shortcut
from .omp import kron_omp, kron_omp_pgd

#: CLI names of the solvers.
SOLVERS = {
    "omp": kron_omp,
    "omp-pgd": kron_omp_pgd,
    "admm": kron_admm,
    "dadmm": kron_dadmm,
    "fista": kron_fista,
}

GREEDY = ("omp", "omp-pgd")
LASSO = ("admm", "dadmm", "fista")

__all__ = [
    "LineSearch", "SolveReport", "SolverConfig", "SolverDivergence", "SparseCode",
    "argmax_pair", "admm_c_update_mixed", "admm_c_update_over", "admm_c_update_under",
    "h_operator", "kron_admm", "kron_dadmm", "fista_linesearch", "kron_fista",
    "lipschitz_bound", "momentum_next", "solve_orthonormal_shortcut", "kron_omp",
    "kron_omp_pgd", "SOLVERS", "GREEDY", "LASSO",
]
