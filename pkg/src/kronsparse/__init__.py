"""Sparse coding of spatial-angular signals in Kronecker-separable dictionaries.

A signal ``S`` (G angular samples x V voxels) is coded as
``S ~ gamma @ C @ psi.T`` with an angular dictionary ``gamma`` and a
spatial dictionary ``psi``. The solvers never build ``kron(psi, gamma)``.
"""

from .core import (duality_gap, kron_adjoint, kron_apply, kron_explicit, lasso_objective,
                   mat_unstack, max_eigenvalue, project_inf_ball, shrink, spectral_factors,
                   vec_stack)
from .dictionaries import (Dictionary, SeparableDictionary, build_dct, build_directional_surrogate,
                           build_haar, build_identity, build_overcomplete_dct,
                           build_random_tight_frame, pair, validate)
from .estimator import KronSparseCoder
from .io import read_ksmx, write_ksmx
from .phantom import PhantomSpec, plant_sparse_code, standard_desk_phantom, synthesize
from .solvers import (SolveReport, SolverConfig, SparseCode, kron_admm, kron_dadmm, kron_fista,
                      kron_omp, kron_omp_pgd, solve_orthonormal_shortcut)

__version__ = "0.1.0"

__all__ = [
    "duality_gap", "kron_adjoint", "kron_apply", "kron_explicit", "lasso_objective",
    "mat_unstack", "max_eigenvalue", "project_inf_ball", "shrink", "spectral_factors",
    "vec_stack", "Dictionary", "SeparableDictionary", "build_dct",
    "build_directional_surrogate", "build_haar", "build_identity", "build_overcomplete_dct",
    "build_random_tight_frame", "pair", "validate", "KronSparseCoder", "read_ksmx",
    "write_ksmx", "PhantomSpec", "plant_sparse_code", "standard_desk_phantom", "synthesize",
    "SolveReport", "SolverConfig", "SparseCode", "kron_admm", "kron_dadmm", "kron_fista",
    "kron_omp", "kron_omp_pgd", "solve_orthonormal_shortcut",
]
