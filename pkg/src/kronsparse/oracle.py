"""Slow reference solvers on the explicit stacked dictionary ``Phi = kron(psi, gamma)``.

These favour clarity over speed and exist to check the matrix-free
solvers. Coefficient ``C[i, j]`` sits at position ``j * N_gamma + i`` of
the stacked vector.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_matrix
from .core import KRON_SIZE_CAP, kron_explicit, mat_unstack, shrink, unflat_index, vec_stack
from .solvers._base import argmax_pair

COMBINATION_CAP = 10**6


@dataclass(frozen=True)
class ExplicitProblem:
    phi: np.ndarray
    s: np.ndarray
    n_gamma: int
    n_psi: int

    @classmethod
    def from_separable(cls, gamma, psi, S, size_cap=KRON_SIZE_CAP):
        gamma = check_matrix(gamma, "gamma")
        psi = check_matrix(psi, "psi")
        phi = kron_explicit(psi, gamma, size_cap=size_cap)
        return cls(phi=phi, s=vec_stack(S), n_gamma=gamma.shape[1], n_psi=psi.shape[1])


@dataclass
class OmpResult:
    support: list          # flat column indices in selection order
    pairs: list            # the same as (i, j)
    coef: np.ndarray       # coefficients aligned with ``support``
    residual_norms: list


def vector_omp(phi, s, K, n_gamma=None, ridge=1e-12):
    """Classical OMP with a fresh least-squares solve at every step.

    With ``n_gamma`` given, correlation ties resolve to the smallest
    ``(i, j)`` under the stacking convention, matching the Kronecker solvers;
    otherwise to the smallest flat index.
    """
    phi = check_matrix(phi, "phi")
    s = np.asarray(s, dtype=np.float64)
    n = phi.shape[1]
    if K > n:
        raise ValueError(f"K={K} exceeds {n} columns")
    r = s.copy()
    support, norms = [], []
    coef = np.zeros(0)
    chosen = np.zeros(n, dtype=bool)
    for _ in range(K):
        corr = np.abs(phi.T @ r)
        corr[chosen] = -np.inf
        if n_gamma is None:
            _, k = argmax_pair(corr[None, :])
        else:
            i, j = argmax_pair(mat_unstack(corr, n_gamma, n // n_gamma))
            k = j * n_gamma + i
        support.append(k)
        chosen[k] = True
        A = phi[:, support]
        if np.linalg.matrix_rank(A) < len(support):
            coef = np.linalg.solve(A.T @ A + ridge * np.eye(len(support)), A.T @ s)
        else:
            coef = np.linalg.lstsq(A, s, rcond=None)[0]
        r = s - A @ coef
        norms.append(float(np.linalg.norm(r)))
    pairs = [unflat_index(k, n_gamma) for k in support] if n_gamma else []
    return OmpResult(support=support, pairs=pairs, coef=coef, residual_norms=norms)


def lasso_value(phi, s, c, lam):
    r = phi @ c - s
    return 0.5 * float(r @ r) + lam * float(np.abs(c).sum())


def vector_gap(phi, s, c, lam):
    """Duality gap of the vector LASSO at ``c`` (dual point: scaled residual)."""
    r = s - phi @ c
    corr = np.abs(phi.T @ r).max()
    a = r * (lam / corr) if corr > lam else r
    return lasso_value(phi, s, c, lam) - (-0.5 * float(a @ a) + float(a @ s))


def vector_fista(phi, s, lam, eps=1e-12, max_iter=500000, check_every=10):
    """Plain FISTA with constant step ``1 / ||phi||_2^2``.

    Stops once the duality gap is at most ``eps * (1 + objective)``.
    Returns ``(c, objective)``.
    """
    phi = check_matrix(phi, "phi")
    s = np.asarray(s, dtype=np.float64)
    L = np.linalg.norm(phi, 2) ** 2
    c = np.zeros(phi.shape[1])
    z = c.copy()
    t = 1.0
    for k in range(max_iter):
        c_new = shrink(z - phi.T @ (phi @ z - s) / L, lam / L)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = c_new + ((t - 1.0) / t_new) * (c_new - c)
        c, t = c_new, t_new
        if k % check_every == 0:
            f = lasso_value(phi, s, c, lam)
            if vector_gap(phi, s, c, lam) <= eps * (1.0 + f):
                break
    return c, lasso_value(phi, s, c, lam)


def columnwise_lasso(gamma, S, lam, eps=1e-12):
    """Solve one independent LASSO per column of ``S`` with :func:`vector_fista`."""
    C = np.zeros((gamma.shape[1], S.shape[1]))
    for v in range(S.shape[1]):
        C[:, v] = vector_fista(gamma, S[:, v], lam, eps=eps)[0]
    return C


def exhaustive_l0(phi, s, K):
    """Best ``K``-column least-squares fit by full enumeration.

    Ties in residual resolve to the lexicographically smallest support.
    Returns ``(support, residual_norm)``.
    """
    phi = check_matrix(phi, "phi")
    s = np.asarray(s, dtype=np.float64)
    n = phi.shape[1]
    if math.comb(n, K) > COMBINATION_CAP:
        raise ValueError(f"C({n}, {K}) exceeds the enumeration cap {COMBINATION_CAP}")
    best, best_r = None, np.inf
    for sup in itertools.combinations(range(n), K):
        A = phi[:, sup]
        c = np.linalg.lstsq(A, s, rcond=None)[0]
        r = float(np.linalg.norm(s - A @ c))
        if r < best_r:
            best, best_r = sup, r
    return list(best), best_r
