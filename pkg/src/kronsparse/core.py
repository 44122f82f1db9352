"""Kronecker algebra and proximal primitives shared by every solver.

A signal ``S`` (G x V) is represented in a separable dictionary pair as
``S = gamma @ C @ psi.T`` where ``gamma`` (G x N_gamma) holds the angular
atoms and ``psi`` (V x N_psi) the spatial atoms. Stacking the columns of
``S`` gives the equivalent vector form ``s = kron(psi, gamma) @ vec(C)``.
Everything here works on the matrix form and never builds the Kronecker
product except in :func:`kron_explicit`, which exists for testing.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import (DimensionError, check_conformable, check_matrix,
                          check_nonneg, check_positive)

#: Entries with magnitude at or below this count as zero in ``||C||_0``.
NONZERO_TOL = 1e-10

#: Eigenvalues below this are clamped to zero.
EIG_CLAMP = 1e-10

#: Default cap on the number of entries of an explicit Kronecker matrix.
KRON_SIZE_CAP = 10**7


class DecompositionError(RuntimeError):
    """An eigendecomposition or power iteration failed to converge."""


# -- stacking --------------------------------------------------------------

def vec_stack(S):
    """Stack the columns of ``S`` into one vector (column-major order).

    Column ``v`` of ``S`` occupies entries ``[v*G, (v+1)*G)``.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {S.shape}")
    return S.reshape(-1, order="F").copy()


def mat_unstack(s, G, V):
    """Inverse of :func:`vec_stack`."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1 or s.size != G * V:
        raise DimensionError(f"cannot unstack vector of size {s.size} into {G}x{V}")
    return s.reshape((G, V), order="F").copy()


def flat_index(i, j, n_gamma):
    """Position of coefficient ``C[i, j]`` inside ``vec_stack(C)``."""
    return j * n_gamma + i


def unflat_index(k, n_gamma):
    """Inverse of :func:`flat_index`."""
    return k % n_gamma, k // n_gamma


# -- Kronecker products ----------------------------------------------------

def kron_explicit(psi, gamma, size_cap=KRON_SIZE_CAP):
    """Build ``Phi = kron(psi, gamma)`` explicitly.

    Block ``(v, j)`` of the result is ``psi[v, j] * gamma``. Only meant for
    small test problems; raises ``MemoryError`` above ``size_cap`` entries.
    """
    psi = check_matrix(psi, "psi")
    gamma = check_matrix(gamma, "gamma")
    n = psi.size * gamma.size
    if n > size_cap:
        raise MemoryError(
            f"explicit Kronecker matrix would have {n} entries (cap {size_cap})")
    return np.kron(psi, gamma)


def kron_apply(gamma, C, psi):
    """Evaluate ``gamma @ C @ psi.T`` with two matrix products.

    The product order is chosen to keep the intermediate small.
    """
    check_conformable(gamma, C, psi)
    n_g, n_p = C.shape
    G, V = gamma.shape[0], psi.shape[0]
    # cost of (gamma C) psi^T vs gamma (C psi^T)
    if G * n_g * n_p + G * n_p * V <= n_g * n_p * V + G * n_g * V:
        return (gamma @ C) @ psi.T
    return gamma @ (C @ psi.T)


def kron_adjoint(gamma, S, psi):
    """Evaluate ``gamma.T @ S @ psi``, the adjoint of :func:`kron_apply`."""
    check_conformable(gamma, None, psi, S)
    G, V = S.shape
    n_g, n_p = gamma.shape[1], psi.shape[1]
    if n_g * G * V + n_g * V * n_p <= G * V * n_p + n_g * G * n_p:
        return (gamma.T @ S) @ psi
    return gamma.T @ (S @ psi)


# -- proximal maps ---------------------------------------------------------

def shrink(X, kappa):
    """Soft thresholding ``max(0, x - kappa) - max(0, -x - kappa)``, entrywise."""
    kappa = check_nonneg(kappa, "kappa")
    X = np.asarray(X, dtype=np.float64)
    return np.maximum(X - kappa, 0.0) - np.maximum(-X - kappa, 0.0)


def project_inf_ball(X, lam):
    """Project onto ``{X : max |X_ij| <= lam}`` by clamping to ``[-lam, lam]``."""
    lam = check_nonneg(lam, "lam")
    return np.clip(np.asarray(X, dtype=np.float64), -lam, lam)


# -- spectral precomputation -----------------------------------------------

@dataclass(frozen=True)
class SpectralFactors:
    """Eigendecomposition of ``D.T @ D`` (gram) or ``D @ D.T`` (cogram).

    Attributes
    ----------
    vectors : ndarray
        Orthonormal eigenvectors as columns.
    eigenvalues : ndarray
        Sorted descending, clamped to be nonnegative.
    rotated : ndarray or None
        ``vectors.T @ D`` in cogram mode, ``None`` otherwise.
    mode : {"gram", "cogram"}
    """

    vectors: np.ndarray
    eigenvalues: np.ndarray
    rotated: np.ndarray | None
    mode: str


def spectral_factors(D, mode="gram"):
    """Eigendecompose the Gram (``D^T D``) or co-Gram (``D D^T``) matrix of ``D``."""
    D = check_matrix(D, "D")
    if mode not in ("gram", "cogram"):
        raise ValueError(f"mode must be 'gram' or 'cogram', got {mode!r}")
    if not np.any(D):
        raise ValueError("D must be nonzero")
    M = D.T @ D if mode == "gram" else D @ D.T
    M = 0.5 * (M + M.T)
    try:
        w, U = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(w)[::-1]
    w = w[order]
    U = np.ascontiguousarray(U[:, order])
    w = np.where(w < EIG_CLAMP, 0.0, w)
    rotated = U.T @ D if mode == "cogram" else None
    return SpectralFactors(vectors=U, eigenvalues=w, rotated=rotated, mode=mode)


@dataclass(frozen=True)
class ScalingGrid:
    """Elementwise scaling matrix built from two eigenvalue vectors."""

    values: np.ndarray
    kind: str
    parameter: float


def delta_mu(eig_gamma, eig_psi, mu):
    """``[i, j] -> 1 / (d_gamma[i] * d_psi[j] + mu)``."""
    mu = check_positive(mu, "mu")
    vals = 1.0 / (np.multiply.outer(eig_gamma, eig_psi) + mu)
    return ScalingGrid(values=vals, kind="delta_mu", parameter=mu)


def delta_eta(eig_gamma, eig_psi, eta):
    """``[i, j] -> 1 / (1 + eta * d_gamma[i] * d_psi[j])``."""
    eta = check_positive(eta, "eta")
    vals = 1.0 / (1.0 + eta * np.multiply.outer(eig_gamma, eig_psi))
    return ScalingGrid(values=vals, kind="delta_eta", parameter=eta)


def max_eigenvalue(D, tol=1e-8, max_iter=10000, seed=0):
    """Largest eigenvalue of ``D.T @ D`` by power iteration.

    Stops once the eigen-residual ``||A v - r v|| <= tol * r``. The start
    vector comes from a fixed seed so repeated calls agree bitwise.
    """
    D = check_matrix(D, "D")
    if not np.any(D):
        raise ValueError("D must be nonzero")
    rng = np.random.default_rng(seed)
    # iterate in the smaller of the two Gram spaces; both share the top eigenvalue
    small = D if D.shape[1] <= D.shape[0] else D.T
    v = rng.standard_normal(small.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = small.T @ (small @ v)
        r = float(v @ w)
        if r <= 0.0:
            # start vector in the null space; restart along the residual
            v = rng.standard_normal(small.shape[1])
            v /= np.linalg.norm(v)
            continue
        if np.linalg.norm(w - r * v) <= tol * r:
            return r
        v = w / np.linalg.norm(w)
    raise DecompositionError(f"power iteration did not converge in {max_iter} steps")


# -- objectives --------------------------------------------------------------

def count_nonzero(C, tol=NONZERO_TOL):
    """Number of entries with ``|c| > tol``."""
    return int(np.count_nonzero(np.abs(C) > tol))


def residual(gamma, C, psi, S):
    return kron_apply(gamma, C, psi) - S


def lasso_objective(gamma, psi, C, S, lam):
    """``0.5 * ||gamma C psi^T - S||_F^2 + lam * ||C||_1`` (entrywise 1-norm)."""
    check_conformable(gamma, C, psi, S)
    R = residual(gamma, C, psi, S)
    return 0.5 * float(np.vdot(R, R)) + lam * float(np.abs(C).sum())


def dual_objective(A, S):
    return -0.5 * float(np.vdot(A, A)) + float(np.vdot(A, S))


def duality_gap(gamma, psi, C, S, lam):
    """Primal objective at ``C`` minus the dual objective at a feasible point.

    The dual point is the residual ``S - gamma C psi^T`` rescaled so that
    ``||gamma^T A psi||_inf <= lam``.
    """
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    check_conformable(gamma, C, psi, S)
    R = S - kron_apply(gamma, C, psi)
    primal = 0.5 * float(np.vdot(R, R)) + lam * float(np.abs(C).sum())
    corr = np.abs(kron_adjoint(gamma, R, psi)).max()
    A = R * (lam / corr) if corr > lam else R
    return primal - dual_objective(A, S)
