"""Accelerated proximal gradient for the separable LASSO."""

import time

import numpy as np

from ..core import lasso_objective, max_eigenvalue, shrink
from ._base import (KronOperator, Monitor, SolverConfig, SparseCode, as_separable,
                    initial_code, matrices, prepare_signal, relative_change)

# relative slack in the sufficient-decrease test, absorbs rounding
_LS_SLACK = 1e-12


def momentum_next(n):
    return 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * n * n))


def fista_linesearch(Z, grad, fZ, L_init, smooth, lam, config=None, L_max=None):
    """Backtracking search for the step constant ``L`` at the point ``Z``.

    Probes start at ``L_init / grow_factor`` and are multiplied by
    ``shrink_factor`` until the prox point ``X`` satisfies
    ``f(X) <= f(Z) + <grad, X - Z> + L/2 ||X - Z||^2``. ``L_max`` (a
    Lipschitz bound) caps the search and is the fallback when the probe
    budget runs out.

    Returns ``(L, X, f(X))``.
    """
    ls = (config or SolverConfig()).linesearch
    L = L_init / ls.grow_factor
    if L_max is not None:
        L = min(L, L_max)
    for _ in range(ls.max_probes):
        X = shrink(Z - grad / L, lam / L)
        D = X - Z
        fX = smooth(X)
        bound = fZ + float(np.vdot(grad, D)) + 0.5 * L * float(np.vdot(D, D))
        if fX <= bound + _LS_SLACK * max(1.0, abs(fZ)):
            return L, X, fX
        if L_max is not None and L >= L_max:
            break
        L *= ls.shrink_factor
        if L_max is not None:
            L = min(L, L_max)
    if L_max is None:
        raise RuntimeError("line search failed and no Lipschitz bound was given")
    X = shrink(Z - grad / L_max, lam / L_max)
    return L_max, X, smooth(X)


def lipschitz_bound(gamma, psi=None):
    """``lambda_max(gamma^T gamma) * lambda_max(psi^T psi)`` with a small safety margin."""
    L = max_eigenvalue(gamma)
    if psi is not None:
        L *= max_eigenvalue(psi)
    return L * (1.0 + 1e-6)


def _fista_loop(op, S, lam, config, C0, monitor, L_max):
    """Shared iteration; ``op`` maps codes to signals."""

    def smooth(X):
        R = op.forward(X) - S
        return 0.5 * float(np.vdot(R, R))

    C_prev = C0
    Z = C0.copy()
    n = 1.0
    L = L_max
    f_old = smooth(C0) + lam * float(np.abs(C0).sum())
    termination = "max_iter"
    monitor.start()
    C = C0
    for _ in range(config.max_iter):
        R = op.forward(Z) - S
        fZ = 0.5 * float(np.vdot(R, R))
        grad = op.adjoint(R)
        L, C, fC = fista_linesearch(Z, grad, fZ, L, smooth, lam, config, L_max)
        n_next = momentum_next(n)
        Z = C + ((n - 1.0) / n_next) * (C - C_prev)
        C_prev, n = C, n_next
        f = fC + lam * float(np.abs(C).sum())
        monitor.record(f, state=C)
        if monitor.hit_target(f):
            termination = "tolerance"
            break
        if relative_change(f, f_old) <= config.epsilon:
            termination = "tolerance"
            break
        f_old = f
    return C, termination


def kron_fista(dictionary, S, config=None, C0=None, callback=None, psi=None):
    """Solve ``min_C 0.5 ||gamma C psi^T - S||_F^2 + lam ||C||_1`` with FISTA.

    Parameters
    ----------
    dictionary : SeparableDictionary or array
        The dictionary pair (or ``gamma`` when ``psi`` is passed separately).
    S : ndarray, shape (G, V)
    config : SolverConfig
        Uses ``lam``, ``epsilon``, ``max_iter`` and ``linesearch``.
    C0 : ndarray, optional
        Warm start.

    Returns
    -------
    code : SparseCode
    report : SolveReport
    """
    config = config or SolverConfig()
    sdict = as_separable(dictionary, psi)
    S = prepare_signal(sdict, S)
    gamma, psi_m = matrices(sdict)
    t0 = time.perf_counter()
    L_max = lipschitz_bound(gamma, psi_m)
    precompute = time.perf_counter() - t0
    C0 = initial_code(sdict, C0)
    monitor = Monitor("fista", config, 0.5 * float(np.vdot(S, S)), S.shape[1], callback)
    C, term = _fista_loop(KronOperator(gamma, psi_m), S, config.lam, config, C0, monitor, L_max)
    report = monitor.finish(C, term, lasso_objective(gamma, psi_m, C, S, config.lam))
    report.precompute_time = precompute
    return SparseCode(C), report


def solve_orthonormal_shortcut(dictionary, S, config=None, C0=None, callback=None, psi=None):
    """LASSO for an orthonormal spatial dictionary.

    With ``psi^T psi = psi psi^T = I`` the data term equals
    ``||gamma C - S psi||_F^2``, so each column of ``C`` is an independent
    LASSO over ``gamma`` alone. The columns are solved together by FISTA.
    """
    config = config or SolverConfig()
    sdict = as_separable(dictionary, psi)
    if not sdict.psi.flags.orthonormal or sdict.psi.matrix.shape[0] != sdict.psi.matrix.shape[1]:
        raise ValueError("orthonormal shortcut requires a square orthonormal psi")
    S = prepare_signal(sdict, S)
    gamma, psi_m = matrices(sdict)
    t0 = time.perf_counter()
    S_hat = S @ psi_m
    L_max = lipschitz_bound(gamma)
    precompute = time.perf_counter() - t0
    C0 = initial_code(sdict, C0)
    monitor = Monitor("fista-orthonormal", config, 0.5 * float(np.vdot(S, S)), S.shape[1],
                      callback)
    C, term = _fista_loop(KronOperator(gamma), S_hat, config.lam, config, C0, monitor, L_max)
    report = monitor.finish(C, term, lasso_objective(gamma, psi_m, C, S, config.lam))
    report.precompute_time = precompute
    return SparseCode(C), report
