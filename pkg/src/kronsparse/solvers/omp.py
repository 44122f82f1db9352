"""Greedy solvers for ``min ||gamma C psi^T - S||_F  s.t.  ||C||_0 <= K``.

Both solvers pick the pair ``(i, j)`` maximizing ``|gamma_i^T R psi_j|``
and assume unit-norm atoms, so the correlation ranks atoms fairly.
Exact ties go to the lexicographically smallest ``(i, j)``.
"""

import time
import warnings

import numpy as np

from ..core import kron_adjoint, vec_stack
from ._base import (Monitor, SolverConfig, SparseCode, argmax_pair, as_separable, matrices,
                    prepare_signal)
from .fista import momentum_next

RIDGE = 1e-12


class _IncrementalLS:
    """Least squares over a growing set of columns via Gram-Schmidt QR.

    Falls back to a ridge-regularized normal-equation solve once a new
    column is numerically dependent on the previous ones.
    """

    def __init__(self, s):
        self.s = s
        self.cols = []
        self.Q = np.zeros((s.size, 0))
        self.R = np.zeros((0, 0))
        self.qts = np.zeros(0)
        self.ridge = False

    def append(self, a):
        self.cols.append(a)
        if not self.ridge:
            w = a.copy()
            r = np.zeros(len(self.cols))
            for _ in range(2):  # reorthogonalize once
                h = self.Q.T @ w
                w -= self.Q @ h
                r[:-1] += h
            nrm = np.linalg.norm(w)
            if nrm > 1e-10 * np.linalg.norm(a):
                r[-1] = nrm
                q = w / nrm
                self.Q = np.column_stack([self.Q, q])
                R = np.zeros((len(r), len(r)))
                R[:-1, :-1] = self.R
                R[:, -1] = r
                self.R = R
                self.qts = np.append(self.qts, q @ self.s)
                return
            warnings.warn("selected columns are rank deficient; using ridge least squares",
                          RuntimeWarning, stacklevel=3)
            self.ridge = True

    def solve(self):
        """Return ``(coefficients, residual vector)``."""
        if not self.ridge:
            c = np.linalg.solve(self.R, self.qts) if self.qts.size else np.zeros(0)
            r = self.s - self.Q @ self.qts
            return c, r
        A = np.column_stack(self.cols)
        c = np.linalg.solve(A.T @ A + RIDGE * np.eye(A.shape[1]), A.T @ self.s)
        return c, self.s - A @ c


def kron_omp(dictionary, S, config=None, callback=None, psi=None):
    """Kronecker OMP on the stacked problem.

    Each selected pair contributes the column ``kron(psi_j, gamma_i)`` and
    the coefficients solve the unrestricted least-squares problem over all
    selected columns. Stops after ``K`` atoms or once
    ``||R||_F / ||S||_F <= epsilon``.
    """
    config = config or SolverConfig()
    sdict = as_separable(dictionary, psi)
    S = prepare_signal(sdict, S)
    gamma, psi_m = matrices(sdict)
    n_g, n_p = sdict.code_shape
    K = config.K if config.K is not None else 1
    if K > n_g * n_p:
        raise ValueError(f"K={K} exceeds the number of atoms {n_g * n_p}")
    G, V = S.shape
    s = vec_stack(S)
    s_norm = np.linalg.norm(s)
    half_s2 = 0.5 * s_norm ** 2
    monitor = Monitor("omp", config, half_s2, V, callback)
    ls = _IncrementalLS(s)
    pairs = []
    selected = np.zeros((n_g, n_p), dtype=bool)
    Rm = S
    coef = np.zeros(0)
    termination = "budget"
    monitor.start()
    if s_norm == 0.0:
        termination = "tolerance"
    while len(pairs) < K and termination == "budget":
        corr = np.abs(kron_adjoint(gamma, Rm, psi_m))
        corr[selected] = -np.inf
        i, j = argmax_pair(corr)
        pairs.append((i, j))
        selected[i, j] = True
        ls.append(np.kron(psi_m[:, j], gamma[:, i]))
        coef, r = ls.solve()
        Rm = r.reshape((G, V), order="F")
        rn = np.linalg.norm(r)
        monitor.record(0.5 * rn * rn, state=pairs)
        if rn <= config.epsilon * s_norm:
            termination = "tolerance"
    C = np.zeros((n_g, n_p))
    for (i, j), c in zip(pairs, coef):
        C[i, j] = c
    report = monitor.finish(C, termination, 0.5 * float(np.vdot(Rm, Rm)))
    return SparseCode(C, pairs=pairs), report


def _restricted_pgd(Gm, Pm, S_hat, mask, Z0, L0, config):
    """Minimize ``0.5 <Z, Gm Z Pm> - <Z, S_hat>`` over ``Z`` supported on ``mask``.

    Nesterov-accelerated projected gradient with backtracking and a
    gradient-based momentum restart. Returns ``(Z, L, converged)``.
    """

    def pgrad(Z):
        return mask * (Gm @ Z @ Pm - S_hat)

    ls = config.linesearch
    tol = config.epsilon_inner * max(1.0, float(np.abs(S_hat).max()))
    X_prev = Z0 * mask
    Y = X_prev
    n = 1.0
    L = L0
    if np.abs(pgrad(X_prev)).max() <= tol:
        return X_prev, L, True
    for _ in range(config.max_inner_iter):
        g = pgrad(Y)
        L = L / ls.grow_factor
        gg = float(np.vdot(g, g))
        # f is quadratic, so sufficient decrease along d = -g/L is exactly
        # <d, Gm d Pm> <= L ||d||^2
        curv = float(np.vdot(g, Gm @ g @ Pm)) / gg if gg > 0 else 0.0
        for _ in range(ls.max_probes):
            if curv <= L:
                break
            L *= ls.shrink_factor
        X = Y - g / L
        n_next = momentum_next(n)
        if float(np.vdot(g, X - X_prev)) > 0.0:
            n_next = 1.0
            Y = X
        else:
            Y = X + ((n - 1.0) / n_next) * (X - X_prev)
        X_prev, n = X, n_next
        if np.abs(pgrad(X)).max() <= tol:
            return X, L, True
    return X_prev, L, False


def kron_omp_pgd(dictionary, S, config=None, callback=None, psi=None):
    """Kronecker OMP solving each restricted fit by projected gradient.

    The angular and spatial index sets grow only when a new index is
    chosen, so the restricted code is ``|I| x |J|``; entries outside the
    selected pairs are held at zero by projection. Correlations are read
    from ``|S_hat - G[:, I] C P[J, :]|`` with ``G = gamma^T gamma``,
    ``P = psi^T psi`` and ``S_hat = gamma^T S psi`` precomputed.
    """
    config = config or SolverConfig()
    sdict = as_separable(dictionary, psi)
    S = prepare_signal(sdict, S)
    gamma, psi_m = matrices(sdict)
    n_g, n_p = sdict.code_shape
    K = config.K if config.K is not None else 1
    if K > n_g * n_p:
        raise ValueError(f"K={K} exceeds the number of atoms {n_g * n_p}")

    t0 = time.perf_counter()
    Gm = gamma.T @ gamma
    Pm = psi_m.T @ psi_m
    S_hat = kron_adjoint(gamma, S, psi_m)
    precompute = time.perf_counter() - t0

    half_s2 = 0.5 * float(np.vdot(S, S))
    s_norm = np.sqrt(2.0 * half_s2)
    monitor = Monitor("omp-pgd", config, half_s2, S.shape[1], callback)
    I, J, pairs = [], [], []
    pos_i, pos_j = {}, {}
    selected = np.zeros((n_g, n_p), dtype=bool)
    R_hat = np.abs(S_hat)
    C_r = np.zeros((0, 0))
    L = 1.0
    resid2 = 2.0 * half_s2
    termination = "budget"
    monitor.start()
    if s_norm == 0.0:
        termination = "tolerance"
    while len(pairs) < K and termination == "budget":
        scores = np.where(selected, -np.inf, R_hat)
        i, j = argmax_pair(scores)
        selected[i, j] = True
        pairs.append((i, j))
        if i not in pos_i:
            pos_i[i] = len(I)
            I.append(i)
        if j not in pos_j:
            pos_j[j] = len(J)
            J.append(j)
        mask = np.zeros((len(I), len(J)))
        for a, b in pairs:
            mask[pos_i[a], pos_j[b]] = 1.0
        Z0 = np.zeros_like(mask)
        Z0[:C_r.shape[0], :C_r.shape[1]] = C_r
        if len(pairs) == 1:
            L = Gm[i, i] * Pm[j, j]
        Gs, Ps, Ss = Gm[np.ix_(I, I)], Pm[np.ix_(J, J)], S_hat[np.ix_(I, J)]
        C_r, L, ok = _restricted_pgd(Gs, Ps, Ss, mask, Z0, L, config)
        R_hat = np.abs(S_hat - Gm[:, I] @ C_r @ Pm[J, :])
        Rm = S - gamma[:, I] @ C_r @ psi_m[:, J].T
        resid2 = float(np.vdot(Rm, Rm))
        monitor.record(0.5 * resid2, state=pairs)
        if not ok:
            warnings.warn("inner projected gradient did not converge; stopping",
                          RuntimeWarning, stacklevel=2)
            termination = "max_iter"
            break
        if np.sqrt(resid2) <= config.epsilon * s_norm:
            termination = "tolerance"
    C = np.zeros((n_g, n_p))
    if I:
        C[np.ix_(I, J)] = C_r
    report = monitor.finish(C, termination, 0.5 * resid2)
    report.precompute_time = precompute
    return SparseCode(C, pairs=pairs), report
