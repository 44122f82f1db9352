"""Scikit-learn style wrapper around the Kronecker solvers."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import DimensionError
from .core import kron_apply, lasso_objective
from .dictionaries import pair
from .solvers import GREEDY, SOLVERS, SolverConfig


class KronSparseCoder(TransformerMixin, BaseEstimator):
    """Sparse code a whole spatial-angular signal in a separable dictionary.

    Unlike most transformers, a sample here is an entire signal matrix
    ``S`` of shape ``(G, V)`` (angular samples by voxels); ``transform``
    returns its code ``C`` of shape ``(N_gamma, N_psi)``.

    Parameters
    ----------
    gamma : ndarray of shape (G, N_gamma)
        Angular dictionary.
    psi : ndarray of shape (V, N_psi)
        Spatial dictionary.
    algorithm : {"fista", "admm", "dadmm", "omp", "omp-pgd"}, default="fista"
    lam : float, default=0.1
        L1 weight for the LASSO solvers.
    n_nonzero : int, optional
        Atom budget for the greedy solvers (defaults to 1).
    mu, eta : float, default=1.0
        ADMM and dual ADMM penalties.
    tol : float, default=1e-8
    max_iter : int, default=20000
    warm_start : bool, default=False
        Start each solve from the previous code when shapes allow.

    Attributes
    ----------
    code_ : ndarray of shape (N_gamma, N_psi)
        Code of the signal seen by ``fit``.
    report_ : SolveReport
    n_iter_ : int
    """

    def __init__(self, gamma=None, psi=None, algorithm="fista", lam=0.1, n_nonzero=None,
                 mu=1.0, eta=1.0, tol=1e-8, max_iter=20000, warm_start=False):
        self.gamma = gamma
        self.psi = psi
        self.algorithm = algorithm
        self.lam = lam
        self.n_nonzero = n_nonzero
        self.mu = mu
        self.eta = eta
        self.tol = tol
        self.max_iter = max_iter
        self.warm_start = warm_start

    def _config(self):
        return SolverConfig(lam=self.lam, mu=self.mu, eta=self.eta, epsilon=self.tol,
                            max_iter=self.max_iter, K=self.n_nonzero)

    def _dictionary(self):
        if self.gamma is None or self.psi is None:
            raise ValueError("both gamma and psi must be set")
        if self.algorithm not in SOLVERS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        return pair(check_array(self.gamma), check_array(self.psi))

    def _solve(self, sdict, S, C0=None):
        solver = SOLVERS[self.algorithm]
        if self.algorithm in GREEDY:
            return solver(sdict, S, self._config())
        return solver(sdict, S, self._config(), C0=C0)

    def _check_signal(self, X, sdict):
        S = check_array(X)
        if S.shape != (sdict.G, sdict.V):
            raise DimensionError(f"signal has shape {S.shape}, expected {(sdict.G, sdict.V)}")
        return S

    def fit(self, X, y=None):
        """Code the signal ``X`` (G x V) and keep the result."""
        sdict = self._dictionary()
        S = self._check_signal(X, sdict)
        C0 = None
        if self.warm_start and hasattr(self, "code_") and self.code_.shape == sdict.code_shape:
            C0 = self.code_
        code, report = self._solve(sdict, S, C0)
        self.dictionary_ = sdict
        self.code_ = code.coef
        self.support_ = code.support
        self.report_ = report
        self.n_iter_ = report.iterations
        return self

    def transform(self, X):
        """Solve for the code of ``X`` with the fitted dictionary pair."""
        check_is_fitted(self, "code_")
        S = self._check_signal(X, self.dictionary_)
        C0 = self.code_ if self.warm_start else None
        code, _ = self._solve(self.dictionary_, S, C0)
        return code.coef

    def fit_transform(self, X, y=None):
        return self.fit(X, y).code_

    def inverse_transform(self, C):
        """Signal ``gamma C psi^T`` of a code."""
        check_is_fitted(self, "code_")
        C = check_array(C)
        return kron_apply(self.dictionary_.gamma.matrix, C, self.dictionary_.psi.matrix)

    def score(self, X, y=None):
        """Negative LASSO objective of the code of ``X`` (greater is better)."""
        C = self.transform(X)
        S = check_array(X)
        lam = 0.0 if self.algorithm in GREEDY else self.lam
        return -lasso_objective(self.dictionary_.gamma.matrix, self.dictionary_.psi.matrix,
                                C, S, lam)

    def reconstruction_error(self, X):
        """``||gamma C psi^T - X||_F / (G V)`` for the code of ``X``."""
        S = check_array(X)
        R = self.inverse_transform(self.transform(S)) - S
        return float(np.linalg.norm(R)) / S.size
