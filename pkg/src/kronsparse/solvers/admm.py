"""ADMM for the separable LASSO.

Splitting ``C = Z`` gives the augmented Lagrangian with (unscaled)
multiplier ``T`` and penalty ``mu``, so the Z-step is
``shrink(C + T/mu, lam/mu)`` and the ascent step is ``T += mu (C - Z)``. The C-step is the linear system

    h(C) = (gamma^T gamma) C (psi^T psi) + mu C = Q

which diagonalizes in the eigenbases of the two Gram matrices.
"""

import time

import numpy as np

from .._validation import check_positive
from ..core import delta_mu, kron_adjoint, lasso_objective, shrink, spectral_factors
from ..dictionaries import natural_mode
from ._base import (Monitor, SolverConfig, SparseCode, as_separable, initial_code,
                    matrices, prepare_signal, relative_change)


def h_operator(gamma, psi, C, mu):
    """Left-hand side of the C-step system."""
    return (gamma.T @ (gamma @ C)) @ (psi.T @ psi) + mu * C


def _check_mode(factors, mode, name):
    if factors.mode != mode:
        raise ValueError(f"{name} factors must be in {mode} mode, got {factors.mode}")


def admm_c_update_under(gamma_factors, psi_factors, Q, mu, grid=None):
    """C-step from the Gram eigendecompositions.

    ``C = V_g (D_mu o (V_g^T Q V_p)) V_p^T`` with ``D_mu[i, j] = 1/(d_g[i] d_p[j] + mu)``.
    """
    mu = check_positive(mu, "mu")
    _check_mode(gamma_factors, "gram", "gamma")
    _check_mode(psi_factors, "gram", "psi")
    if grid is None:
        grid = delta_mu(gamma_factors.eigenvalues, psi_factors.eigenvalues, mu)
    Vg, Vp = gamma_factors.vectors, psi_factors.vectors
    return Vg @ (grid.values * (Vg.T @ Q @ Vp)) @ Vp.T


def admm_c_update_over(gamma_factors, psi_factors, Q, mu, grid=None):
    """C-step from the co-Gram eigendecompositions (matrix inversion lemma form).

    ``C = Q/mu - g'^T (D_mu o (g' Q p'^T)) p' / mu`` where ``g' = U_g^T gamma``
    and ``p' = U_p^T psi`` are the rotated dictionaries.
    """
    mu = check_positive(mu, "mu")
    _check_mode(gamma_factors, "cogram", "gamma")
    _check_mode(psi_factors, "cogram", "psi")
    if grid is None:
        grid = delta_mu(gamma_factors.eigenvalues, psi_factors.eigenvalues, mu)
    Gp, Pp = gamma_factors.rotated, psi_factors.rotated
    return Q / mu - Gp.T @ (grid.values * (Gp @ Q @ Pp.T)) @ Pp / mu


def _side_maps(factors):
    # (forward, backward) so the correction term is back_g (D o (fwd_g Q fwd_p^T)) back_p^T
    if factors.mode == "cogram":
        return factors.rotated, factors.rotated.T
    V = factors.vectors
    return V.T, V * factors.eigenvalues[None, :]


def admm_c_update_mixed(gamma_factors, psi_factors, Q, mu, grid=None):
    """C-step with each factor in its own mode (gram or cogram).

    Uses ``C = Q/mu - B_g (D_mu o (F_g Q F_p^T)) B_p^T / mu`` where, per
    factor, ``(F, B) = (V^T, V diag(d))`` for a Gram factorization and
    ``(D', D'^T)`` for a co-Gram one. Reduces to the two other updates when
    both modes agree.
    """
    mu = check_positive(mu, "mu")
    if grid is None:
        grid = delta_mu(gamma_factors.eigenvalues, psi_factors.eigenvalues, mu)
    Fg, Bg = _side_maps(gamma_factors)
    Fp, Bp = _side_maps(psi_factors)
    return Q / mu - Bg @ (grid.values * (Fg @ Q @ Fp.T)) @ Bp.T / mu


def _factors_for(sdict, regime):
    gamma, psi = matrices(sdict)
    if regime == "undercomplete":
        modes = ("gram", "gram")
    elif regime == "overcomplete":
        modes = ("cogram", "cogram")
    else:
        modes = (natural_mode(sdict.gamma), natural_mode(sdict.psi))
    gf, pf = sdict.gamma_factors, sdict.psi_factors
    if gf is None or gf.mode != modes[0]:
        gf = spectral_factors(gamma, modes[0])
    if pf is None or pf.mode != modes[1]:
        pf = spectral_factors(psi, modes[1])
    return gf, pf


_UPDATES = {
    "undercomplete": admm_c_update_under,
    "overcomplete": admm_c_update_over,
    "mixed": admm_c_update_mixed,
}


def kron_admm(dictionary, S, config=None, C0=None, callback=None, psi=None):
    """ADMM for ``min_C 0.5 ||gamma C psi^T - S||_F^2 + lam ||C||_1``.

    The C-step variant follows the dictionary regime: Gram eigenvectors
    for undercomplete pairs, co-Gram for overcomplete, per-factor for mixed.
    Stops when both ``||C - Z||_F`` and the relative objective change are at
    most ``epsilon``. Returns the exactly sparse iterate ``Z``.
    """
    config = config or SolverConfig()
    sdict = as_separable(dictionary, psi)
    S = prepare_signal(sdict, S)
    gamma, psi_m = matrices(sdict)
    lam, mu = config.lam, config.mu

    t0 = time.perf_counter()
    gf, pf = _factors_for(sdict, sdict.regime)
    update = _UPDATES[sdict.regime]
    grid = delta_mu(gf.eigenvalues, pf.eigenvalues, mu)
    S_hat = kron_adjoint(gamma, S, psi_m)
    precompute = time.perf_counter() - t0

    Z = initial_code(sdict, C0)
    T = np.zeros_like(Z)
    monitor = Monitor("admm", config, 0.5 * float(np.vdot(S, S)), S.shape[1], callback)
    f_old = lasso_objective(gamma, psi_m, Z, S, lam)
    termination = "max_iter"
    monitor.start()
    for _ in range(config.max_iter):
        Q = S_hat + mu * Z - T
        C = update(gf, pf, Q, mu, grid)
        Z = shrink(C + T / mu, lam / mu)
        T = T + mu * (C - Z)
        f = lasso_objective(gamma, psi_m, Z, S, lam)
        monitor.record(f, state=Z)
        if monitor.hit_target(f):
            termination = "tolerance"
            break
        if max(np.linalg.norm(C - Z), relative_change(f, f_old)) <= config.epsilon:
            termination = "tolerance"
            break
        f_old = f
    report = monitor.finish(Z, termination, f)
    report.precompute_time = precompute
    return SparseCode(Z), report
