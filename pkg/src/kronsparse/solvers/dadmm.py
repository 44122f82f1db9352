"""ADMM on the dual of the separable LASSO.

The dual problem is

    max_A  -0.5 ||A||_F^2 + <A, S>   s.t.  ||gamma^T A psi||_inf <= lam

Introducing ``W = gamma^T A psi`` with multiplier ``C`` (which is the
primal code) and penalty ``eta``, the A-step solves

    A + eta (gamma gamma^T) A (psi psi^T) = S - gamma (C - eta W) psi^T

in the co-Gram eigenbases, where it becomes an elementwise division. The
dual variable is only ever held in rotated form ``U_g^T A U_p``.
"""

import time

import numpy as np

from ..core import delta_eta, duality_gap, lasso_objective, project_inf_ball, shrink, spectral_factors
from ._base import (Monitor, SolverConfig, SparseCode, as_separable, initial_code,
                    matrices, prepare_signal)


def _cogram(sdict):
    gamma, psi = matrices(sdict)
    gf, pf = sdict.gamma_factors, sdict.psi_factors
    if gf is None or gf.mode != "cogram":
        gf = spectral_factors(gamma, "cogram")
    if pf is None or pf.mode != "cogram":
        pf = spectral_factors(psi, "cogram")
    return gf, pf


def kron_dadmm(dictionary, S, config=None, C0=None, callback=None, psi=None,
               trace_dual=None):
    """Dual ADMM for the separable LASSO.

    Iterates, with ``g' = U_g^T gamma`` and ``p' = U_p^T psi``::

        A~ = D_eta o (S' -/+ g' (C -/+ eta W) p'^T)
        W  = clamp(C / eta + g'^T A~ p', [-lam, lam])
        C  = shrink(C + eta g'^T A~ p', lam * eta)

    where ``S' = U_g^T S U_p``. ``config.dadmm_sign`` selects ``C - eta W``
    ("minus", the consistent choice for this Lagrangian sign convention) or
    ``C + eta W`` ("plus"). Stops when the duality gap at ``C`` is at most
    ``epsilon * (1 + 0.5 ||S||_F^2)``.

    ``trace_dual``, if a list, receives ``max |W|`` after every iteration.
    """
    config = config or SolverConfig()
    sdict = as_separable(dictionary, psi)
    S = prepare_signal(sdict, S)
    gamma, psi_m = matrices(sdict)
    lam, eta = config.lam, config.eta
    if lam <= 0:
        raise ValueError("dual ADMM needs lam > 0")
    sign = -1.0 if config.dadmm_sign == "minus" else 1.0

    t0 = time.perf_counter()
    gf, pf = _cogram(sdict)
    Gp, Pp = gf.rotated, pf.rotated
    grid = delta_eta(gf.eigenvalues, pf.eigenvalues, eta).values
    S_rot = gf.vectors.T @ S @ pf.vectors
    precompute = time.perf_counter() - t0

    C = initial_code(sdict, C0)
    W = np.zeros_like(C)
    half_s2 = 0.5 * float(np.vdot(S, S))
    gap_tol = config.epsilon * (1.0 + half_s2)
    monitor = Monitor("dadmm", config, half_s2, S.shape[1], callback)
    termination = "max_iter"
    f = lasso_objective(gamma, psi_m, C, S, lam)
    monitor.start()
    for _ in range(config.max_iter):
        A_rot = grid * (S_rot - Gp @ (C + sign * eta * W) @ Pp.T)
        X = Gp.T @ A_rot @ Pp
        W = project_inf_ball(C / eta + X, lam)
        C = shrink(C + eta * X, lam * eta)
        if trace_dual is not None:
            trace_dual.append(float(np.abs(W).max()))
        f = lasso_objective(gamma, psi_m, C, S, lam)
        gap = duality_gap(gamma, psi_m, C, S, lam)
        monitor.record(f, gap=gap, state=C)
        if monitor.hit_target(f):
            termination = "tolerance"
            break
        if gap <= gap_tol:
            termination = "tolerance"
            break
    report = monitor.finish(C, termination, f)
    report.precompute_time = precompute
    return SparseCode(C), report
