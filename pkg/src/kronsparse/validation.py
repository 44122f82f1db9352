"""Self-checks run by ``kronsparse validate``.

Every suite is a function returning a short detail string and raising
``AssertionError`` on failure. ``quick`` covers the algebraic identities
and cheap solver invariants; ``full`` adds the oracle equivalence suites.
"""

import math
import tempfile
import time
from pathlib import Path

import numpy as np

from .core import (delta_eta, delta_mu, duality_gap, kron_adjoint, kron_apply, kron_explicit,
                   shrink, spectral_factors, vec_stack)
from .dictionaries import build_haar, pair
from .io import read_ksmx, write_ksmx
from .oracle import ExplicitProblem, exhaustive_l0, vector_fista, vector_omp
from .phantom import make_phantom
from .solvers import (SolverConfig, admm_c_update_over, admm_c_update_under, h_operator,
                      kron_admm, kron_dadmm, kron_fista, kron_omp, kron_omp_pgd,
                      solve_orthonormal_shortcut)


def unit_columns(M):
    return M / np.linalg.norm(M, axis=0)


def random_instance(rng, G=5, V=8, n_gamma=9, n_psi=12, lam_frac=0.3):
    """Random unit-atom pair, signal and a lambda at a fraction of the critical value."""
    gamma = unit_columns(rng.standard_normal((G, n_gamma)))
    psi = unit_columns(rng.standard_normal((V, n_psi)))
    S = rng.standard_normal((G, V))
    lam = lam_frac * float(np.abs(kron_adjoint(gamma, S, psi)).max())
    return gamma, psi, S, lam


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# -- quick suites -------------------------------------------------------------

def suite_kron_identities():
    rng = np.random.default_rng(101)
    worst_k = worst_a = 0.0
    for _ in range(10):
        G, V, ng, npsi = rng.integers(2, 9, size=4)
        gamma = rng.standard_normal((G, ng))
        psi = rng.standard_normal((V, npsi))
        C = rng.standard_normal((ng, npsi))
        S = rng.standard_normal((G, V))
        lhs = vec_stack(kron_apply(gamma, C, psi))
        rhs = kron_explicit(psi, gamma) @ vec_stack(C)
        worst_k = max(worst_k, np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
        ip1 = float(np.vdot(kron_apply(gamma, C, psi), S))
        ip2 = float(np.vdot(C, kron_adjoint(gamma, S, psi)))
        worst_a = max(worst_a, abs(ip1 - ip2) / max(abs(ip1), 1.0))
    assert worst_k <= 1e-12, f"Kronecker identity off by {worst_k:.3g}"
    assert worst_a <= 1e-10, f"adjoint identity off by {worst_a:.3g}"
    return f"kron {worst_k:.2e}, adjoint {worst_a:.2e}"


def suite_shrink_prox():
    rng = np.random.default_rng(102)
    grid = np.linspace(-5.0, 5.0, 200001)
    for _ in range(20):
        x, k = rng.uniform(-3, 3), rng.uniform(0, 2)
        z = float(shrink(np.array([[x]]), k)[0, 0])
        vals = 0.5 * (grid - x) ** 2 + k * np.abs(grid)
        best = grid[np.argmin(vals)]
        assert abs(z - best) <= 1e-4, f"shrink({x}, {k}) = {z}, grid minimizer {best}"
        assert 0.5 * (z - x) ** 2 + k * abs(z) <= vals.min() + 1e-12
    for _ in range(20):
        X, Y = rng.standard_normal((2, 6, 7))
        k = rng.uniform(0, 1)
        assert np.linalg.norm(shrink(X, k) - shrink(Y, k)) <= np.linalg.norm(X - Y) + 1e-12
    return "prox minimizer and nonexpansiveness on 40 draws"


def suite_weak_duality():
    rng = np.random.default_rng(103)
    worst = math.inf
    for _ in range(30):
        gamma, psi, S, lam = random_instance(rng)
        C = rng.standard_normal((9, 12)) * rng.uniform(0, 2)
        gap = duality_gap(gamma, psi, C, S, lam)
        worst = min(worst, gap)
        assert gap >= -1e-10, f"negative duality gap {gap}"
    return f"smallest gap {worst:.3g}"


def suite_scaling_grid():
    rng = np.random.default_rng(104)
    for _ in range(10):
        dg, dp = rng.uniform(0, 5, size=7), rng.uniform(0, 5, size=5)
        mu = rng.uniform(0.1, 10)
        g = delta_mu(dg, dp, mu).values
        assert np.all(g > 0) and np.all(g <= 1.0 / mu + 1e-15)
        h = delta_eta(dg, dp, mu).values
        assert np.all(h > 0) and np.all(h <= 1.0 + 1e-15)
    return "entries inside (0, 1/mu] and (0, 1]"


def suite_haar_tensor():
    for n, levels in ((8, 3), (16, 2), (4, 1)):
        h1 = build_haar(n, levels).matrix
        h2 = build_haar(n, levels, dims=2).matrix
        err = np.abs(h2 - np.kron(h1, h1)).max()
        assert err <= 1e-12, f"2-D Haar differs from tensor product by {err:.3g}"
        assert build_haar(n, levels, dims=2).flags.orthonormal
    h3 = build_haar(4, 2, dims=3).matrix
    h1 = build_haar(4, 2).matrix
    assert np.abs(h3 - np.kron(np.kron(h1, h1), h1)).max() <= 1e-12
    return "2-D and 3-D Haar equal tensor products"


def suite_stationarity():
    rng = np.random.default_rng(105)
    worst = 0.0
    for G, ng, V, npsi, mode in ((6, 10, 8, 20, "cogram"), (10, 6, 12, 5, "gram")):
        for _ in range(5):
            gamma, psi = rng.standard_normal((G, ng)), rng.standard_normal((V, npsi))
            Q, mu = rng.standard_normal((ng, npsi)), rng.uniform(0.1, 5)
            gf, pf = spectral_factors(gamma, mode), spectral_factors(psi, mode)
            upd = admm_c_update_over if mode == "cogram" else admm_c_update_under
            C = upd(gf, pf, Q, mu)
            err = np.linalg.norm(h_operator(gamma, psi, C, mu) - Q) / np.linalg.norm(Q)
            worst = max(worst, err)
    assert worst <= 1e-8, f"h(C) = Q violated by {worst:.3g}"
    return f"worst relative residual {worst:.2e}"


def suite_residual_monotonicity():
    rng = np.random.default_rng(106)
    for _ in range(5):
        gamma, psi, S, _ = random_instance(rng)
        cfg = SolverConfig(K=8)
        _, rep = kron_omp((gamma, psi), S, cfg)
        tr = np.array(rep.objective_trace)
        assert np.all(np.diff(tr) <= 1e-12 * tr[0]), "OMP residual increased"
        _, rep = kron_omp_pgd((gamma, psi), S, cfg)
        tr = np.sqrt(2.0 * np.array(rep.objective_trace))
        assert np.all(np.diff(tr) <= 10 * cfg.epsilon_inner * max(1.0, tr[0])), \
            "OMP-PGD residual increased"
    return "OMP and OMP-PGD residual traces non-increasing"


def suite_ksmx_roundtrip():
    rng = np.random.default_rng(107)
    M = rng.standard_normal((3, 5))
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "m.ksmx"
        write_ksmx(p, M)
        assert np.array_equal(read_ksmx(p), M)
    return "bit-exact round trip"


def suite_phantom_reproducibility():
    a = make_phantom((8, 8), 10, 16, 16, snr=30.0, seed=3, spatial="haar", levels=3)
    b = make_phantom((8, 8), 10, 16, 16, snr=30.0, seed=3, spatial="haar", levels=3)
    for x, y in zip(a[1:3], b[1:3]):
        assert np.array_equal(x, y), "phantom differs between identical calls"
    assert a[3] == b[3]
    return "identical signal, code and spec"


def suite_fixtures(directory):
    files = sorted(Path(directory).glob("*.ksmx"))
    if not files:
        raise AssertionError(f"no KSMX fixtures found in {directory}")
    for f in files:
        read_ksmx(f)  # FormatError propagates as a failure
    return f"{len(files)} fixtures read"


# -- full suites --------------------------------------------------------------

def oracle_equivalence(n_instances=20, seed=201, epsilon=1e-10):
    """Worst relative objective gap between each LASSO solver and the explicit oracle.

    FISTA is not monotone, so its relative-change stop can fire on a ripple
    of the objective; ``epsilon`` is set tighter than the default to keep
    such early stops well inside the comparison tolerance.
    """
    rng = np.random.default_rng(seed)
    worst = {"admm": 0.0, "dadmm": 0.0, "fista": 0.0}
    solvers = {"admm": kron_admm, "dadmm": kron_dadmm, "fista": kron_fista}
    for _ in range(n_instances):
        gamma, psi, S, lam = random_instance(rng)
        prob = ExplicitProblem.from_separable(gamma, psi, S)
        _, fref = vector_fista(prob.phi, prob.s, lam)
        cfg = SolverConfig(lam=lam, epsilon=epsilon)
        for name, fn in solvers.items():
            _, rep = fn((gamma, psi), S, cfg)
            worst[name] = max(worst[name], _rel(rep.objective, fref))
    return worst


def suite_oracle_equivalence():
    worst = oracle_equivalence()
    bad = {k: v for k, v in worst.items() if v > 1e-6}
    assert not bad, f"objective mismatch {bad}"
    return ", ".join(f"{k} {v:.1e}" for k, v in worst.items())


def update_equivalence(n_instances=20, seed=202):
    """Worst disagreement of the two C-updates on square pairs, and worst h(C)=Q residual."""
    rng = np.random.default_rng(seed)
    agree = 0.0
    for _ in range(n_instances):
        n, m = rng.integers(3, 10, size=2)
        gamma, psi = rng.standard_normal((n, n)), rng.standard_normal((m, m))
        Q, mu = rng.standard_normal((n, m)), rng.uniform(0.1, 5)
        Cu = admm_c_update_under(spectral_factors(gamma, "gram"), spectral_factors(psi, "gram"),
                                 Q, mu)
        Co = admm_c_update_over(spectral_factors(gamma, "cogram"),
                                spectral_factors(psi, "cogram"), Q, mu)
        agree = max(agree, np.linalg.norm(Cu - Co) / np.linalg.norm(Cu))
    stat = 0.0
    for _ in range(n_instances):
        gamma, psi = rng.standard_normal((6, 10)), rng.standard_normal((8, 20))
        Q, mu = rng.standard_normal((10, 20)), rng.uniform(0.1, 5)
        C = admm_c_update_over(spectral_factors(gamma, "cogram"),
                               spectral_factors(psi, "cogram"), Q, mu)
        stat = max(stat, np.linalg.norm(h_operator(gamma, psi, C, mu) - Q) / np.linalg.norm(Q))
    return agree, stat


def suite_update_equivalence():
    agree, stat = update_equivalence()
    assert agree <= 1e-10, f"updates disagree by {agree:.3g}"
    assert stat <= 1e-8, f"h(C) = Q violated by {stat:.3g}"
    return f"agreement {agree:.1e}, stationarity {stat:.1e}"


def greedy_equivalence(n_instances=10, seed=203):
    """Count selection mismatches against vector OMP and exhaustive-search violations."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(n_instances):
        gamma, psi, S, _ = random_instance(rng)
        prob = ExplicitProblem.from_separable(gamma, psi, S)
        ref = vector_omp(prob.phi, prob.s, 6, n_gamma=prob.n_gamma)
        code, _ = kron_omp((gamma, psi), S, SolverConfig(K=6))
        mismatches += code.pairs != ref.pairs
    violations = 0
    for _ in range(n_instances):
        gamma = unit_columns(rng.standard_normal((4, 3)))
        psi = unit_columns(rng.standard_normal((3, 4)))
        S = rng.standard_normal((4, 3))
        prob = ExplicitProblem.from_separable(gamma, psi, S)
        _, best = exhaustive_l0(prob.phi, prob.s, 2)
        _, rep = kron_omp((gamma, psi), S, SolverConfig(K=2))
        violations += math.sqrt(2.0 * rep.objective) < best - 1e-12
    return mismatches, violations


def suite_greedy_equivalence():
    mismatches, violations = greedy_equivalence()
    assert mismatches == 0, f"{mismatches} instances select differently from vector OMP"
    assert violations == 0, f"{violations} instances beat the exhaustive optimum"
    return "selections identical; exhaustive bound respected"


def dadmm_certificates(n_instances=10, seed=204):
    """Check gap at termination and dual feasibility at every iteration."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        gamma, psi, S, lam = random_instance(rng)
        cfg = SolverConfig(lam=lam)
        duals = []
        _, rep = kron_dadmm((gamma, psi), S, cfg, trace_dual=duals)
        assert max(duals) <= lam * (1 + 1e-15), "dual variable left the feasible box"
        bound = cfg.epsilon * (1.0 + 0.5 * float(np.vdot(S, S)))
        assert rep.termination == "tolerance", "dual ADMM did not converge"
        assert rep.gap_trace[-1] <= bound, f"final gap {rep.gap_trace[-1]:.3g} > {bound:.3g}"
        worst = max(worst, rep.gap_trace[-1] / bound)
    return worst


def suite_dadmm_certificate():
    worst = dadmm_certificates()
    return f"worst final gap at {worst:.2f} of the bound"


def orthonormal_shortcut_agreement(n_instances=5, seed=205):
    rng = np.random.default_rng(seed)
    worst = 0.0
    psi = build_haar(16, 4)
    for _ in range(n_instances):
        gamma = unit_columns(rng.standard_normal((6, 12)))
        S = rng.standard_normal((6, 16))
        lam = 0.2 * float(np.abs(kron_adjoint(gamma, S, psi.matrix)).max())
        sd = pair(gamma, psi)
        cfg = SolverConfig(lam=lam, epsilon=1e-12)
        _, a = solve_orthonormal_shortcut(sd, S, cfg)
        _, b = kron_fista(sd, S, cfg)
        worst = max(worst, _rel(a.objective, b.objective))
    return worst


def suite_orthonormal_shortcut():
    worst = orthonormal_shortcut_agreement()
    assert worst <= 1e-6, f"shortcut objective off by {worst:.3g}"
    return f"worst relative difference {worst:.1e}"


QUICK = {
    "kron_identities": suite_kron_identities,
    "shrink_prox": suite_shrink_prox,
    "weak_duality": suite_weak_duality,
    "scaling_grid": suite_scaling_grid,
    "haar_tensor": suite_haar_tensor,
    "stationarity": suite_stationarity,
    "residual_monotonicity": suite_residual_monotonicity,
    "ksmx_roundtrip": suite_ksmx_roundtrip,
    "phantom_reproducibility": suite_phantom_reproducibility,
}

FULL = {
    **QUICK,
    "oracle_equivalence": suite_oracle_equivalence,
    "update_equivalence": suite_update_equivalence,
    "greedy_equivalence": suite_greedy_equivalence,
    "dadmm_certificate": suite_dadmm_certificate,
    "orthonormal_shortcut": suite_orthonormal_shortcut,
}


def run_suites(level="quick", fixture_dir=None):
    """Run every suite of a level; returns a JSON-ready report with ``passed``."""
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    suites = dict(QUICK if level == "quick" else FULL)
    if fixture_dir is not None:
        suites["fixtures"] = lambda: suite_fixtures(fixture_dir)
    results = []
    for name, fn in suites.items():
        t0 = time.perf_counter()
        try:
            detail, ok = fn(), True
        except Exception as exc:  # a suite failure, whatever its cause
            detail, ok = f"{type(exc).__name__}: {exc}", False
        results.append({"suite": name, "passed": ok, "detail": detail,
                        "seconds": round(time.perf_counter() - t0, 3)})
    return {"schema_version": 1, "level": level,
            "passed": all(r["passed"] for r in results), "suites": results}
