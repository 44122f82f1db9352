import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kronsparse._validation import DimensionError
from kronsparse.core import (DecompositionError, count_nonzero, delta_eta, delta_mu,
                             duality_gap, flat_index, kron_adjoint, kron_apply, kron_explicit,
                             lasso_objective, mat_unstack, max_eigenvalue, project_inf_ball,
                             shrink, spectral_factors, unflat_index, vec_stack)
from kronsparse.dictionaries import build_random_tight_frame
from kronsparse.oracle import ExplicitProblem, lasso_value, vector_fista

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_vec_stack_column_major():
    S = np.array([[1.0, 3.0], [2.0, 4.0]])
    assert vec_stack(S).tolist() == [1.0, 2.0, 3.0, 4.0]


def test_vec_roundtrip(rng):
    S = rng.standard_normal((5, 7))
    assert np.array_equal(mat_unstack(vec_stack(S), 5, 7), S)


def test_vec_zero():
    assert np.array_equal(vec_stack(np.zeros((3, 4))), np.zeros(12))


def test_unstack_wrong_size():
    with pytest.raises(DimensionError):
        mat_unstack(np.zeros(5), 2, 3)


def test_flat_index_roundtrip():
    for i in range(4):
        for j in range(3):
            assert unflat_index(flat_index(i, j, 4), 4) == (i, j)


def test_kron_explicit_identity():
    assert np.array_equal(kron_explicit(np.eye(2), np.eye(3)), np.eye(6))


def test_kron_explicit_scalar_block(rng):
    gamma = rng.standard_normal((3, 4))
    assert np.allclose(kron_explicit(np.array([[2.0]]), gamma), 2 * gamma)


def test_kron_explicit_block_structure(rng):
    gamma, psi = rng.standard_normal((3, 4)), rng.standard_normal((2, 5))
    phi = kron_explicit(psi, gamma)
    assert np.array_equal(phi[3:6, 8:12], psi[1, 2] * gamma)


def test_kron_explicit_size_cap():
    with pytest.raises(MemoryError):
        kron_explicit(np.ones((10, 10)), np.ones((10, 10)), size_cap=100)


def test_kron_apply_matches_explicit(rng):
    gamma, psi = rng.standard_normal((4, 6)), rng.standard_normal((3, 5))
    C = rng.standard_normal((6, 5))
    lhs = vec_stack(kron_apply(gamma, C, psi))
    rhs = kron_explicit(psi, gamma) @ vec_stack(C)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_kron_apply_identity(rng):
    C = rng.standard_normal((3, 4))
    assert np.allclose(kron_apply(np.eye(3), C, np.eye(4)), C)


def test_kron_apply_dimension_mismatch():
    with pytest.raises(DimensionError):
        kron_apply(np.ones((3, 4)), np.ones((5, 2)), np.ones((6, 2)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6),
       st.integers(0, 2**32 - 1))
def test_adjoint_identity(G, V, ng, npsi, seed):
    r = np.random.default_rng(seed)
    gamma, psi = r.standard_normal((G, ng)), r.standard_normal((V, npsi))
    C, S = r.standard_normal((ng, npsi)), r.standard_normal((G, V))
    a = float(np.vdot(kron_apply(gamma, C, psi), S))
    b = float(np.vdot(C, kron_adjoint(gamma, S, psi)))
    assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_shrink_examples():
    assert shrink(np.array([[1.2]]), 0.5)[0, 0] == pytest.approx(0.7)
    assert shrink(np.array([[-0.3]]), 0.5)[0, 0] == 0.0
    X = np.array([[1.0, -2.0], [0.1, 0.0]])
    assert np.array_equal(shrink(X, 0.0), X)


def test_shrink_negative_kappa():
    with pytest.raises(ValueError):
        shrink(np.ones((1, 1)), -1.0)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 4), elements=finite), arrays(np.float64, (3, 4), elements=finite),
       st.floats(0, 10))
def test_shrink_nonexpansive(X, Y, k):
    assert np.linalg.norm(shrink(X, k) - shrink(Y, k)) <= np.linalg.norm(X - Y) * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 2))
def test_shrink_is_prox(x, k):
    z = shrink(np.array([[x]]), k)[0, 0]
    grid = np.linspace(-4, 4, 80001)
    vals = 0.5 * (grid - x) ** 2 + k * np.abs(grid)
    assert 0.5 * (z - x) ** 2 + k * abs(z) <= vals.min() + 1e-12


def test_project_examples():
    assert project_inf_ball(np.array([[3.0]]), 1.0)[0, 0] == 1.0
    assert project_inf_ball(np.array([[-3.0]]), 1.0)[0, 0] == -1.0
    with pytest.raises(ValueError):
        project_inf_ball(np.ones((1, 1)), -0.1)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (4, 3), elements=finite), st.floats(0, 100))
def test_project_bound(X, lam):
    assert np.abs(project_inf_ball(X, lam)).max() <= lam


def test_spectral_identity():
    f = spectral_factors(np.eye(4), "gram")
    assert np.allclose(f.eigenvalues, 1.0)


def test_spectral_tight_frame():
    D = build_random_tight_frame(6, 20, seed=1).matrix
    f = spectral_factors(D, "cogram")
    assert np.allclose(f.eigenvalues, 1.0, atol=1e-8)
    assert np.allclose(f.rotated, f.vectors.T @ D)


def test_spectral_reconstruct(rng):
    D = rng.standard_normal((6, 10))
    f = spectral_factors(D, "gram")
    assert np.allclose(f.vectors @ np.diag(f.eigenvalues) @ f.vectors.T, D.T @ D, atol=1e-8)
    assert np.all(np.diff(f.eigenvalues) <= 0) and np.all(f.eigenvalues >= 0)


def test_spectral_rejects_zero():
    with pytest.raises((ValueError, DecompositionError)):
        spectral_factors(np.zeros((3, 3)), "gram")


def test_scaling_grids(rng):
    dg, dp = rng.uniform(0, 4, 5), rng.uniform(0, 4, 6)
    g = delta_mu(dg, dp, 2.0).values
    assert g.shape == (5, 6)
    assert np.all((g > 0) & (g <= 0.5))
    assert np.allclose(g, 1.0 / (np.outer(dg, dp) + 2.0))
    h = delta_eta(dg, dp, 2.0).values
    assert np.all((h > 0) & (h <= 1.0))


def test_lasso_objective_zero_code(rng):
    S = rng.standard_normal((3, 4))
    f = lasso_objective(rng.standard_normal((3, 5)), rng.standard_normal((4, 6)),
                        np.zeros((5, 6)), S, 0.7)
    assert f == pytest.approx(0.5 * np.sum(S**2))


def test_lasso_objective_interpolation(rng):
    gamma, psi, C = rng.standard_normal((3, 5)), rng.standard_normal((4, 6)), \
        rng.standard_normal((5, 6))
    assert lasso_objective(gamma, psi, C, kron_apply(gamma, C, psi), 0.0) <= 1e-20


def test_lasso_objective_matches_vector(rng):
    gamma, psi = rng.standard_normal((3, 5)), rng.standard_normal((4, 6))
    C, S = rng.standard_normal((5, 6)), rng.standard_normal((3, 4))
    p = ExplicitProblem.from_separable(gamma, psi, S)
    a = lasso_objective(gamma, psi, C, S, 0.3)
    assert a == pytest.approx(lasso_value(p.phi, p.s, vec_stack(C), 0.3), rel=1e-10)


def test_gap_zero_above_critical(rng):
    gamma, psi, S = rng.standard_normal((3, 5)), rng.standard_normal((4, 6)), \
        rng.standard_normal((3, 4))
    lam = np.abs(kron_adjoint(gamma, S, psi)).max() * 1.01
    assert abs(duality_gap(gamma, psi, np.zeros((5, 6)), S, lam)) <= 1e-10


def test_gap_at_optimum(rng):
    gamma, psi, S = rng.standard_normal((3, 5)), rng.standard_normal((4, 6)), \
        rng.standard_normal((3, 4))
    lam = 0.2 * np.abs(kron_adjoint(gamma, S, psi)).max()
    p = ExplicitProblem.from_separable(gamma, psi, S)
    c, _ = vector_fista(p.phi, p.s, lam, eps=1e-14)
    assert duality_gap(gamma, psi, mat_unstack(c, 5, 6), S, lam) <= 1e-6


def test_weak_duality_random(rng):
    for _ in range(100):
        gamma, psi = rng.standard_normal((3, 5)), rng.standard_normal((4, 6))
        C, S = rng.standard_normal((5, 6)), rng.standard_normal((3, 4))
        assert duality_gap(gamma, psi, C, S, rng.uniform(0.01, 5)) >= -1e-10


def test_max_eigenvalue_examples(rng):
    assert max_eigenvalue(np.eye(4)) == pytest.approx(1.0, rel=1e-8)
    assert max_eigenvalue(np.diag([3.0, 1.0])) == pytest.approx(9.0, rel=1e-8)
    D = rng.standard_normal((8, 12))
    true = np.linalg.eigvalsh(D.T @ D).max()
    est = max_eigenvalue(D)
    assert est == pytest.approx(true, rel=1e-6)
    assert est >= true * (1 - 1e-6)


def test_max_eigenvalue_nonconvergence(rng):
    D = np.diag([1.0, 1.0 - 1e-9, 0.5])
    with pytest.raises(DecompositionError):
        max_eigenvalue(D, tol=1e-15, max_iter=3)


def test_count_nonzero_threshold():
    assert count_nonzero(np.array([[1e-11, 2e-10], [0.0, -1.0]])) == 2
