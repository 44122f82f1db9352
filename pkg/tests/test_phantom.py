import math

import numpy as np
import pytest

from kronsparse.core import kron_apply, lasso_objective
from kronsparse.dictionaries import build_haar, build_directional_surrogate, pair
from kronsparse.phantom import (BUNDLE_FILES, PhantomSpec, make_phantom, plant_sparse_code,
                                read_bundle, standard_desk_phantom, synthesize, write_bundle)
from kronsparse.solvers import SolverConfig, kron_fista


def test_small2d_preset():
    sd, S, C, spec = standard_desk_phantom("small2d")
    assert (spec.G, spec.V, spec.K_planted) == (20, 256, 64)
    assert S.shape == (20, 256)
    assert np.count_nonzero(C) / spec.V == 0.25
    assert sd.psi.flags.orthonormal


def test_slice50_and_volume_presets():
    _, S, _, spec = standard_desk_phantom("slice50")
    assert (spec.G, spec.V) == (64, 2500)
    _, S, _, spec = standard_desk_phantom("volume")
    assert S.size == 16 * 16 * 8 * 32


def test_unknown_preset():
    with pytest.raises(ValueError):
        standard_desk_phantom("huge")


def test_noise_free_exact():
    sd, S, C, _ = standard_desk_phantom("small2d", snr=math.inf)
    assert lasso_objective(sd.gamma.matrix, sd.psi.matrix, C, S, 0.0) <= 1e-20


def test_every_voxel_covered():
    _, S, _, _ = standard_desk_phantom("small2d", snr=math.inf)
    assert np.linalg.norm(S, axis=0).min() > 0


def test_deterministic():
    a = standard_desk_phantom("small2d", seed=5)
    b = standard_desk_phantom("small2d", seed=5)
    assert np.array_equal(a[1], b[1]) and np.array_equal(a[2], b[2]) and a[3] == b[3]
    c = standard_desk_phantom("small2d", seed=6)
    assert not np.array_equal(a[1], c[1])


def test_plant_sparse_code():
    C = plant_sparse_code(4, 5, 20, seed=1)
    assert np.count_nonzero(C) == 20
    C = plant_sparse_code(10, 12, 30, seed=2, amp_range=(0.5, 2.0))
    mags = np.abs(C[C != 0])
    assert mags.size == 30 and mags.min() >= 0.5 and mags.max() <= 2.0
    assert np.array_equal(C, plant_sparse_code(10, 12, 30, seed=2))
    with pytest.raises(ValueError):
        plant_sparse_code(2, 2, 5)
    with pytest.raises(ValueError):
        plant_sparse_code(2, 2, 1, amp_range=(0.0, 1.0))


def test_synthesize_snr():
    gamma = build_directional_surrogate(64, 40, seed=0)
    sd = pair(gamma, build_haar(16, 4, dims=2))
    C = plant_sparse_code(40, 256, 200, seed=0)
    clean = kron_apply(gamma.matrix, C, sd.psi.matrix)
    S = synthesize(sd, C, snr=20.0, seed=9)
    assert S.size >= 10**4
    emp = np.sqrt(np.mean(clean**2)) / np.sqrt(np.mean((S - clean) ** 2))
    assert abs(emp / 20.0 - 1) <= 0.05
    assert np.array_equal(S, synthesize(sd, C, snr=20.0, seed=9))
    assert np.array_equal(synthesize(sd, C), clean)
    with pytest.raises(ValueError):
        synthesize(sd, C, snr=0.0)


def test_noise_free_recovery_small_lambda():
    sd, S, C, _ = make_phantom((8, 8), 10, 16, 16, snr=math.inf, seed=1, levels=3)
    code, _ = kron_fista(sd, S, SolverConfig(lam=1e-5, epsilon=1e-14, max_iter=50000))
    R = kron_apply(sd.gamma.matrix, code.coef, sd.psi.matrix) - S
    assert np.linalg.norm(R) / S.size <= 1e-6


def test_bundle_roundtrip(tmp_path):
    sd, S, C, spec = standard_desk_phantom("small2d")
    files = write_bundle(tmp_path, sd, S, C, spec)
    assert sorted(f.name for f in files) == sorted(BUNDLE_FILES)
    sd2, S2, C2, spec2 = read_bundle(tmp_path)
    assert np.array_equal(S, S2) and np.array_equal(C, C2)
    assert np.array_equal(sd.gamma.matrix, sd2.gamma.matrix)
    assert spec2 == spec


def test_spec_json_infinite_snr():
    spec = PhantomSpec(G=2, V=3, spatial_shape=(3,), n_gamma=4, n_psi=3, K_planted=1,
                       snr=math.inf, seed=0)
    d = spec.to_json()
    assert d["snr"] is None and d["noise_model"] == "gaussian"
    assert PhantomSpec.from_json(d) == spec
