import math

import numpy as np
import pytest

from kronsparse.bench import (baseline_compare, critical_lambda, monotonicity_summary,
                              parse_lambda_grid, race, race_ordering, sweep, zero_voxel_bound)
from kronsparse.phantom import make_phantom


@pytest.fixture(scope="module")
def tiny():
    sd, S, _, _ = make_phantom((8, 8), 10, 16, 16, snr=30.0, seed=0, levels=3)
    return sd, S


def test_grid_table_values():
    g = parse_lambda_grid("1.4^1..1.4^-9:6")
    assert g == pytest.approx([1.4 ** e for e in (1, -1, -3, -5, -7, -9)])


def test_grid_list_sorted_descending():
    assert parse_lambda_grid("0.1, 2, 0.5") == [2.0, 0.5, 0.1]
    assert parse_lambda_grid("2^0..2^0:1") == [1.0]


@pytest.mark.parametrize("bad", ["", "abc", "1.4^1..1.5^0:3", "1^1..1^2:3", "-1,2", "nan"])
def test_grid_errors(bad):
    with pytest.raises(ValueError):
        parse_lambda_grid(bad)


def test_sweep_rows(tiny):
    sd, S = tiny
    lams = [critical_lambda(sd, S) * 1.01, 0.3, 0.1, 0.03]
    rows, summary = sweep(sd, S, "fista", lams, timing=False)
    assert [r["lambda"] for r in rows] == sorted(lams, reverse=True)
    assert rows[0]["atoms_per_voxel"] == 0.0
    for r in rows:
        assert r["wall_time_s"] == 0.0
    assert summary["monotone"]
    apv = [r["atoms_per_voxel"] for r in rows]
    assert apv == sorted(apv)


def test_sweep_rejects_greedy(tiny):
    with pytest.raises(ValueError):
        sweep(*tiny, "omp", [0.1])


def test_monotonicity_counting_tolerance():
    rows = [{"lambda": 1.0, "atoms_per_voxel": 0.5}, {"lambda": 0.5, "atoms_per_voxel": 0.25}]
    assert monotonicity_summary(rows, 4)["monotone"]  # one atom lost
    report = monotonicity_summary(rows, 8)  # two atoms lost
    assert not report["monotone"]
    assert report["violations"][0]["atoms_lost"] == 2


def test_race_rows_and_determinism(tiny):
    sd, S = tiny
    a = race(sd, S, [0.2, 0.05], timing=False)
    b = race(sd, S, [0.2, 0.05], timing=False, parallel=3)
    assert a == b
    for r in a:
        assert r["status"] == "ok"
        assert abs(r["objective"] - r["reference_objective"]) <= 1e-4 * (
            1 + r["reference_objective"])
    assert set(race_ordering(a)) == {0.2, 0.05}


def test_race_dnf(tiny):
    from kronsparse.solvers import SolverConfig
    sd, S = tiny
    rows = race(sd, S, [0.05], ["admm"], config=SolverConfig(max_iter=2), timing=False)
    assert rows[0]["status"] == "DNF"


def test_baseline_compare(tiny):
    sd, S = tiny
    rows = baseline_compare(sd, S, [5.0, 0.5, 0.05], timing=False)
    assert {r["path"] for r in rows} == {"joint", "identity"}
    bound = zero_voxel_bound(S)
    for r in rows:
        if r["path"] == "identity" and r["atoms_per_voxel"] < 1:
            assert r["zero_voxel_bound"] == bound and r["bound_holds"]
    top = [r for r in rows if r["lambda"] == 5.0]
    assert all(r["atoms_per_voxel"] == 0.0 for r in top)


def test_zero_voxel_bound_is_analytic(rng):
    S = rng.standard_normal((4, 6))
    assert zero_voxel_bound(S) == pytest.approx(np.linalg.norm(S, axis=0).min() / 24)
    assert math.isfinite(zero_voxel_bound(S))
