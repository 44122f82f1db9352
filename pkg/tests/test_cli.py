import csv
import json

import numpy as np
import pytest

from kronsparse import cli
from kronsparse.io import read_ksmx, write_ksmx
from kronsparse.phantom import BUNDLE_FILES
from kronsparse.solvers import SolverDivergence


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    d = tmp_path_factory.mktemp("b") / "p"
    assert cli.main(["gen", "--g", "10", "--shape", "8x8", "--k", "16", "--seed", "1",
                     "--out", str(d)]) == 0
    return d


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_gen_preset(tmp_path, capsys):
    code, out = run(capsys, "gen", "--preset", "small2d", "--out", tmp_path / "a")
    assert code == 0
    assert sorted(p.name for p in (tmp_path / "a").iterdir()) == sorted(BUNDLE_FILES)
    assert json.loads(out.out)["K_planted"] == 64
    run(capsys, "gen", "--preset", "small2d", "--out", tmp_path / "b")
    for f in BUNDLE_FILES:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_gen_slice50(tmp_path, capsys):
    code, out = run(capsys, "gen", "--preset", "slice50", "--out", tmp_path)
    spec = json.loads(out.out)
    assert code == 0 and (spec["G"], spec["V"]) == (64, 2500)


def test_gen_argument_errors(tmp_path, capsys):
    assert run(capsys, "gen", "--g", "10", "--out", tmp_path)[0] == 2
    assert run(capsys, "gen", "--g", "10", "--shape", "8y8", "--k", "1", "--out", tmp_path)[0] == 2
    assert run(capsys, "gen", "--g", "10", "--shape", "6x6", "--k", "1", "--out", tmp_path)[0] == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["gen", "--preset", "nope", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_gen_io_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(capsys, "gen", "--preset", "small2d", "--out", blocker / "sub")[0] == 3


def test_solve_super_critical(bundle, tmp_path, capsys):
    code, out = run(capsys, "solve", "--bundle", bundle, "--algo", "fista", "--lambda", "1e9",
                    "--out", tmp_path / "c.ksmx", "--report", tmp_path / "r.json")
    assert code == 0
    assert json.loads(out.out)["sparsity"] == 0
    assert not read_ksmx(tmp_path / "c.ksmx").any()
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["schema_version"] == 1 and rep["config"]["lam"] == 1e9
    sup = json.loads((tmp_path / "c.ksmx.support.json").read_text())
    assert sup["support"] == []


def test_solve_cross_solver(bundle, tmp_path, capsys):
    objs = []
    for algo in ("fista", "dadmm"):
        code, out = run(capsys, "solve", "--bundle", bundle, "--algo", algo, "--lambda", "0.05",
                        "--eps", "1e-10", "--out", tmp_path / f"{algo}.ksmx")
        assert code == 0
        objs.append(json.loads(out.out)["objective"])
    assert abs(objs[0] - objs[1]) <= 1e-6 * objs[0]


def test_solve_omp_single_atom(tmp_path, capsys):
    run(capsys, "gen", "--g", "10", "--shape", "8x8", "--k", "1", "--snr", "inf",
        "--out", tmp_path / "p")
    code, out = run(capsys, "solve", "--bundle", tmp_path / "p", "--algo", "omp", "--k", "1",
                    "--out", tmp_path / "c.ksmx")
    res = json.loads(out.out)
    assert code == 0 and res["sparsity"] == 1 and res["objective"] <= 1e-20


def test_solve_from_matrix_files(bundle, tmp_path, capsys):
    code, _ = run(capsys, "solve", "--gamma", bundle / "gamma.ksmx", "--psi", bundle / "psi.ksmx",
                  "--signal", bundle / "signal.ksmx", "--algo", "omp-pgd", "--k", "3",
                  "--out", tmp_path / "c.ksmx")
    assert code == 0


def test_solve_errors(bundle, tmp_path, capsys, monkeypatch):
    out = tmp_path / "c.ksmx"
    assert run(capsys, "solve", "--bundle", bundle, "--algo", "fista", "--out", out)[0] == 2
    assert run(capsys, "solve", "--bundle", bundle, "--algo", "omp", "--out", out)[0] == 2
    assert run(capsys, "solve", "--algo", "omp", "--k", "1", "--out", out)[0] == 2
    assert run(capsys, "solve", "--bundle", tmp_path / "missing", "--algo", "omp", "--k", "1",
               "--out", out)[0] == 3
    write_ksmx(tmp_path / "s.ksmx", np.ones((3, 3)))
    assert run(capsys, "solve", "--gamma", bundle / "gamma.ksmx", "--psi", bundle / "psi.ksmx",
               "--signal", tmp_path / "s.ksmx", "--algo", "fista", "--lambda", "0.1",
               "--out", out)[0] == 5

    def boom(*a, **k):
        raise SolverDivergence("exploded")

    monkeypatch.setitem(cli.SOLVERS, "admm", boom)
    assert run(capsys, "solve", "--bundle", bundle, "--algo", "admm", "--lambda", "0.1",
               "--out", out)[0] == 4


def test_sweep_byte_stable(bundle, tmp_path, capsys):
    outs = []
    for name in ("a.csv", "b.csv"):
        code, _ = run(capsys, "sweep", "--bundle", bundle, "--lambda-grid", "1.4^1..1.4^-9:6",
                      "--out", tmp_path / name, "--no-timing")
        assert code == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    rows = list(csv.DictReader(open(tmp_path / "a.csv")))
    assert len(rows) == 6 and rows[0]["schema_version"] == "1"
    summary = json.loads((tmp_path / "a.summary.json").read_text())
    assert summary["monotone"]


def test_sweep_bad_grid(bundle, tmp_path, capsys):
    assert run(capsys, "sweep", "--bundle", bundle, "--lambda-grid", "x",
               "--out", tmp_path / "a.csv")[0] == 2


def test_race(bundle, tmp_path, capsys):
    code, _ = run(capsys, "race", "--bundle", bundle, "--lambda", "0.1", "--out",
                  tmp_path / "r.csv", "--no-timing")
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert [r["algorithm"] for r in rows] == ["admm", "dadmm", "fista"]
    payload = json.loads((tmp_path / "r.json").read_text())
    assert payload["target_rel_err"] == 1e-4 and len(payload["rows"]) == 3
    code, _ = run(capsys, "race", "--bundle", bundle, "--lambda", "0.1", "--max-iter", "1",
                  "--out", tmp_path / "d.csv")
    assert code == 0
    statuses = {r["status"] for r in csv.DictReader(open(tmp_path / "d.csv"))}
    assert "DNF" in statuses


def test_race_errors(bundle, tmp_path, capsys):
    assert run(capsys, "race", "--bundle", bundle, "--out", tmp_path / "r.csv")[0] == 2
    assert run(capsys, "race", "--bundle", bundle, "--lambda", "0.1", "--algos", "omp",
               "--out", tmp_path / "r.csv")[0] == 2
    with pytest.raises(SystemExit):
        cli.main(["race", "--bundle", str(bundle), "--lambda", "0.1", "--parallel", "0",
                  "--out", str(tmp_path / "r.csv")])


def test_baseline_compare(bundle, tmp_path, capsys):
    code, out = run(capsys, "baseline-compare", "--bundle", bundle, "--lambda-grid",
                    "10,0.1,0.01", "--out", tmp_path / "b.csv", "--no-timing")
    assert code == 0 and json.loads(out.out)["bound_holds"]
    rows = list(csv.DictReader(open(tmp_path / "b.csv")))
    assert len(rows) == 6


def test_validate_quick(tmp_path, capsys):
    code, out = run(capsys, "validate", "--level", "quick", "--out", tmp_path / "v.json")
    assert code == 0 and json.loads(out.out)["passed"]


def test_validate_fixture_corruption(bundle, tmp_path, capsys):
    fx = tmp_path / "fx"
    fx.mkdir()
    for f in ("gamma.ksmx", "psi.ksmx"):
        (fx / f).write_bytes((bundle / f).read_bytes())
    assert run(capsys, "validate", "--fixture", fx)[0] == 0
    raw = bytearray((fx / "psi.ksmx").read_bytes())
    raw[0] = ord("X")
    (fx / "psi.ksmx").write_bytes(bytes(raw))
    code, out = run(capsys, "validate", "--fixture", fx)
    report = json.loads(out.out)
    assert code == 1 and not report["passed"]
    failed = [s for s in report["suites"] if not s["passed"]]
    assert [s["suite"] for s in failed] == ["fixtures"]
    assert "FormatError" in failed[0]["detail"]


def test_thread_env(bundle, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("KRONSPARSE_THREADS", "1")
    assert run(capsys, "solve", "--bundle", bundle, "--algo", "omp", "--k", "1",
               "--out", tmp_path / "c.ksmx")[0] == 0
    monkeypatch.setenv("KRONSPARSE_THREADS", "many")
    assert run(capsys, "solve", "--bundle", bundle, "--algo", "omp", "--k", "1",
               "--out", tmp_path / "c.ksmx")[0] == 2
