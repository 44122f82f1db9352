"""Benchmark drivers: lambda sweeps, algorithm races and the identity baseline.

Each driver returns plain row dictionaries so the command line can write
them as CSV or JSON without further processing.
"""

import math
import re
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .core import kron_adjoint, residual
from .dictionaries import build_identity, pair
from .solvers import GREEDY, LASSO, SOLVERS, SolverConfig

SCHEMA_VERSION = 1

#: Epsilon of the high-precision reference minimum used by races.
REFERENCE_EPSILON = 1e-8

SWEEP_COLUMNS = ("schema_version", "algorithm", "lambda", "atoms_per_voxel",
                 "residual_per_entry", "objective", "iterations", "wall_time_s", "termination")
RACE_COLUMNS = ("schema_version", "lambda", "algorithm", "iterations", "wall_time_s",
                "objective", "reference_objective", "rel_err", "status")
BASELINE_COLUMNS = ("schema_version", "path", "lambda", "atoms_per_voxel",
                    "residual_per_entry", "zero_voxel_bound", "bound_holds")

_GRID = re.compile(r"^\s*([0-9.eE+-]+)\^([0-9.eE+-]+)\s*\.\.\s*([0-9.eE+-]+)\^([0-9.eE+-]+)"
                   r"\s*:\s*(\d+)\s*$")


def parse_lambda_grid(text):
    """Expand a lambda grid into a list sorted from largest to smallest.

    Accepts ``"base^a..base^b:count"`` (``count`` exponents evenly spaced
    from ``a`` to ``b``) or a comma-separated list of values.

    >>> [round(x, 4) for x in parse_lambda_grid("1.4^1..1.4^-9:6")]
    [1.4, 0.7143, 0.3644, 0.1859, 0.0949, 0.0484]
    """
    m = _GRID.match(text)
    if m:
        base, lo, base2, hi, count = m.groups()
        if float(base) != float(base2):
            raise ValueError(f"grid bases differ: {base} vs {base2}")
        base, count = float(base), int(count)
        if base <= 0 or base == 1 or count < 1:
            raise ValueError("grid base must be positive and not 1; count at least 1")
        exps = np.linspace(float(lo), float(hi), count) if count > 1 else [float(lo)]
        values = [base ** float(e) for e in exps]
    else:
        try:
            values = [float(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise ValueError(f"cannot parse lambda grid {text!r}") from None
    if not values or any(not (v >= 0 and math.isfinite(v)) for v in values):
        raise ValueError(f"lambda grid {text!r} must hold finite nonnegative values")
    return sorted(values, reverse=True)


def critical_lambda(sdict, S):
    """Smallest lambda for which the LASSO solution is zero."""
    return float(np.abs(kron_adjoint(sdict.gamma.matrix, S, sdict.psi.matrix)).max())


def residual_per_entry(sdict, C, S):
    """``||gamma C psi^T - S||_F / (G V)``."""
    R = residual(sdict.gamma.matrix, C, sdict.psi.matrix, S)
    return float(np.linalg.norm(R)) / S.size


def zero_voxel_bound(S):
    """Residual floor of any identity-spatial code with fewer than one atom per voxel.

    With ``psi = I`` and ``||C||_0 < V`` some column of ``C`` is zero, so
    the matching voxel is not fitted at all.
    """
    return float(np.linalg.norm(S, axis=0).min()) / S.size


def run_solver(algo, sdict, S, config, C0=None):
    if algo not in SOLVERS:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {sorted(SOLVERS)}")
    if algo in GREEDY:
        return SOLVERS[algo](sdict, S, config)
    return SOLVERS[algo](sdict, S, config, C0=C0)


def sweep(sdict, S, algo, lambdas, config=None, timing=True):
    """Solve along a decreasing lambda grid, warm-starting each solve.

    Returns ``(rows, summary)``; the summary checks that atoms/voxel never
    drops as lambda decreases.
    """
    if algo not in LASSO:
        raise ValueError(f"sweeps need a LASSO solver ({', '.join(LASSO)}), got {algo!r}")
    config = config or SolverConfig()
    rows = []
    C = None
    for lam in sorted(lambdas, reverse=True):
        code, rep = run_solver(algo, sdict, S, config.with_(lam=lam), C0=C)
        C = code.coef
        rows.append({
            "schema_version": SCHEMA_VERSION,
            "algorithm": algo,
            "lambda": lam,
            "atoms_per_voxel": rep.atoms_per_voxel,
            "residual_per_entry": residual_per_entry(sdict, C, S),
            "objective": rep.objective,
            "iterations": rep.iterations,
            "wall_time_s": rep.wall_time if timing else 0.0,
            "termination": rep.termination,
        })
    return rows, monotonicity_summary(rows, S.shape[1])


def monotonicity_summary(rows, V):
    """Report lambda steps where atoms/voxel decreased as lambda decreased.

    A drop of a single atom is within counting tolerance.
    """
    violations = []
    for prev, cur in zip(rows, rows[1:]):
        drop = (prev["atoms_per_voxel"] - cur["atoms_per_voxel"]) * V
        if drop > 1.0 + 1e-9:
            violations.append({"lambda_from": prev["lambda"], "lambda_to": cur["lambda"],
                               "atoms_lost": round(drop)})
    return {"schema_version": SCHEMA_VERSION, "monotone": not violations,
            "violations": violations, "count": len(rows)}


def reference_minimum(sdict, S, lam, config=None):
    """High-precision FISTA minimum used as the race finish line."""
    config = (config or SolverConfig()).with_(lam=lam, epsilon=REFERENCE_EPSILON,
                                               target_objective=None)
    _, rep = run_solver("fista", sdict, S, config)
    return rep.objective


def _race_cell(args):
    algo, lam, fstar, sdict, S, config, timing = args
    cfg = config.with_(lam=lam, target_objective=fstar)
    _, rep = run_solver(algo, sdict, S, cfg)
    rel = abs(rep.objective - fstar) / abs(fstar) if fstar != 0 else abs(rep.objective)
    return {
        "schema_version": SCHEMA_VERSION,
        "lambda": lam,
        "algorithm": algo,
        "iterations": rep.iterations,
        "wall_time_s": rep.wall_time if timing else 0.0,
        "objective": rep.objective,
        "reference_objective": fstar,
        "rel_err": rel,
        "status": "ok" if rel <= config.target_rel_err else "DNF",
    }


def race(sdict, S, lambdas, algos=("admm", "dadmm", "fista"), target_rel_err=1e-4,
         config=None, parallel=1, timing=True):
    """Iterations and time each solver needs to reach the reference minimum.

    For every lambda the reference is FISTA run at a tight tolerance; each
    solver then stops once ``|f - f*| <= target_rel_err |f*|``. Solvers
    that never get there are marked ``DNF``. Rows are ordered by lambda
    (descending), then by the order of ``algos``.
    """
    for a in algos:
        if a not in LASSO:
            raise ValueError(f"races need LASSO solvers ({', '.join(LASSO)}), got {a!r}")
    config = (config or SolverConfig()).with_(target_rel_err=target_rel_err)
    lambdas = sorted(lambdas, reverse=True)
    refs = {lam: reference_minimum(sdict, S, lam, config) for lam in lambdas}
    cells = [(a, lam, refs[lam], sdict, S, config, timing) for lam in lambdas for a in algos]
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_race_cell, cells))
    return [_race_cell(c) for c in cells]


def race_ordering(rows, order=("fista", "dadmm", "admm")):
    """Per lambda, whether iteration counts strictly increase along ``order``."""
    by_lam = {}
    for r in rows:
        by_lam.setdefault(r["lambda"], {})[r["algorithm"]] = r
    out = {}
    for lam, cell in by_lam.items():
        if not all(a in cell for a in order):
            continue
        ok = all(cell[a]["status"] == "ok" for a in order)
        its = [cell[a]["iterations"] for a in order]
        out[lam] = ok and all(x < y for x, y in zip(its, its[1:]))
    return out


def baseline_compare(sdict, S, lambdas, algo="fista", config=None, timing=True):
    """Sweep the joint dictionary and the identity-spatial baseline side by side.

    Identity rows with fewer than one atom per voxel carry the analytic
    zero-voxel bound and whether the measured residual respects it.
    """
    if sdict.psi.flags.identity:
        raise ValueError("the bundle's spatial dictionary is already the identity")
    ident = pair(sdict.gamma, build_identity(S.shape[1]))
    bound = zero_voxel_bound(S)
    rows = []
    for path, d in (("joint", sdict), ("identity", ident)):
        sw, _ = sweep(d, S, algo, lambdas, config, timing=timing)
        for r in sw:
            row = {"schema_version": SCHEMA_VERSION, "path": path, "lambda": r["lambda"],
                   "atoms_per_voxel": r["atoms_per_voxel"],
                   "residual_per_entry": r["residual_per_entry"],
                   "zero_voxel_bound": None, "bound_holds": None}
            if path == "identity" and r["atoms_per_voxel"] < 1.0:
                row["zero_voxel_bound"] = bound
                row["bound_holds"] = r["residual_per_entry"] >= bound * (1.0 - 1e-12)
            rows.append(row)
    return rows
