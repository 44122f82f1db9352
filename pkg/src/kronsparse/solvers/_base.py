"""Configuration, reports and shared loop machinery for the solvers."""

import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .._validation import check_conformable, check_matrix
from ..core import NONZERO_TOL, count_nonzero, kron_adjoint, kron_apply
from ..dictionaries import Dictionary, SeparableDictionary, pair

REPORT_SCHEMA_VERSION = 1


class SolverDivergence(RuntimeError):
    """The objective stayed far above its starting value for too long."""


@dataclass(frozen=True)
class LineSearch:
    shrink_factor: float = 2.0
    grow_factor: float = 2.0
    max_probes: int = 50


@dataclass(frozen=True)
class SolverConfig:
    """Tunables shared by all solvers.

    ``shrink_factor`` multiplies the step constant ``L`` after a rejected
    probe; each line search starts from the previous ``L / grow_factor``.
    ``target_objective`` with ``target_rel_err`` adds an extra stopping
    rule, ``|f_k - f*| <= target_rel_err * |f*|``, used by algorithm races.
    ``dadmm_sign`` picks the sign of the dual variable in the dual ADMM
    rotated-dual update; see :func:`kronsparse.solvers.kron_dadmm`.
    """

    lam: float = 0.1
    mu: float = 1.0
    eta: float = 1.0
    epsilon: float = 1e-8
    epsilon_inner: float = 1e-6
    max_iter: int = 20000
    max_inner_iter: int = 500
    K: int | None = None
    linesearch: LineSearch = field(default_factory=LineSearch)
    target_objective: float | None = None
    target_rel_err: float = 1e-4
    dadmm_sign: str = "minus"
    divergence_factor: float = 10.0
    divergence_window: int = 100
    record_gap: bool = False

    def __post_init__(self):
        for name in ("epsilon", "epsilon_inner", "mu", "eta", "target_rel_err"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.max_iter < 1 or self.max_inner_iter < 1:
            raise ValueError("iteration limits must be positive")
        if self.K is not None and self.K < 1:
            raise ValueError("K must be at least 1")
        if self.dadmm_sign not in ("minus", "plus"):
            raise ValueError("dadmm_sign must be 'minus' or 'plus'")

    def with_(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        d = asdict(self)
        return d


@dataclass
class SparseCode:
    """Coefficient matrix ``C`` (N_gamma x N_psi) and its support."""

    coef: np.ndarray
    pairs: list | None = None

    @property
    def support(self):
        """Nonzero positions as sorted ``(i, j)`` tuples."""
        idx = np.argwhere(np.abs(self.coef) > NONZERO_TOL)
        return [tuple(map(int, p)) for p in idx]

    @property
    def nnz(self):
        return count_nonzero(self.coef)

    def support_json(self):
        out = {"shape": list(self.coef.shape), "support": [list(p) for p in self.support]}
        if self.pairs is not None:
            out["selection_order"] = [list(map(int, p)) for p in self.pairs]
        return out


@dataclass
class SolveReport:
    algorithm: str
    iterations: int = 0
    objective_trace: list = field(default_factory=list)
    gap_trace: list | None = None
    wall_time: float = 0.0
    precompute_time: float = 0.0
    final_sparsity: int = 0
    atoms_per_voxel: float = 0.0
    termination: str = "max_iter"
    objective: float = float("nan")

    def to_json(self, config=None):
        cfg = None
        if config is not None:
            cfg = config.as_dict() if isinstance(config, SolverConfig) else dict(config)
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "algorithm": self.algorithm,
            "config": cfg,
            "iterations": self.iterations,
            "objective": self.objective,
            "objective_trace": list(self.objective_trace),
            "gap_trace": None if self.gap_trace is None else list(self.gap_trace),
            "wall_time_s": self.wall_time,
            "precompute_time_s": self.precompute_time,
            "sparsity": self.final_sparsity,
            "atoms_per_voxel": self.atoms_per_voxel,
            "termination": self.termination,
        }

    def dumps(self, config=None):
        return json.dumps(self.to_json(config), indent=2, sort_keys=True)


class KronOperator:
    """``C -> gamma @ C @ psi.T`` and its adjoint; ``psi=None`` means identity."""

    def __init__(self, gamma, psi=None):
        self.gamma = gamma
        self.psi = psi

    def forward(self, C):
        if self.psi is None:
            return self.gamma @ C
        return kron_apply(self.gamma, C, self.psi)

    def adjoint(self, R):
        if self.psi is None:
            return self.gamma.T @ R
        return kron_adjoint(self.gamma, R, self.psi)


def as_separable(dictionary, psi=None, precompute="none"):
    """Accept a :class:`SeparableDictionary` or a ``(gamma, psi)`` pair."""
    if isinstance(dictionary, SeparableDictionary):
        return dictionary
    if psi is None and isinstance(dictionary, tuple):
        dictionary, psi = dictionary
    return pair(dictionary, psi, precompute=precompute)


def matrices(sdict):
    return sdict.gamma.matrix, sdict.psi.matrix


def prepare_signal(sdict, S):
    S = check_matrix(S, "S")
    gamma, psi = matrices(sdict)
    check_conformable(gamma, None, psi, S)
    return S


def initial_code(sdict, C0):
    shape = sdict.code_shape
    if C0 is None:
        return np.zeros(shape)
    C0 = check_matrix(C0, "C0")
    if C0.shape != shape:
        raise ValueError(f"warm start has shape {C0.shape}, expected {shape}")
    return C0.copy()


def relative_change(f_new, f_old):
    return abs(f_new - f_old) / (1.0 + abs(f_new))


def argmax_pair(scores, rtol=1e-12):
    """Index of the largest entry; ties (within ``rtol``) go to the smallest ``(i, j)``."""
    m = scores.max()
    if not np.isfinite(m):
        raise ValueError("no selectable entries")
    thresh = m - rtol * abs(m)
    i, j = np.argwhere(scores >= thresh)[0]
    return int(i), int(j)


class Monitor:
    """Tracks the objective trace, divergence and the race target."""

    def __init__(self, name, config, f0, V, callback=None):
        self.report = SolveReport(algorithm=name)
        self.config = config
        self.f0 = f0
        self.V = V
        self.callback = callback
        self._above = 0
        self._t0 = None

    def start(self):
        self._t0 = time.perf_counter()

    def record(self, f, gap=None, state=None):
        r = self.report
        r.objective_trace.append(float(f))
        if gap is not None:
            if r.gap_trace is None:
                r.gap_trace = []
            r.gap_trace.append(float(gap))
        r.iterations += 1
        if self.callback is not None:
            self.callback(r.iterations, f, state)
        if f > self.config.divergence_factor * max(self.f0, 1e-300):
            self._above += 1
            if self._above >= self.config.divergence_window:
                raise SolverDivergence(
                    f"{r.algorithm}: objective above {self.config.divergence_factor}x "
                    f"its initial value for {self._above} iterations")
        else:
            self._above = 0

    def hit_target(self, f):
        fstar = self.config.target_objective
        if fstar is None:
            return False
        return abs(f - fstar) <= self.config.target_rel_err * abs(fstar)

    def finish(self, C, termination, objective):
        r = self.report
        r.wall_time = time.perf_counter() - self._t0
        r.final_sparsity = count_nonzero(C)
        r.atoms_per_voxel = r.final_sparsity / self.V
        r.termination = termination
        r.objective = float(objective)
        return r
