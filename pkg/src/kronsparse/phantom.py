"""Synthetic spatial-angular signals with a planted sparse code.

Signals are ``S = gamma C psi^T + N`` with ``N`` i.i.d. Gaussian noise at
a requested SNR, defined against the root-mean-square of the clean
signal: ``sigma = ||gamma C psi^T||_F / (sqrt(G V) * snr)``.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import count_nonzero, kron_apply
from .dictionaries import (build_dct_tensor, build_directional_surrogate, build_haar_tensor,
                           make_dictionary, pair)
from .io import dump_json, read_ksmx, write_ksmx

BUNDLE_SCHEMA_VERSION = 1
BUNDLE_FILES = ("gamma.ksmx", "psi.ksmx", "signal.ksmx", "code.ksmx", "spec.json")

PRESETS = {
    "small2d": dict(shape=(16, 16), G=20, n_gamma=40, spatial="haar", levels=4, snr=30.0),
    "slice50": dict(shape=(50, 50), G=64, n_gamma=128, spatial="dct", levels=None, snr=30.0),
    "volume": dict(shape=(16, 16, 8), G=32, n_gamma=64, spatial="haar", levels=3, snr=30.0),
}

#: Kernel sharpness of the directional surrogate used by the presets.
PRESET_SHARPNESS = 8.0

_MAX_DRAWS = 1000


@dataclass
class PhantomSpec:
    G: int
    V: int
    spatial_shape: tuple
    n_gamma: int
    n_psi: int
    K_planted: int
    snr: float
    seed: int
    gamma_label: str = ""
    psi_label: str = ""
    preset: str | None = None
    code_draw: int = 0
    extra: dict = field(default_factory=dict)

    def to_json(self):
        d = asdict(self)
        d["spatial_shape"] = list(self.spatial_shape)
        d["snr"] = None if math.isinf(self.snr) else self.snr
        d["schema_version"] = BUNDLE_SCHEMA_VERSION
        d["noise_model"] = "gaussian"
        d["snr_convention"] = "clean-signal Frobenius RMS / noise sigma"
        return d

    @classmethod
    def from_json(cls, d):
        d = dict(d)
        for key in ("schema_version", "noise_model", "snr_convention"):
            d.pop(key, None)
        d["spatial_shape"] = tuple(d["spatial_shape"])
        d["snr"] = math.inf if d["snr"] is None else float(d["snr"])
        return cls(**d)


def plant_sparse_code(n_gamma, n_psi, K, seed=0, amp_range=(0.5, 2.0)):
    """``K`` nonzeros at distinct uniformly random positions.

    Magnitudes are uniform in ``amp_range`` with random signs.
    """
    n = n_gamma * n_psi
    if not 0 <= K <= n:
        raise ValueError(f"K={K} must lie in [0, {n}]")
    lo, hi = amp_range
    if not 0 < lo <= hi:
        raise ValueError("amp_range must satisfy 0 < low <= high")
    rng = np.random.default_rng(seed)
    pos = rng.choice(n, size=K, replace=False)
    vals = rng.uniform(lo, hi, size=K) * rng.choice([-1.0, 1.0], size=K)
    C = np.zeros(n)
    C[pos] = vals
    return C.reshape(n_gamma, n_psi)


def synthesize(sdict, C, snr=math.inf, seed=0):
    """``gamma C psi^T`` plus Gaussian noise at the given SNR (``inf`` for none)."""
    if not snr > 0:
        raise ValueError("snr must be positive or infinite")
    clean = kron_apply(sdict.gamma.matrix, C, sdict.psi.matrix)
    if math.isinf(snr):
        return clean
    sigma = np.linalg.norm(clean) / (math.sqrt(clean.size) * snr)
    rng = np.random.default_rng(seed)
    return clean + sigma * rng.standard_normal(clean.shape)


def _spatial_dictionary(kind, shape, levels):
    if kind == "haar":
        return build_haar_tensor(shape, levels)
    if kind == "dct":
        return build_dct_tensor(shape)
    raise ValueError(f"unknown spatial dictionary {kind!r}")


def make_phantom(shape, G, n_gamma, K, snr=30.0, seed=0, spatial="haar", levels=None,
                 sharpness=PRESET_SHARPNESS, preset=None):
    """Build a dictionary pair, planted code and signal.

    The planted code is redrawn (deterministically) until every voxel of
    the clean signal is nonzero, so no voxel is trivially empty.
    """
    shape = tuple(int(s) for s in shape)
    if levels is None and spatial == "haar":
        levels = int(math.log2(min(shape)))
    gamma = build_directional_surrogate(G, n_gamma, seed=seed, sharpness=sharpness)
    psi = _spatial_dictionary(spatial, shape, levels)
    sdict = pair(gamma, psi)
    V = psi.matrix.shape[0]
    for draw in range(_MAX_DRAWS):
        C = plant_sparse_code(n_gamma, psi.n_atoms, K, seed=(seed, draw))
        clean = kron_apply(gamma.matrix, C, psi.matrix)
        voxel_norms = np.linalg.norm(clean, axis=0)
        if K == 0 or voxel_norms.min() > 1e-6 * voxel_norms.max():
            break
    else:
        raise RuntimeError("could not draw a code covering every voxel")
    S = synthesize(sdict, C, snr, seed=(seed, 7919))
    spec = PhantomSpec(G=G, V=V, spatial_shape=shape, n_gamma=n_gamma, n_psi=psi.n_atoms,
                       K_planted=count_nonzero(C), snr=float(snr), seed=seed,
                       gamma_label=gamma.label, psi_label=psi.label, preset=preset,
                       code_draw=draw,
                       extra={"spatial": spatial, "levels": levels, "sharpness": sharpness})
    return sdict, S, C, spec


def standard_desk_phantom(preset="small2d", snr=None, seed=0):
    """Named phantom presets; ``K`` is a quarter of the number of voxels.

    Returns ``(sdict, S, C, spec)``.
    """
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    p = PRESETS[preset]
    V = int(np.prod(p["shape"]))
    return make_phantom(p["shape"], p["G"], p["n_gamma"], V // 4,
                        snr=p["snr"] if snr is None else snr, seed=seed,
                        spatial=p["spatial"], levels=p["levels"], preset=preset)


def write_bundle(directory, sdict, S, C, spec):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_ksmx(d / "gamma.ksmx", sdict.gamma.matrix)
    write_ksmx(d / "psi.ksmx", sdict.psi.matrix)
    write_ksmx(d / "signal.ksmx", S)
    write_ksmx(d / "code.ksmx", C)
    payload = spec.to_json()
    payload["gamma"] = sdict.gamma.metadata()
    payload["psi"] = sdict.psi.metadata()
    dump_json(d / "spec.json", payload)
    return [d / f for f in BUNDLE_FILES]


def read_bundle(directory):
    """Load a bundle written by :func:`write_bundle`; returns ``(sdict, S, C, spec)``."""
    d = Path(directory)
    meta = json.loads((d / "spec.json").read_text())
    gmeta, pmeta = meta.pop("gamma", {}), meta.pop("psi", {})
    gamma = make_dictionary(read_ksmx(d / "gamma.ksmx"), gmeta.get("label", "gamma"))
    psi = make_dictionary(read_ksmx(d / "psi.ksmx"), pmeta.get("label", "psi"))
    S = read_ksmx(d / "signal.ksmx")
    C = read_ksmx(d / "code.ksmx")
    return pair(gamma, psi), S, C, PhantomSpec.from_json(meta)
