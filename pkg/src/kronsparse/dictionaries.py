"""Construction and validation of spatial and angular dictionaries.

Every constructor returns an immutable :class:`Dictionary` whose structure
flags (orthonormal, tight frame, identity) are measured from the matrix,
never asserted by the caller.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_matrix
from .core import spectral_factors

FLAG_TOL = 1e-8

#: Voxel ordering for multi-dimensional spatial dictionaries is C order:
#: voxel ``(x, y)`` of an ``(nx, ny)`` grid is index ``x * ny + y``.
VOXEL_ORDER = "C"


@dataclass(frozen=True)
class FlagReport:
    orthonormal: bool
    tight_frame: bool
    identity: bool
    deviations: dict = field(default_factory=dict)

    def as_dict(self):
        return {"orthonormal": self.orthonormal, "tight_frame": self.tight_frame,
                "identity": self.identity, "deviations": dict(self.deviations)}


@dataclass(frozen=True)
class Dictionary:
    """A dictionary matrix (rows = signal dimension, columns = atoms)."""

    matrix: np.ndarray
    label: str
    flags: FlagReport
    atom_norms: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def n_atoms(self):
        return self.matrix.shape[1]

    def metadata(self):
        """JSON-ready description (the sidecar of a serialized dictionary)."""
        return {"label": self.label, "flags": self.flags.as_dict(),
                "shape": list(self.matrix.shape), **self.meta}


def validate(D, tol=FLAG_TOL):
    """Measure structure flags of ``D`` by direct multiplication."""
    M = D.matrix if isinstance(D, Dictionary) else check_matrix(D, "D")
    n, N = M.shape
    dev_gram = float(np.abs(M.T @ M - np.eye(N)).max())
    dev_cogram = float(np.abs(M @ M.T - np.eye(n)).max())
    dev_id = float(np.abs(M - np.eye(n)).max()) if n == N else float("inf")
    return FlagReport(
        orthonormal=dev_gram <= tol,
        tight_frame=dev_cogram <= tol,
        identity=dev_id <= tol,
        deviations={"gram": dev_gram, "cogram": dev_cogram, "identity": dev_id},
    )


def make_dictionary(matrix, label, **meta):
    """Wrap a matrix as a :class:`Dictionary`, validating atom norms and flags."""
    M = check_matrix(matrix, "matrix").copy()
    norms = np.linalg.norm(M, axis=0)
    if norms.min() < 1e-8 or norms.max() > 1e8:
        raise ValueError(
            f"atom norms must lie in [1e-8, 1e8], got [{norms.min():.3g}, {norms.max():.3g}]")
    M.setflags(write=False)
    norms.setflags(write=False)
    return Dictionary(matrix=M, label=label, flags=validate(M), atom_norms=norms,
                      meta=dict(meta))


def _normalize_columns(M):
    return M / np.linalg.norm(M, axis=0, keepdims=True)


# -- identity ------------------------------------------------------------

def build_identity(n):
    if n < 1:
        raise ValueError("n must be at least 1")
    return make_dictionary(np.eye(n), f"identity-{n}", constructor="identity",
                           params={"n": n})


# -- Haar ------------------------------------------------------------------

def _log2_exact(n):
    if n < 1 or n & (n - 1):
        raise ValueError(f"Haar size must be a power of two, got {n}")
    return n.bit_length() - 1


def haar_synthesis_1d(coef, levels, axis=-1):
    """Inverse multilevel orthonormal Haar transform along one axis.

    Coefficients are laid out coarse to fine:
    ``[approx_L, detail_L, detail_{L-1}, ..., detail_1]``.
    """
    x = np.moveaxis(np.asarray(coef, dtype=np.float64), axis, -1)
    n = x.shape[-1]
    m = _log2_exact(n)
    if not 0 <= levels <= m:
        raise ValueError(f"levels must be in [0, {m}] for n={n}")
    size = n >> levels
    a = x[..., :size]
    s2 = np.sqrt(0.5)
    while size < n:
        d = x[..., size:2 * size]
        nxt = np.empty(x.shape[:-1] + (2 * size,))
        nxt[..., 0::2] = (a + d) * s2
        nxt[..., 1::2] = (a - d) * s2
        a = nxt
        size *= 2
    return np.moveaxis(a, -1, axis)


def haar_analysis_1d(signal, levels, axis=-1):
    """Forward transform matching :func:`haar_synthesis_1d`."""
    x = np.moveaxis(np.asarray(signal, dtype=np.float64), axis, -1)
    n = x.shape[-1]
    m = _log2_exact(n)
    if not 0 <= levels <= m:
        raise ValueError(f"levels must be in [0, {m}] for n={n}")
    out = x.copy()
    a = x
    size = n
    s2 = np.sqrt(0.5)
    for _ in range(levels):
        even, odd = a[..., 0::2], a[..., 1::2]
        half = size // 2
        out[..., half:size] = (even - odd) * s2
        a = (even + odd) * s2
        size = half
    out[..., :size] = a
    return np.moveaxis(out, -1, axis)


def haar_synthesis(coef, shape, levels):
    """Separable n-D Haar synthesis of a flattened coefficient vector (or columns)."""
    coef = np.asarray(coef, dtype=np.float64)
    tail = coef.shape[1:]
    x = coef.reshape(tuple(shape) + tail)
    for ax in range(len(shape)):
        x = haar_synthesis_1d(x, levels, axis=ax)
    return x.reshape((-1,) + tail)


def haar_analysis(signal, shape, levels):
    x = np.asarray(signal, dtype=np.float64)
    tail = x.shape[1:]
    x = x.reshape(tuple(shape) + tail)
    for ax in range(len(shape)):
        x = haar_analysis_1d(x, levels, axis=ax)
    return x.reshape((-1,) + tail)


def build_haar_tensor(shape, levels):
    """Orthonormal Haar synthesis matrix for a grid of the given shape.

    Each axis length must be a power of two with at least ``levels`` levels.
    """
    shape = tuple(int(s) for s in shape)
    if levels < 1:
        raise ValueError("levels must be at least 1")
    for s in shape:
        if levels > _log2_exact(s):
            raise ValueError(f"levels={levels} too deep for axis length {s}")
    n = int(np.prod(shape))
    M = haar_synthesis(np.eye(n), shape, levels)
    label = "haar-" + "x".join(map(str, shape)) + f"-L{levels}"
    return make_dictionary(M, label, constructor="haar",
                           params={"shape": list(shape), "levels": levels})


def build_haar(n, levels, dims=1):
    """Multilevel Haar basis on an ``n``-point grid in 1, 2 or 3 dimensions."""
    if dims not in (1, 2, 3):
        raise ValueError("dims must be 1, 2 or 3")
    return build_haar_tensor((n,) * dims, levels)


# -- DCT -------------------------------------------------------------------

def _dct_atoms(n, freqs):
    t = np.arange(n)[:, None]
    return np.cos(np.pi * (2 * t + 1) * np.asarray(freqs)[None, :] / (2 * n))


def build_dct(n):
    """Orthonormal DCT-II basis (columns are atoms, atom 0 is constant)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    M = _normalize_columns(_dct_atoms(n, np.arange(n)))
    return make_dictionary(M, f"dct-{n}", constructor="dct", params={"n": n})


def build_dct_tensor(shape):
    """Separable orthonormal DCT basis on a grid (C voxel order)."""
    M = np.ones((1, 1))
    for s in shape:
        M = np.kron(M, build_dct(int(s)).matrix)
    return make_dictionary(M, "dct-" + "x".join(map(str, shape)),
                           constructor="dct_tensor", params={"shape": list(shape)})


def build_overcomplete_dct(n, N):
    """``N`` unit-norm cosine atoms with frequencies spaced uniformly in ``[0, n)``."""
    if n < 2 or N < n:
        raise ValueError("need n >= 2 and N >= n")
    M = _normalize_columns(_dct_atoms(n, np.arange(N) * n / N))
    return make_dictionary(M, f"dct-{n}x{N}", constructor="overcomplete_dct",
                           params={"n": n, "N": N})


# -- random tight frame -------------------------------------------------------

def build_random_tight_frame(n, N, seed=0):
    """Random ``n x N`` matrix with orthonormal rows, so ``D D^T = I``.

    Atoms are not unit-normalized; doing so would break tightness.
    """
    if N < n:
        raise ValueError("need N >= n")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((N, n)))
    Q = Q * np.sign(np.diag(R))[None, :]
    return make_dictionary(Q.T, f"tight-{n}x{N}-s{seed}", constructor="random_tight_frame",
                           params={"n": n, "N": N}, seed=seed)


# -- directional surrogate ------------------------------------------------

_GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def spiral_directions(n, offset=0.5):
    """``n`` unit vectors spread over the upper hemisphere by a generalized spiral."""
    k = np.arange(n) + offset
    z = 1.0 - k / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = k * _GOLDEN_ANGLE
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def surrogate_geometry(G, N, seed=0):
    """Gradient directions and atom directions used by the directional surrogate.

    Atom directions are spiral points under a seeded random rotation so they
    do not coincide with the gradient directions.
    """
    grads = spiral_directions(G)
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(R))[None, :]
    return grads, spiral_directions(N) @ Q.T


def build_directional_surrogate(G, N, seed=0, sharpness=8.0):
    """Peaked, antipodally symmetric angular atoms sampled at ``G`` directions.

    Atom ``i`` at gradient ``g`` is ``exp(-sharpness * (1 - (u_i . g)^2))``,
    then unit-normalized; it stands in for a single-fiber response.
    """
    if G < 4 or N < 1:
        raise ValueError("need G >= 4 and N >= 1")
    if sharpness < 0:
        raise ValueError("sharpness must be nonnegative")
    grads, atoms = surrogate_geometry(G, N, seed)
    cos2 = (grads @ atoms.T) ** 2
    M = _normalize_columns(np.exp(-sharpness * (1.0 - cos2)))
    return make_dictionary(M, f"directional-{G}x{N}-s{seed}",
                           constructor="directional_surrogate",
                           params={"G": G, "N": N, "sharpness": sharpness}, seed=seed)


# -- pairing -----------------------------------------------------------------

@dataclass(frozen=True)
class SeparableDictionary:
    """An angular/spatial dictionary pair with optional cached spectra."""

    gamma: Dictionary
    psi: Dictionary
    gamma_factors: object = None
    psi_factors: object = None
    regime: str = "undercomplete"

    @property
    def G(self):
        return self.gamma.matrix.shape[0]

    @property
    def V(self):
        return self.psi.matrix.shape[0]

    @property
    def code_shape(self):
        return (self.gamma.n_atoms, self.psi.n_atoms)


def classify_regime(gamma_shape, psi_shape):
    over_g = gamma_shape[0] < gamma_shape[1]
    over_p = psi_shape[0] < psi_shape[1]
    if over_g and over_p:
        return "overcomplete"
    if not over_g and not over_p:
        return "undercomplete"
    return "mixed"


def natural_mode(D):
    """``cogram`` for an overcomplete matrix, ``gram`` otherwise."""
    n, N = D.matrix.shape
    return "cogram" if n < N else "gram"


def pair(gamma, psi, precompute="none"):
    """Pair two dictionaries and cache spectral factors.

    ``precompute`` is ``"none"``, ``"gram"``, ``"cogram"`` (same mode for
    both factors) or ``"auto"`` (each factor in its natural mode).
    """
    if not isinstance(gamma, Dictionary):
        gamma = make_dictionary(gamma, "gamma")
    if not isinstance(psi, Dictionary):
        psi = make_dictionary(psi, "psi")
    regime = classify_regime(gamma.shape, psi.shape)
    if precompute == "none":
        gf = pf = None
    elif precompute in ("gram", "cogram"):
        gf = spectral_factors(gamma.matrix, precompute)
        pf = spectral_factors(psi.matrix, precompute)
    elif precompute == "auto":
        gf = spectral_factors(gamma.matrix, natural_mode(gamma))
        pf = spectral_factors(psi.matrix, natural_mode(psi))
    else:
        raise ValueError(f"unknown precompute mode {precompute!r}")
    return SeparableDictionary(gamma=gamma, psi=psi, gamma_factors=gf, psi_factors=pf,
                               regime=regime)
