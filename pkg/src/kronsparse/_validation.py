"""Input validation helpers shared by the public entry points."""

import numbers

import numpy as np


class DimensionError(ValueError):
    """Raised when matrix shapes are not conformable."""


def check_matrix(X, name="X", allow_empty=False):
    """Return ``X`` as a 2-D float64 array with finite entries.

    Parameters
    ----------
    X : array-like
        Input matrix. 1-D input is rejected rather than silently reshaped.
    name : str
        Name used in error messages.
    allow_empty : bool
        Accept arrays with a zero-length axis.
    """
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {A.shape}")
    if not allow_empty and (A.shape[0] == 0 or A.shape[1] == 0):
        raise DimensionError(f"{name} must have positive dimensions, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf")
    return A


def check_conformable(gamma, C=None, psi=None, S=None):
    """Check the shapes of a separable problem ``gamma @ C @ psi.T ~ S``."""
    if C is not None:
        if gamma is not None and gamma.shape[1] != C.shape[0]:
            raise DimensionError(
                f"gamma has {gamma.shape[1]} atoms but C has {C.shape[0]} rows")
        if psi is not None and psi.shape[1] != C.shape[1]:
            raise DimensionError(
                f"psi has {psi.shape[1]} atoms but C has {C.shape[1]} columns")
    if S is not None:
        if gamma is not None and gamma.shape[0] != S.shape[0]:
            raise DimensionError(
                f"gamma has {gamma.shape[0]} rows but S has {S.shape[0]}")
        if psi is not None and psi.shape[0] != S.shape[1]:
            raise DimensionError(
                f"psi has {psi.shape[0]} rows but S has {S.shape[1]} columns")


def check_nonneg(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if value < 0:
        raise ValueError(f"{name} must be nonnegative, got {value}")
    return float(value)


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive real number, got {value!r}")
    return float(value)
