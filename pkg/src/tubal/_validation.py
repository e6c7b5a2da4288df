"""Input checks shared by the functional API and the estimators."""

import numpy as np


def check_tensor(A, name="tensor", allow_complex=False):
    """Return ``A`` as a float ndarray of shape ``(n1, n2, n3)``.

    Rejects other ranks, empty axes and non-finite entries.
    """
    dtype = None if allow_complex else float
    A = np.asarray(A, dtype=dtype)
    if A.ndim != 3:
        raise ValueError(f"{name} must be 3-dimensional, got shape {A.shape}")
    if min(A.shape) < 1:
        raise ValueError(f"{name} has an empty dimension: {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf")
    return A


def check_same_shape(A, B):
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")


def check_probability(p):
    p = float(p)
    if not 0.0 < p <= 1.0:
        raise ValueError(f"sampling probability must lie in (0, 1], got {p}")
    return p
