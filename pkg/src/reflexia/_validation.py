"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

import numbers

import numpy as np

from .exceptions import DimensionMismatch


def check_vector(x, dim=None, name="x"):
    """Return ``x`` as a float array whose last axis has length ``dim``.

    Leading axes are kept so callers can pass batches of points.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        raise DimensionMismatch(f"{name} must be at least one-dimensional")
    if dim is not None and arr.shape[-1] != dim:
        raise DimensionMismatch(
            f"{name} has trailing dimension {arr.shape[-1]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_square(a, name="matrix", allow_batch=True):
    arr = np.asarray(a, dtype=float)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    if not allow_batch and arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a single matrix")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not value > 0:
        raise ValueError(f"{name} must be a positive real, got {value!r}")
    return float(value)


def check_basis(vectors, dim, name="basis"):
    """Return a (k, dim) array; an empty list gives shape (0, dim)."""
    arr = np.asarray(vectors, dtype=float)
    if arr.size == 0:
        return np.zeros((0, dim))
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionMismatch(f"{name} must have shape (k, {dim}), got {arr.shape}")
    return arr


def check_random_state(seed):
    """Turn ``seed`` into a ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, numbers.Integral):
        return np.random.default_rng(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a Generator")
