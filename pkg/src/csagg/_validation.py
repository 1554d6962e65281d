"""Input validation helpers shared across the package."""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import InvalidArgumentError


def as_float_array(x, name="array"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} must be finite (no NaN/inf)")
    return arr


def check_score_matrix(scores, name="scores"):
    """Validate an N x K matrix of nonnegative multivariate scores."""
    arr = np.asarray(scores, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidArgumentError(f"{name} must be nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains NaN or inf")
    if np.any(arr < 0):
        raise InvalidArgumentError(f"{name} contains negative entries; scores must be nonnegative")
    return arr


def check_vector(x, name="vector", nonneg=False, positive=False):
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidArgumentError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains NaN or inf")
    if nonneg and np.any(arr < 0):
        raise InvalidArgumentError(f"{name} must be nonnegative")
    if positive and np.any(arr <= 0):
        raise InvalidArgumentError(f"{name} must be strictly positive")
    return arr


def check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def check_fraction(fraction, name="fraction"):
    fraction = float(fraction)
    if not 0.0 < fraction < 1.0:
        raise InvalidArgumentError(f"{name} must lie in (0, 1), got {fraction}")
    return fraction


def check_positive_int(value, name="value"):
    ivalue = int(value)
    if ivalue != value or ivalue < 1:
        raise InvalidArgumentError(f"{name} must be a positive integer, got {value!r}")
    return ivalue


def derive_seed(master_seed, component, index=0):
    """Derive a 64-bit sub-seed from a master seed, a component name and an index.

    Stable across platforms and processes (hashlib, not the salted builtin hash).
    """
    digest = hashlib.blake2b(
        f"{component}:{int(index)}:{int(master_seed)}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")
