"""Transformed-linear vector algebra on the positive orthant.

The transform ``t(y) = log(exp(y) + 1)`` (softplus) maps the reals onto
(0, inf).  Conjugating ordinary linear algebra through ``t`` yields vector
addition ``x1 (+) x2 = t(t^-1(x1) + t^-1(x2))``, scalar multiplication
``a (*) x = t(a t^-1(x))`` and matrix application ``A (*) x = t(A t^-1(x))``,
all of which keep results strictly positive.  The additive identity of the
space is ``t(0) = log 2``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError, DomainError

LOG2 = math.log(2.0)

# Branch point for the asymptotic softplus approximations; beyond it the
# correction term exp(-|y|) is below one ulp of y.
_BRANCH = 30.0


def _apply_scalar_or_array(x, fn):
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = fn(arr)
    if np.ndim(x) == 0:
        return float(out[0])
    return out.reshape(np.shape(x))


def _softplus_core(arr):
    out = np.empty_like(arr)
    hi = arr > _BRANCH
    lo = arr < -_BRANCH
    mid = ~(hi | lo)
    out[hi] = arr[hi] + np.exp(-arr[hi])
    out[lo] = np.exp(arr[lo])
    out[mid] = np.log1p(np.exp(arr[mid]))
    return out


def _softplus_inv_core(arr):
    # expm1 keeps full precision down to denormal x, so no small-x fallback
    # is needed below; log(expm1(x)) = log(x) + x/2 + O(x^2) exactly there.
    out = np.empty_like(arr)
    hi = arr > _BRANCH
    mid = ~hi
    out[hi] = arr[hi] + np.log1p(-np.exp(-arr[hi]))
    out[mid] = np.log(np.expm1(arr[mid]))
    return out


def softplus(y):
    """Softplus transform ``t(y) = log(exp(y) + 1)``, stable for all magnitudes.

    Accepts scalars or arrays; raises :class:`DomainError` on non-finite input.
    """
    arr = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("softplus requires finite input")
    return _apply_scalar_or_array(y, _softplus_core)


def softplus_inv(x):
    """Inverse transform ``t^-1(x) = log(exp(x) - 1)`` for x > 0.

    Stable for all positive magnitudes, including preimages of near-zero
    observations.  Raises :class:`DomainError` for x <= 0.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("softplus_inv requires finite input > 0")
    return _apply_scalar_or_array(x, _softplus_inv_core)


def _positive_vector(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"{name} must be strictly positive and finite")
    return arr


def tadd(x1, x2):
    """Vector addition in the transformed space, componentwise."""
    a1 = _positive_vector(x1, "x1")
    a2 = _positive_vector(x2, "x2")
    if a1.shape != a2.shape:
        raise DimensionError(f"shape mismatch {a1.shape} vs {a2.shape}")
    return softplus(softplus_inv(a1) + softplus_inv(a2))


def tscale(a, x):
    """Scalar multiplication ``a (*) x`` in the transformed space."""
    if not np.isfinite(a):
        raise DomainError("scalar must be finite")
    return softplus(float(a) * softplus_inv(_positive_vector(x)))


def tmatmul(A, x):
    """Matrix application ``A (*) x = t(A t^-1(x))``.

    ``x`` has length q (the column count of A); the result has length p.
    Composes like ordinary matrix multiplication: ``B (*) (A (*) x)`` equals
    ``(BA) (*) x`` up to transform round trips.
    """
    M = np.asarray(A, dtype=float)
    v = _positive_vector(x)
    if M.ndim != 2 or v.ndim != 1 or M.shape[1] != v.shape[0]:
        raise DimensionError(f"cannot apply {M.shape} matrix to length-{v.shape[0] if v.ndim == 1 else v.shape} vector")
    return softplus(M @ softplus_inv(v))


def zero_clip(A):
    """Componentwise max(entry, 0)."""
    return np.maximum(np.asarray(A, dtype=float), 0.0)


def tail_ratio(a):
    """Sum of squared positive parts of a coefficient vector.

    Negative coefficients do not contribute to the upper tail, so the tail
    ratio of a combination with coefficients ``a`` is sum(max(a_j, 0)^2).
    """
    arr = np.asarray(a, dtype=float)
    return float(np.sum(zero_clip(arr) ** 2))
