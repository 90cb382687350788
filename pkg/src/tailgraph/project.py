"""Projection, best transformed-linear prediction and partial tail correlation.

All computations live at the coefficient level: random variables built as
transformed-linear combinations are identified by their coefficient vectors,
with inner product matrix ``Gamma = A A'``.  Projecting a pair onto the span
of the remaining variables leaves prediction errors whose 2 x 2 inner product
matrix is the Schur complement ``Gamma_11 - Gamma_12 Gamma_22^-1 Gamma_21``;
the partial tail correlation is its normalized off-diagonal entry, equal to
``-G_ij / sqrt(G_ii G_jj)`` for the full inverse G of Gamma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import (
    ConditioningError,
    DegenerateProjectionError,
    DimensionError,
    DomainError,
)
from .tpdm import IPMatrix, as_matrix
from .xlinear import tmatmul

COND_LIMIT = 1e12


@dataclass(frozen=True)
class Partition:
    """Split of {0..p-1} into target indices and the ordered complement."""

    target: tuple[int, ...]
    complement: tuple[int, ...]

    def __post_init__(self):
        seen = set(self.target) | set(self.complement)
        if len(self.target) + len(self.complement) != len(seen):
            raise DomainError("target and complement must be disjoint and duplicate-free")
        if len(set(self.target)) != len(self.target):
            raise DomainError("target indices must be distinct")

    @classmethod
    def pair(cls, i: int, j: int, p: int) -> "Partition":
        if i == j or not (0 <= i < p and 0 <= j < p):
            raise DomainError("need two distinct indices inside the vector")
        rest = tuple(k for k in range(p) if k not in (i, j))
        return cls(target=(i, j), complement=rest)

    @classmethod
    def single(cls, i: int, p: int) -> "Partition":
        if not 0 <= i < p:
            raise DomainError("index out of range")
        return cls(target=(i,), complement=tuple(k for k in range(p) if k != i))


@dataclass
class ConditionalIPM:
    """Inner product matrix of prediction errors for a partition's targets."""

    matrix: np.ndarray
    partition: Partition

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))


def _spd_factor(G: np.ndarray, context: str):
    """Cholesky factor with an explicit conditioning gate."""
    if G.shape[0] == 0:
        return None
    eig = np.linalg.eigvalsh((G + G.T) / 2.0)
    lo, hi = eig[0], eig[-1]
    if lo <= 0.0:
        raise ConditioningError(np.inf if lo <= 0 else hi / lo, COND_LIMIT, context)
    cond = hi / lo
    if cond > COND_LIMIT:
        raise ConditioningError(cond, COND_LIMIT, context)
    return linalg.cho_factor((G + G.T) / 2.0, lower=True)


def _blocks(gamma, part: Partition):
    G = as_matrix(gamma)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DimensionError("inner product matrix must be square")
    p = G.shape[0]
    idx = list(part.target) + list(part.complement)
    if sorted(idx) != list(range(p)):
        raise DomainError("partition must cover all indices exactly once")
    t = list(part.target)
    c = list(part.complement)
    return G[np.ix_(t, t)], G[np.ix_(t, c)], G[np.ix_(c, c)]


def solve_b(gamma, part: Partition) -> np.ndarray:
    """Optimal prediction weights ``b = Gamma_22^-1 Gamma_21``.

    Solved through a symmetric positive-definite factorization, never an
    explicit inverse.  Shape is (complement, targets); a single target yields
    a 1-D vector.  Raises :class:`ConditioningError` when the complement
    block is singular or has condition number above 1e12.
    """
    G11, G12, G22 = _blocks(gamma, part)
    if G22.shape[0] == 0:
        b = np.zeros((0, G11.shape[0]))
        return b[:, 0] if len(part.target) == 1 else b
    factor = _spd_factor(G22, "complement block")
    rhs = G12.T  # Gamma_21, complement x targets
    b = linalg.cho_solve(factor, rhs)
    resid = np.abs(G22 @ b - rhs).max()
    scale = max(np.abs(rhs).max(), 1e-300)
    if resid > 1e-10 * scale:
        raise ConditioningError(np.linalg.cond(G22), COND_LIMIT, "solve residual too large")
    return b[:, 0] if len(part.target) == 1 else b


def predict(b, x2) -> np.ndarray:
    """Realized best predictor ``b' (*) x2`` for observed complement values."""
    w = np.asarray(b, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    return tmatmul(w.T, x2)


def conditional_ipm(gamma, part: Partition) -> ConditionalIPM:
    """Schur complement ``Gamma_11 - Gamma_12 Gamma_22^-1 Gamma_21``.

    May carry negative off-diagonal entries; no nonnegativity is assumed or
    enforced.
    """
    G11, G12, G22 = _blocks(gamma, part)
    if G22.shape[0] == 0:
        C = G11.copy()
    else:
        factor = _spd_factor(G22, "complement block")
        C = G11 - G12 @ linalg.cho_solve(factor, G12.T)
    return ConditionalIPM((C + C.T) / 2.0, part)


def ptc(gamma, i: int, j: int) -> float:
    """Partial tail correlation of variables i and j given all others.

    Cosine of the angle between the two prediction errors after projecting
    onto the span of the remaining variables.
    """
    G = as_matrix(gamma)
    C = conditional_ipm(G, Partition.pair(i, j, G.shape[0])).matrix
    d = np.diag(C)
    if np.any(d <= 0.0) or np.any(d < 1e-14 * np.abs(G).max()):
        raise DegenerateProjectionError(
            "a target lies in the span of the conditioning variables")
    return float(C[0, 1] / np.sqrt(d[0] * d[1]))


def ptc_from_inverse(gamma_inv, i: int, j: int) -> float:
    """Partial tail correlation read off the full inverse inner product matrix."""
    G = as_matrix(gamma_inv)
    if i == j or not (0 <= i < G.shape[0] and 0 <= j < G.shape[0]):
        raise DomainError("need two distinct indices inside the matrix")
    d_i, d_j = G[i, i], G[j, j]
    if d_i <= 0.0 or d_j <= 0.0:
        raise DegenerateProjectionError("inverse has a nonpositive diagonal entry")
    return float(-G[i, j] / np.sqrt(d_i * d_j))


def invert_ipm(gamma) -> IPMatrix:
    """Symmetric inverse via factorization, verified to ``|G G^-1 - I| < 1e-8``."""
    G = as_matrix(gamma)
    factor = _spd_factor(G, "inner product matrix")
    inv = linalg.cho_solve(factor, np.eye(G.shape[0]))
    inv = (inv + inv.T) / 2.0
    if np.abs(G @ inv - np.eye(G.shape[0])).max() >= 1e-8:
        raise ConditioningError(np.linalg.cond(G), COND_LIMIT, "inverse verification failed")
    kind = gamma.kind if isinstance(gamma, IPMatrix) else "theoretical"
    return IPMatrix(inv, kind=kind)


def ptc_matrix(gamma) -> np.ndarray:
    """All-pairs partial tail correlations; diagonal entries are NaN."""
    G = as_matrix(gamma)
    p = G.shape[0]
    inv = invert_ipm(G).entries
    out = np.full((p, p), np.nan)
    for i in range(p):
        for j in range(p):
            if i != j:
                out[i, j] = -inv[i, j] / np.sqrt(inv[i, i] * inv[j, j])
    return out


def project_onto_span(x_coefs, A2):
    """Project a coefficient vector onto the row span of A2.

    Returns ``(projection, residual)`` with ``x = projection + residual``
    exactly and the residual orthogonal to every row of A2.  A2 must have
    full row rank.
    """
    x = np.asarray(x_coefs, dtype=float)
    M = np.asarray(A2, dtype=float)
    if M.ndim != 2 or x.ndim != 1 or M.shape[1] != x.shape[0]:
        raise DimensionError("generator matrix columns must match the coefficient length")
    gram = M @ M.T
    factor = _spd_factor(gram, "span generators")
    b = linalg.cho_solve(factor, M @ x)
    projection = b @ M
    residual = x - projection
    return projection, residual
