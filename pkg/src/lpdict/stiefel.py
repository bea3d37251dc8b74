"""Row-orthonormal matrices: polar factor, random points, feasibility checks.

Matrices follow the solver convention: a point is an ``m x n`` array ``A``
with orthonormal rows (so ``A.T`` lies on St(n, m)).  ``m == 1`` is the unit
sphere and ``m == n`` the orthogonal group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidShapeError, NonFiniteError

ORTHONORMALITY_TOL = 1e-10
REORTHONORMALIZE_TOL = 1e-8
RANK_DEFICIENCY_RTOL = 1e-12


def as_rng(seed) -> np.random.Generator:
    """Return a Generator for an int seed, SeedSequence or existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class StiefelPoint:
    """An ``m x n`` matrix with orthonormal rows.

    The wrapped array is copied and marked read-only.  ``np.asarray(point)``
    returns it, so points can be passed wherever an array is accepted.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=float, copy=True)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or not 1 <= arr.shape[0] <= arr.shape[1]:
            raise InvalidShapeError(f"expected m x n with 1 <= m <= n, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def __array__(self, dtype=None, copy=None):
        if copy or (dtype is not None and np.dtype(dtype) != self.data.dtype):
            return np.array(self.data, dtype=dtype)
        return self.data

    def defect(self) -> float:
        return orthonormality_defect(self.data)


@dataclass(frozen=True)
class PolarResult:
    """Orthonormal polar factor of a matrix together with its singular values.

    ``alignment`` is ``<orthonormal_factor, C>``, which equals the sum of the
    singular values.  ``rank_deficient`` is set when the smallest singular
    value is below ``1e-12`` times the largest; the factor is then not unique
    and the one computed from the SVD is returned as-is.
    """

    orthonormal_factor: np.ndarray
    singular_values: np.ndarray
    alignment: float
    rank_deficient: bool = False


def polar(C) -> PolarResult:
    """Orthonormal polar factor ``U = W V^T`` of ``C = W S V^T`` (thin SVD).

    ``U`` maximizes ``<S, C>`` over all row-orthonormal ``S`` of the same
    shape.  A 1-D input is treated as a single row.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C[None, :]
    if C.ndim != 2 or C.shape[0] > C.shape[1] or C.shape[0] == 0:
        raise InvalidShapeError(f"polar expects m x n with 1 <= m <= n, got {C.shape}")
    if not np.all(np.isfinite(C)):
        raise NonFiniteError("polar input contains NaN or Inf")
    W, s, Vt = np.linalg.svd(C, full_matrices=False)
    U = W @ Vt
    smax = s[0] if s.size else 0.0
    deficient = bool(smax == 0.0 or s[-1] < RANK_DEFICIENCY_RTOL * smax)
    return PolarResult(U, s, float(np.sum(s)), deficient)


def random_stiefel(m: int, n: int, seed=None) -> StiefelPoint:
    """Uniformly distributed ``m x n`` matrix with orthonormal rows.

    Orthonormalizes a standard Gaussian matrix through its polar factor, which
    keeps the law invariant under right multiplication by orthogonal matrices.
    """
    if m < 1 or n < 1 or m > n:
        raise InvalidShapeError(f"need 1 <= m <= n, got m={m}, n={n}")
    G = as_rng(seed).standard_normal((m, n))
    return StiefelPoint(polar(G).orthonormal_factor)


def orthonormality_defect(A) -> float:
    """Frobenius norm of ``A A^T - I_m``."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    return float(np.linalg.norm(A @ A.T - np.eye(A.shape[0])))


def reorthonormalize(A, tol: float = REORTHONORMALIZE_TOL) -> np.ndarray:
    """Project ``A`` back onto the manifold with one polar step if it drifted."""
    A = np.asarray(A, dtype=float)
    if orthonormality_defect(A) > tol:
        return polar(A).orthonormal_factor
    return A
