"""Recovery errors modulo signed permutations and SOR / tau diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidParamError, NotOrthonormalError, ShapeMismatchError
from .expectation import ExpectationEngine, power_mean
from .stiefel import orthonormality_defect

ALIGN_ORTHONORMALITY_TOL = 1e-6


@dataclass(frozen=True)
class AlignmentResult:
    """Best signed permutation matching the rows of ``A`` to columns of ``D0``.

    Row ``i`` of ``A`` is matched to ``signs[i] * D0[:, permutation[i]]``.
    """

    permutation: np.ndarray
    signs: np.ndarray
    frob_error: float
    l4_error: float


def align(A, D0) -> AlignmentResult:
    """Optimal signed-permutation alignment of an estimate ``A`` with ``D0``.

    Solves the maximum-weight assignment on ``|A D0|``.  ``frob_error`` is
    ``min ||A^T - D0 Pi||_F / ||D0 Pi||_F`` and ``l4_error`` is
    ``1 - ||A D0||_4^4 / m``.  ``A`` may have fewer rows than ``D0`` has
    columns, in which case the assignment is partial.
    """
    A = np.asarray(A, dtype=float)
    D0 = np.asarray(D0, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    if D0.ndim != 2 or D0.shape[0] != D0.shape[1] or A.ndim != 2 or A.shape[1] != D0.shape[0]:
        raise ShapeMismatchError(f"cannot align A {A.shape} with D0 {D0.shape}")
    if orthonormality_defect(A) > ALIGN_ORTHONORMALITY_TOL:
        raise NotOrthonormalError("A does not have orthonormal rows")
    if orthonormality_defect(D0) > ALIGN_ORTHONORMALITY_TOL:
        raise NotOrthonormalError("D0 is not orthogonal")
    m = A.shape[0]
    M = A @ D0
    rows, cols = linear_sum_assignment(np.abs(M), maximize=True)
    perm = cols[np.argsort(rows)]
    matched = M[np.arange(m), perm]
    signs = np.where(matched < 0, -1, 1)
    diff = A.T - D0[:, perm] * signs
    frob = float(np.linalg.norm(diff) / math.sqrt(m))
    M2 = M * M
    l4 = float(1.0 - np.sum(M2 * M2) / m)
    return AlignmentResult(perm, signs, frob, min(max(l4, 0.0), 1.0))


def sphere_error(a, D0=None) -> float:
    """``min_i min(||a - d_i||, ||a + d_i||)`` over the columns of ``D0`` (identity by default)."""
    a = np.asarray(a, dtype=float).ravel()
    D = np.eye(a.size) if D0 is None else np.asarray(D0, dtype=float)
    c = D.T @ a
    # the nearest +/- d_i maximizes |<a, d_i>|; subtract explicitly to keep precision near 0
    i = int(np.argmax(np.abs(c)))
    s = -1.0 if c[i] < 0 else 1.0
    return float(np.linalg.norm(a - s * D[:, i]))


class SORResult(NamedTuple):
    """Signal-to-orthogonal ratios toward coordinate ``target``.

    ``sor_i`` has one entry per coordinate; the target's own entry is NaN.
    Division by an exactly zero denominator yields a signed infinity.
    """

    sor: float
    sor_i: np.ndarray

    @property
    def degenerate(self) -> bool:
        return math.isinf(self.sor)


def sor(a, target_index: int) -> SORResult:
    a = np.asarray(a, dtype=float).ravel()
    if not np.any(a):
        raise InvalidParamError("SOR is undefined for the zero vector")
    t = target_index
    rest = np.delete(a, t)
    ortho = float(np.linalg.norm(rest))
    # a != 0, so a zero orthogonal part forces a nonzero signal
    ratio = a[t] / ortho if ortho > 0 else math.copysign(math.inf, a[t])
    with np.errstate(divide="ignore", invalid="ignore"):
        sor_i = a[t] / a
    sor_i[t] = math.nan
    return SORResult(float(ratio), sor_i)


def sor_error_identity(s: float) -> float:
    """Squared distance ``||a/||a|| - e_target||^2`` implied by an SOR value (positive signal)."""
    if math.isinf(s):
        return 0.0
    return 2.0 - 2.0 * math.sqrt(s * s / (s * s + 1.0))


def _check_unit(q: np.ndarray) -> None:
    if abs(float(np.linalg.norm(q)) - 1.0) > 1e-8:
        raise InvalidParamError("tau expects a unit vector")


def _tau_from_means(mean_n, mean_i, mean_in, theta):
    return (mean_n - mean_i) / (theta / (1.0 - theta) * mean_in + mean_i)


def tau_i(q, i: int, target: int, theta: float, p: int, engine: ExpectationEngine) -> float:
    """Per-step growth factor of ``SOR_i`` under the population iteration.

    ``SOR_i`` is multiplied by ``1 + tau_i(q)`` in one step from ``q``.  The
    expectations run over supports of the ``n - 2`` coordinates other than
    ``i`` and ``target``, with exponent ``k = p - 2``.
    """
    q = np.asarray(q, dtype=float).ravel()
    if i == target:
        raise InvalidParamError("i must differ from target")
    if int(p) != p or p < 3:
        raise InvalidParamError(f"p must be an integer >= 3, got {p}")
    _check_unit(q)
    rest = np.delete(q, [i, target])
    qi2, qn2 = q[i] ** 2, q[target] ** 2
    mean_n, mean_i, mean_in = power_mean(rest * rest, [qn2, qi2, qi2 + qn2], p - 2, theta, engine)
    return float(_tau_from_means(mean_n, mean_i, mean_in, theta))


def tau_all(q, target: int, theta: float, p: int, engine: ExpectationEngine) -> np.ndarray:
    """``tau_i(q)`` for every ``i``; the target's own entry is NaN."""
    q = np.asarray(q, dtype=float).ravel()
    _check_unit(q)
    out = np.full(q.size, math.nan)
    if engine.mode == "closed-form-p4":
        if p != 4:
            engine.check(q.size, p)
        q2 = q * q
        base = theta * (q2.sum() - q2 - q2[target])  # theta * ||rest||^2 for each i
        mean_n = base + q2[target]
        mean_i = base + q2
        mean_in = base + q2 + q2[target]
        out[:] = _tau_from_means(mean_n, mean_i, mean_in, theta)
        out[target] = math.nan
        return out
    for i in range(q.size):
        if i != target:
            out[i] = tau_i(q, i, target, theta, p, engine)
    return out


def tau_min(q, target: int, theta: float, p: int, engine: ExpectationEngine) -> float:
    """``tau(q) = min_{i != target} tau_i(q)``."""
    return float(np.nanmin(tau_all(q, target, theta, p, engine)))
