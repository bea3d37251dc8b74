"""The lp objective ``||A Y||_p^p``, its gradient and population constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParamError, ShapeMismatchError

NORMALIZATIONS = ("raw", "per-entry")


@dataclass(frozen=True)
class ObjectiveSpec:
    """Exponent and scaling of the objective.

    ``per-entry`` divides ``||A Y||_p^p`` by the number of entries of ``A Y``
    so that at the ground truth it estimates ``gamma_p(p) * theta``.
    """

    p: int
    normalization: str = "per-entry"

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 3:
            raise InvalidParamError(f"p must be an integer >= 3, got {self.p}")
        if self.normalization not in NORMALIZATIONS:
            raise InvalidParamError(f"normalization must be one of {NORMALIZATIONS}")
        object.__setattr__(self, "p", int(self.p))


def _as_spec(spec) -> ObjectiveSpec:
    return spec if isinstance(spec, ObjectiveSpec) else ObjectiveSpec(int(spec))


def int_power(x: np.ndarray, k: int) -> np.ndarray:
    """``x**k`` for a non-negative integer ``k`` by repeated squaring."""
    result = None
    base = x
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    return np.ones_like(x) if result is None else result


def abs_power(Z: np.ndarray, k: int) -> np.ndarray:
    """Entrywise ``|Z|**k`` for integer ``k >= 0``."""
    if k % 2 == 0:
        return int_power(Z * Z, k // 2)
    return np.abs(Z) * int_power(Z * Z, k // 2)


def signed_power(Z: np.ndarray, k: int) -> np.ndarray:
    """Entrywise ``|Z|**k * sign(Z)`` for integer ``k >= 1``, with sign(0) = 0."""
    if k % 2 == 1:
        return Z * int_power(Z * Z, k // 2)
    return Z * np.abs(Z) * int_power(Z * Z, k // 2 - 1)


def _check_shapes(A: np.ndarray, Y: np.ndarray) -> None:
    if A.ndim != 2 or Y.ndim != 2 or A.shape[1] != Y.shape[0]:
        raise ShapeMismatchError(f"cannot multiply A {A.shape} by Y {Y.shape}")


def _operands(A, Y):
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    Y = np.asarray(Y, dtype=float)
    _check_shapes(A, Y)
    return A, Y


def objective(A, Y, spec) -> float:
    """``sum |(A Y)_ij|^p``, divided by ``m * r`` under per-entry scaling.

    ``spec`` is an :class:`ObjectiveSpec` or a bare integer ``p`` (per-entry).
    """
    spec = _as_spec(spec)
    A, Y = _operands(A, Y)
    Z = A @ Y
    value = float(np.sum(abs_power(Z, spec.p)))
    if spec.normalization == "per-entry":
        value /= Z.size
    return value


def objective_and_direction(A: np.ndarray, Y: np.ndarray, p: int) -> tuple[float, np.ndarray]:
    """Raw objective and the unscaled ascent direction ``(|AY|^(p-1) sign(AY)) Y^T``.

    One product ``A Y`` serves both; used by the solvers' inner loop.
    """
    Z = A @ Y
    T = signed_power(Z, p - 1)
    return float(np.sum(T * Z)), T @ Y.T


def gradient(A, Y, spec) -> np.ndarray:
    """Euclidean gradient of :func:`objective` with respect to ``A``.

    Equals ``p * (|AY|^(p-1) * sign(AY)) @ Y.T``, scaled by ``1/(m r)`` under
    per-entry normalization.  Any positive multiple gives the same polar
    factor, so GPM is unaffected by the scaling.
    """
    spec = _as_spec(spec)
    A, Y = _operands(A, Y)
    Z = A @ Y
    G = spec.p * (signed_power(Z, spec.p - 1) @ Y.T)
    if spec.normalization == "per-entry":
        G /= Z.size
    return G


def gamma_p(p, sigma: float = 1.0) -> float:
    """``E|g|^p`` for ``g ~ N(0, sigma^2)``: ``sigma^p 2^(p/2) Gamma((p+1)/2) / sqrt(pi)``."""
    if not p >= 1:
        raise InvalidParamError(f"p must be >= 1, got {p}")
    if not sigma > 0:
        raise InvalidParamError(f"sigma must be positive, got {sigma}")
    return sigma**p * 2.0 ** (p / 2.0) * math.gamma((p + 1) / 2.0) / math.sqrt(math.pi)


def population_max(p: int, theta: float) -> float:
    """Per-entry population objective at any signed permutation of the truth."""
    if int(p) != p or p < 3:
        raise InvalidParamError(f"p must be an integer >= 3, got {p}")
    if not 0.0 < theta < 1.0:
        raise InvalidParamError(f"theta must lie in (0, 1), got {theta}")
    return gamma_p(p, 1.0) * theta
