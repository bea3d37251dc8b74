"""Slow brute-force evaluators used as independent checks.

Nothing in the production modules imports this file.  Everything here is
written as plain loops over supports, permutations and samples so that it
shares no code path with the vectorized routines it is used to verify.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParamError, TooLargeError

MAX_SUPPORT_DIM = 20
MAX_PERMUTATION_DIM = 6
FUNCTIONALS = ("norm-power", "norm-power-coordinate", "noisy-power")


@dataclass(frozen=True)
class SupportExpectationQuery:
    """``E_Omega[F(a, Omega)]`` for a Bernoulli(theta) support.

    Functionals:
        ``norm-power``: ``||a_Omega||^k`` (scalar).
        ``norm-power-coordinate``: ``||a_Omega||^k a_Omega`` (vector).
        ``noisy-power``: ``(||a_Omega||^2 + eta^2)^(p/2)`` with ``p = k``.

    ``conditioning`` maps coordinates to True (forced into ``Omega``) or False
    (forced out); the remaining coordinates stay random.
    """

    a: tuple
    functional: str
    theta: float
    k: int
    eta: float = 0.0
    conditioning: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in np.ravel(self.a)))
        if self.functional not in FUNCTIONALS:
            raise InvalidParamError(f"functional must be one of {FUNCTIONALS}")
        if not 0.0 < self.theta < 1.0:
            raise InvalidParamError("theta must lie in (0, 1)")
        if self.eta < 0 or not math.isfinite(self.eta):
            raise InvalidParamError("eta must be finite and >= 0")
        if not all(math.isfinite(x) for x in self.a):
            raise InvalidParamError("a must be finite")
        for j in self.conditioning:
            if not 0 <= j < len(self.a):
                raise InvalidParamError(f"conditioning index {j} out of range")


def exact_support_expectation(q: SupportExpectationQuery):
    """Weighted sum over every admissible support, one support at a time."""
    n = len(q.a)
    if n > MAX_SUPPORT_DIM:
        raise TooLargeError(f"support enumeration capped at {MAX_SUPPORT_DIM} coordinates")
    free = [j for j in range(n) if j not in q.conditioning]
    vector = q.functional == "norm-power-coordinate"
    total = [0.0] * n if vector else 0.0
    for pattern in itertools.product((False, True), repeat=len(free)):
        inside = {j for j, v in q.conditioning.items() if v}
        inside.update(j for j, b in zip(free, pattern) if b)
        weight = 1.0
        for b in pattern:
            weight *= q.theta if b else 1.0 - q.theta
        sq = sum(q.a[j] ** 2 for j in inside)
        if q.functional == "noisy-power":
            total += weight * (sq + q.eta**2) ** (q.k / 2)
        elif q.functional == "norm-power":
            total += weight * sq ** (q.k / 2)
        else:
            scale = sq ** (q.k / 2)
            for j in inside:
                total[j] += weight * scale * q.a[j]
    return np.array(total) if vector else total


def _signed_permutation_errors(A: np.ndarray, D0: np.ndarray):
    n = D0.shape[0]
    norm = math.sqrt(float(np.sum(D0 * D0)))
    for perm in itertools.permutations(range(n)):
        for signs in itertools.product((1.0, -1.0), repeat=n):
            Pi = np.zeros((n, n))
            for i, (j, s) in enumerate(zip(perm, signs)):
                Pi[j, i] = s
            yield float(np.linalg.norm(A.T - D0 @ Pi)) / norm


def exhaustive_alignment(A, D0) -> float:
    """``min ||A^T - D0 Pi||_F / ||D0||_F`` over all ``2^n n!`` signed permutations."""
    A = np.asarray(A, dtype=float)
    D0 = np.asarray(D0, dtype=float)
    if D0.shape[0] > MAX_PERMUTATION_DIM:
        raise TooLargeError(f"exhaustive alignment capped at n = {MAX_PERMUTATION_DIM}")
    return min(_signed_permutation_errors(A, D0))


# --- Monte Carlo -------------------------------------------------------------


@dataclass(frozen=True)
class SampleSpec:
    """Distribution of a random vector ``y = D0 (b * g) + eta * z``.

    ``b ~ Ber(theta)``, ``g ~ N(0, sigma^2)`` and ``z ~ N(0, I)`` entrywise.
    ``theta = 1`` gives a plain Gaussian vector and ``D0=None`` the identity.
    """

    n: int
    theta: float = 1.0
    sigma: float = 1.0
    eta: float = 0.0
    D0: np.ndarray | None = None

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        g = self.sigma * rng.standard_normal((size, self.n))
        if self.theta < 1.0:
            g = g * (rng.random((size, self.n)) < self.theta)
        if self.D0 is not None:
            g = g @ np.asarray(self.D0).T
        if self.eta > 0:
            g = g + self.eta * rng.standard_normal((size, self.n))
        return g


def abs_projection_power(a, p) -> callable:
    """Functional ``y -> |a^T y|^p`` for use with :func:`mc_moment`."""
    a = np.asarray(a, dtype=float)
    return lambda Y: np.abs(Y @ a) ** p


def mc_moment(sample_spec: SampleSpec, functional, samples: int, seed=0, chunk: int = 100_000):
    """Sample mean and standard error of ``functional(y)``.

    ``functional`` maps a ``(size, n)`` sample block to ``size`` values; a
    difference of two functionals gives a paired comparison.
    """
    if samples < 1000:
        raise InvalidParamError("mc_moment needs at least 1000 samples")
    rng = np.random.default_rng(seed)
    s1 = s2 = 0.0
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        v = np.asarray(functional(sample_spec.draw(rng, size)), dtype=float)
        s1 += float(v.sum())
        s2 += float((v * v).sum())
        done += size
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0) * samples / (samples - 1)
    return mean, math.sqrt(var / samples)
