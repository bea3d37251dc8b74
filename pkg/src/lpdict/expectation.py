"""Expectations over a random Bernoulli support ``Omega``.

Every coordinate belongs to ``Omega`` independently with probability
``theta``.  Two functionals are needed by the population dynamics:

* the population ascent direction ``E[||a_Omega||^(p-2) a_Omega]``;
* power means ``E[(sum_{j in Omega} w_j + c)^(k/2)]`` for squared weights
  ``w`` and offsets ``c`` (the building blocks of the SOR growth factors).

Three engines evaluate them: exact enumeration of all ``2^d`` supports
(``d <= 20``), the p = 4 closed form, and Monte Carlo over sampled supports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EngineMismatchError, InvalidParamError
from .objective import int_power

ENGINE_MODES = ("exact-enumeration", "closed-form-p4", "monte-carlo")
MAX_ENUMERATION_DIM = 20
_MC_CHUNK = 1 << 16


@dataclass(frozen=True)
class ExpectationEngine:
    mode: str = "exact-enumeration"
    mc_samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ENGINE_MODES:
            raise InvalidParamError(f"engine mode must be one of {ENGINE_MODES}")
        if self.mc_samples < 1:
            raise InvalidParamError("mc_samples must be positive")

    def check(self, dim: int, p: int) -> None:
        """Raise :class:`EngineMismatchError` if this engine cannot serve ``(dim, p)``."""
        if self.mode == "exact-enumeration" and dim > MAX_ENUMERATION_DIM:
            raise EngineMismatchError(
                f"exact enumeration is capped at {MAX_ENUMERATION_DIM} coordinates, got {dim}")
        if self.mode == "closed-form-p4" and p != 4:
            raise EngineMismatchError(f"closed-form-p4 engine requires p = 4, got p = {p}")

    def rng(self, *stream) -> np.random.Generator:
        """Generator for the sub-stream ``(seed, *stream)``."""
        return np.random.default_rng(np.random.SeedSequence([self.seed, *stream]))


def _check_theta(theta: float) -> None:
    if not 0.0 < theta < 1.0:
        raise InvalidParamError(f"theta must lie in (0, 1), got {theta}")


def norm_power(sq: np.ndarray, k: int) -> np.ndarray:
    """``sq ** (k / 2)`` for non-negative ``sq`` and integer ``k >= 0``."""
    if k % 2 == 0:
        return int_power(sq, k // 2)
    return np.sqrt(sq) * int_power(sq, k // 2)


def subset_tables(w: np.ndarray, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Subset sums of ``w`` and their Bernoulli weights over all ``2^d`` subsets.

    Index ``s`` encodes the subset whose bit ``j`` is set iff coordinate ``j``
    is included.
    """
    w = np.asarray(w, dtype=float)
    sums = np.zeros(1)
    probs = np.ones(1)
    for wj in w:
        sums = np.concatenate((sums, sums + wj))
        probs = np.concatenate((probs * (1.0 - theta), probs * theta))
    return sums, probs


def _sample_supports(rng: np.random.Generator, size: int, dim: int, theta: float) -> np.ndarray:
    return (rng.random((size, dim)) < theta).astype(float)


def mc_population_direction(a, p: int, theta: float, samples: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo mean and standard error of ``||a_Omega||^(p-2) a_Omega``."""
    a = np.asarray(a, dtype=float)
    a2 = a * a
    total = np.zeros_like(a)
    total_sq = np.zeros_like(a)
    done = 0
    while done < samples:
        size = min(_MC_CHUNK, samples - done)
        b = _sample_supports(rng, size, a.size, theta)
        vals = norm_power(b @ a2, p - 2)[:, None] * b * a
        total += vals.sum(axis=0)
        total_sq += (vals * vals).sum(axis=0)
        done += size
    mean = total / samples
    var = np.maximum(total_sq / samples - mean * mean, 0.0)
    return mean, np.sqrt(var / max(samples - 1, 1))


def population_direction(a, p: int, theta: float, engine: ExpectationEngine, rng=None) -> np.ndarray:
    """``E_Omega[||a_Omega||^(p-2) a_Omega]`` evaluated by ``engine``.

    ``rng`` overrides the engine's default Monte-Carlo stream.
    """
    a = np.asarray(a, dtype=float)
    _check_theta(theta)
    engine.check(a.size, p)
    if engine.mode == "closed-form-p4":
        a2 = a * a
        return a * (theta * theta * (a2.sum() - a2) + theta * a2)
    if engine.mode == "monte-carlo":
        rng = engine.rng() if rng is None else rng
        return mc_population_direction(a, p, theta, engine.mc_samples, rng)[0]
    sums, probs = subset_tables(a * a, theta)
    vals = probs * norm_power(sums, p - 2)
    d = a.size
    coef = np.empty(d)
    for i in range(d):
        coef[i] = vals.reshape(1 << (d - 1 - i), 2, 1 << i)[:, 1, :].sum()
    return a * coef


def power_mean(w, offsets, k: int, theta: float, engine: ExpectationEngine, rng=None) -> np.ndarray:
    """``E_Omega[(sum_{j in Omega} w_j + c)^(k/2)]`` for each offset ``c``.

    ``w`` holds non-negative squared magnitudes.  Monte Carlo uses one set of
    sampled supports for all offsets.  The closed form covers ``k = 2``, the
    only case the p = 4 engine needs.
    """
    w = np.asarray(w, dtype=float)
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
    _check_theta(theta)
    engine.check(w.size, k + 2)
    if engine.mode == "closed-form-p4":
        return theta * w.sum() + offsets
    if engine.mode == "monte-carlo":
        rng = engine.rng() if rng is None else rng
        total = np.zeros_like(offsets)
        done = 0
        while done < engine.mc_samples:
            size = min(_MC_CHUNK, engine.mc_samples - done)
            s = _sample_supports(rng, size, w.size, theta) @ w
            total += norm_power(s[:, None] + offsets[None, :], k).sum(axis=0)
            done += size
        return total / engine.mc_samples
    sums, probs = subset_tables(w, theta)
    return np.array([probs @ norm_power(sums + c, k) for c in offsets])
