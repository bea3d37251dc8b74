"""Generalized power method (GPM) and Riemannian gradient ascent for lp maximization.

Empirical solvers work on row-orthonormal ``m x n`` iterates ``A`` and data
``Y`` (``n x r``).  One GPM step replaces ``A`` by the polar factor of the
objective gradient; the gradient's positive scaling is irrelevant there.

Population solvers act on the expected objective with ``D0 = I``; their
ascent direction ``E[||a_Omega||^(p-2) a_Omega]`` omits the constant factor
``p * gamma_p`` (it cancels in the sphere normalization).  The population
RGD restores it so that its fixed step size refers to the true gradient.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParamError, InvalidShapeError, ZeroGradientError
from .expectation import ExpectationEngine, population_direction
from .metrics import align, sor, sphere_error
from .objective import gamma_p, objective_and_direction
from .stiefel import StiefelPoint, polar, random_stiefel, reorthonormalize

METHODS = ("gpm", "rgd")
STOP_REASONS = ("tol_obj", "tol_iterate", "max_iters")


@dataclass(frozen=True)
class SolverConfig:
    p: int = 3
    max_iters: int = 10_000
    tol_obj: float = 1e-12
    tol_iterate: float = 1e-10
    seed: int = 0
    record_trace: bool = False
    method: str = "gpm"
    rgd_step: float = 0.25

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 3:
            raise InvalidParamError(f"p must be an integer >= 3, got {self.p}")
        if self.max_iters < 1:
            raise InvalidParamError("max_iters must be >= 1")
        if not (self.tol_obj > 0 and self.tol_iterate > 0):
            raise InvalidParamError("tolerances must be positive")
        if self.method not in METHODS:
            raise InvalidParamError(f"method must be one of {METHODS}")
        if not self.rgd_step > 0:
            raise InvalidParamError("rgd_step must be positive")


@dataclass
class SolverTrace:
    """Per-iteration record of a solve.

    Series are indexed by iterate, so entry 0 describes the starting point
    and each series has ``iterations_run + 1`` entries.  ``wall_times`` are
    seconds since the solve started.  ``iterate_error_series`` holds the
    signed-permutation Frobenius error when ground truth was supplied.
    ``iterates`` is filled only when ``record_trace`` is set.  The population
    solvers additionally fill the SOR and sphere-error series.
    """

    objective_series: list = field(default_factory=list)
    iterate_error_series: list = field(default_factory=list)
    wall_times: list = field(default_factory=list)
    iterations_run: int = 0
    stop_reason: str = "max_iters"
    rank_deficient_steps: int = 0
    iterates: list = field(default_factory=list)
    target: int | None = None
    sor_series: list = field(default_factory=list)
    sphere_error_series: list = field(default_factory=list)

    @property
    def error_ratio_series(self) -> list:
        """``e[t+1] / e[t]`` of the sphere (or else iterate) error series."""
        errs = self.sphere_error_series or self.iterate_error_series
        return [b / a if a > 0 else math.nan for a, b in zip(errs[:-1], errs[1:])]


def _truth_matrix(truth):
    if truth is None:
        return None
    return np.asarray(getattr(truth, "D0", truth), dtype=float)


def _initial_point(n: int, m: int, cfg: SolverConfig, init) -> np.ndarray:
    if not 1 <= m <= n:
        raise InvalidShapeError(f"need 1 <= m <= n, got m={m}, n={n}")
    if init is None:
        return np.array(random_stiefel(m, n, cfg.seed))
    A = np.asarray(init, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    if A.shape != (m, n):
        raise InvalidShapeError(f"init has shape {A.shape}, expected {(m, n)}")
    return reorthonormalize(A)


def _iterate(Y, m, cfg, truth, init, step_fn):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise InvalidShapeError(f"Y must be a matrix, got shape {Y.shape}")
    n = Y.shape[0]
    A = _initial_point(n, m, cfg, init)
    D0 = _truth_matrix(truth)
    scale = 1.0 / (m * Y.shape[1])
    trace = SolverTrace()
    t0 = time.perf_counter()

    def record(A, f):
        trace.objective_series.append(f * scale)
        trace.wall_times.append(time.perf_counter() - t0)
        if D0 is not None:
            trace.iterate_error_series.append(align(A, D0).frob_error)
        if cfg.record_trace:
            trace.iterates.append(A.copy())

    f, D = objective_and_direction(A, Y, cfg.p)
    record(A, f)
    for it in range(cfg.max_iters):
        if not np.any(D):
            raise ZeroGradientError("gradient vanished identically; data are degenerate")
        A_new, deficient = step_fn(A, D, scale)
        trace.rank_deficient_steps += deficient
        A_new = reorthonormalize(A_new)
        f_new, D = objective_and_direction(A_new, Y, cfg.p)
        moved = float(np.linalg.norm(A_new - A))
        A = A_new
        record(A, f_new)
        trace.iterations_run = it + 1
        if abs(f_new - f) <= cfg.tol_obj * abs(f):
            trace.stop_reason = "tol_obj"
            break
        if moved <= cfg.tol_iterate:
            trace.stop_reason = "tol_iterate"
            break
        f = f_new
    else:
        trace.stop_reason = "max_iters"
    return StiefelPoint(A), trace


def gpm_solve(Y_obs, m: int, cfg: SolverConfig, truth=None, init=None):
    """Maximize ``||A Y||_p^p`` over row-orthonormal ``m x n`` matrices by GPM.

    Each step sets ``A <- polar(grad f(A))``; the objective never decreases.

    Args:
        Y_obs: Observations, ``n x r``.
        m: Number of dictionary atoms to recover (``m = n`` for all of them).
        cfg: Solver configuration with ``method='gpm'``.
        truth: Optional :class:`~lpdict.synth.DictionaryInstance` or ``D0``
            array; enables the error series in the trace.
        init: Optional starting point; otherwise drawn from ``cfg.seed``.

    Returns:
        ``(StiefelPoint, SolverTrace)``.
    """
    if cfg.method != "gpm":
        raise InvalidParamError("gpm_solve requires cfg.method == 'gpm'")

    def step(A, D, scale):
        pr = polar(D)
        return pr.orthonormal_factor, pr.rank_deficient

    return _iterate(Y_obs, m, cfg, truth, init, step)


def tangent_projection(A: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Project ``G`` onto the tangent space at the row-orthonormal point ``A``.

    Removes ``sym(G A^T) A``; on the sphere this is ``G - (G . a) a``.
    """
    S = G @ A.T
    return G - 0.5 * (S + S.T) @ A


def rgd_solve(Y_obs, m: int, cfg: SolverConfig, truth=None, init=None):
    """Riemannian gradient ascent with fixed step ``cfg.rgd_step`` and polar retraction.

    Uses the gradient of the per-entry objective.  Signature and stopping
    rules match :func:`gpm_solve`.
    """
    if cfg.method != "rgd":
        raise InvalidParamError("rgd_solve requires cfg.method == 'rgd'")

    def step(A, D, scale):
        G = (cfg.p * scale) * D
        pr = polar(A + cfg.rgd_step * tangent_projection(A, G))
        return pr.orthonormal_factor, pr.rank_deficient

    return _iterate(Y_obs, m, cfg, truth, init, step)


def solve(Y_obs, m: int, cfg: SolverConfig, truth=None, init=None):
    """Dispatch to :func:`gpm_solve` or :func:`rgd_solve` by ``cfg.method``."""
    fn = gpm_solve if cfg.method == "gpm" else rgd_solve
    return fn(Y_obs, m, cfg, truth, init)


# --- population dynamics (D0 = I) --------------------------------------------


def population_gradient(a, p: int, theta: float, engine: ExpectationEngine, rng=None) -> np.ndarray:
    """Population ascent direction ``E_Omega[||a_Omega||^(p-2) a_Omega]`` at a unit ``a``."""
    a = np.asarray(a, dtype=float).ravel()
    if abs(float(np.linalg.norm(a)) - 1.0) > 1e-10:
        raise InvalidParamError("population_gradient expects a unit vector")
    return population_direction(a, p, theta, engine, rng)


def _check_start(a0) -> np.ndarray:
    a = np.asarray(a0, dtype=float).ravel()
    if abs(float(np.linalg.norm(a)) - 1.0) > 1e-10:
        raise InvalidParamError("starting point must be a unit vector")
    return a


def _population_sphere(a0, p, theta, engine, max_iters, tol, target, step_fn):
    a = _check_start(a0)
    if target is None:
        target = int(np.argmax(np.abs(a)))
    sign = 1.0 if a[target] >= 0 else -1.0
    trace = SolverTrace(target=target)
    t0 = time.perf_counter()

    def record(a):
        trace.sphere_error_series.append(sphere_error(a))
        trace.sor_series.append(sor(sign * a, target).sor)
        trace.wall_times.append(time.perf_counter() - t0)

    record(a)
    if trace.sphere_error_series[0] == 0.0:
        trace.stop_reason = "tol_iterate"
        return a, trace
    for t in range(max_iters):
        a_new = step_fn(a, t)
        moved = float(np.linalg.norm(a_new - a))
        a = a_new
        record(a)
        trace.iterations_run = t + 1
        if moved <= tol:
            trace.stop_reason = "tol_iterate"
            break
    else:
        trace.stop_reason = "max_iters"
    return a, trace


def population_gpm(a0, p: int, theta: float, engine: ExpectationEngine,
                   max_iters: int = 100, tol: float = 1e-14, target: int | None = None):
    """Population GPM on the sphere: ``a <- g / ||g||`` with ``g`` the population direction.

    The trace records the sphere error, the SOR toward ``target`` (by
    default the largest-magnitude coordinate of ``a0``, sign-corrected) and
    the error ratios.  Monte-Carlo engines draw a fresh sub-stream per step.

    Returns:
        ``(a, SolverTrace)``.
    """
    engine.check(np.size(a0), p)

    def step(a, t):
        g = population_direction(a, p, theta, engine, engine.rng(t))
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            raise ZeroGradientError("population gradient vanished")
        return g / norm

    return _population_sphere(a0, p, theta, engine, max_iters, tol, target, step)


def population_rgd(a0, p: int, theta: float, engine: ExpectationEngine, step: float = 0.25,
                   max_iters: int = 10_000, tol: float = 1e-14, target: int | None = None):
    """Population Riemannian gradient ascent on the sphere with a fixed step.

    The gradient is that of ``E|a^T y|^p``, i.e. the population direction
    times ``p * gamma_p``; the retraction is normalization.
    """
    engine.check(np.size(a0), p)
    c = p * gamma_p(p)

    def rgd_step(a, t):
        g = c * population_direction(a, p, theta, engine, engine.rng(t))
        v = a + step * (g - (g @ a) * a)
        return v / np.linalg.norm(v)

    return _population_sphere(a0, p, theta, engine, max_iters, tol, target, rgd_step)


def population_orthogonal(A0, p: int, theta: float, engine: ExpectationEngine, method: str = "gpm",
                          step: float = 0.25, max_iters: int = 1000, tol: float = 1e-14):
    """Population GPM or RGD over the orthogonal group (``D0 = I``).

    Each row's population direction is evaluated independently; GPM takes
    the polar factor of the stacked directions, RGD a projected step followed
    by a polar retraction.  ``iterate_error_series`` holds the
    signed-permutation Frobenius error against the identity.
    """
    if method not in METHODS:
        raise InvalidParamError(f"method must be one of {METHODS}")
    A = reorthonormalize(np.asarray(A0, dtype=float))
    n = A.shape[1]
    engine.check(n, p)
    c = p * gamma_p(p)
    eye = np.eye(n)
    trace = SolverTrace()
    t0 = time.perf_counter()

    def record(A):
        trace.iterate_error_series.append(align(A, eye).frob_error)
        trace.wall_times.append(time.perf_counter() - t0)

    record(A)
    for t in range(max_iters):
        G = np.vstack([population_direction(row, p, theta, engine, engine.rng(t, i))
                       for i, row in enumerate(A)])
        if not np.any(G):
            raise ZeroGradientError("population gradient vanished")
        if method == "gpm":
            A_new = polar(G).orthonormal_factor
        else:
            A_new = polar(A + step * tangent_projection(A, c * G)).orthonormal_factor
        moved = float(np.linalg.norm(A_new - A))
        A = A_new
        record(A)
        trace.iterations_run = t + 1
        if moved <= tol:
            trace.stop_reason = "tol_iterate"
            break
    else:
        trace.stop_reason = "max_iters"
    return StiefelPoint(A), trace
