import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpdict.errors import InvalidParamError, ShapeMismatchError
from lpdict.objective import (
    ObjectiveSpec,
    abs_power,
    gamma_p,
    gradient,
    objective,
    objective_and_direction,
    population_max,
    signed_power,
)
from lpdict.stiefel import random_stiefel
from lpdict.synth import BernoulliGaussianSpec, gen_instance

# E|g|^p for a standard Gaussian: (p-1)!! for even p, (p-1)!! sqrt(2/pi) for odd p
GAMMA = {2: 1.0, 3: 1.5957691216057308, 4: 3.0, 5: 6.383076486422923, 6: 15.0}

RAW = lambda p: ObjectiveSpec(p, "raw")  # noqa: E731


def test_objective_examples():
    assert objective(np.eye(2), np.array([[1.0, 0.0], [0.0, 2.0]]), RAW(3)) == 9.0
    assert objective(np.array([[1.0, 0.0]]), np.array([[3.0], [4.0]]), RAW(4)) == 81.0


def test_per_entry_divides_by_entries():
    Y = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert objective(np.eye(2), Y, 3) == pytest.approx(9.0 / 4)


def test_spec_validation():
    with pytest.raises(InvalidParamError):
        ObjectiveSpec(2)
    with pytest.raises(InvalidParamError):
        ObjectiveSpec(3.5)
    with pytest.raises(InvalidParamError):
        ObjectiveSpec(3, "mean")


def test_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        objective(np.eye(3), np.ones((2, 5)), 3)


def test_p3_entry_transform():
    assert signed_power(np.array([-2.0]), 2)[0] == -4.0
    assert signed_power(np.array([0.0]), 2)[0] == 0.0
    assert abs_power(np.array([-2.0]), 3)[0] == 8.0


def test_p4_gradient_is_cube(rng):
    A = np.array(random_stiefel(3, 5, rng))
    Y = rng.standard_normal((5, 11))
    np.testing.assert_allclose(gradient(A, Y, RAW(4)), 4 * (A @ Y) ** 3 @ Y.T, rtol=1e-13)


def _fd_relative_error(A, Y, spec, rng, h=1e-5):
    E = rng.standard_normal(A.shape)
    E /= np.linalg.norm(E)
    fd = (objective(A + h * E, Y, spec) - objective(A - h * E, Y, spec)) / (2 * h)
    an = np.sum(gradient(A, Y, spec) * E)
    return abs(fd - an) / max(abs(an), 1e-300)


def test_gradient_finite_difference_p5(rng):
    A = rng.standard_normal((6, 6))
    Y = rng.standard_normal((6, 20))
    assert _fd_relative_error(A, Y, RAW(5), rng) <= 1e-5


@pytest.mark.parametrize("norm", ["raw", "per-entry"])
def test_gradient_finite_difference_many(rng, norm):
    for _ in range(25):
        p = int(rng.integers(3, 7))
        n = int(rng.integers(2, 8))
        m = int(rng.integers(1, n + 1))
        A = np.array(random_stiefel(m, n, rng))
        Y = rng.standard_normal((n, int(rng.integers(5, 40))))
        assert _fd_relative_error(A, Y, ObjectiveSpec(p, norm), rng) <= 1e-5


def test_objective_and_direction_consistent(rng):
    A = np.array(random_stiefel(2, 4, rng))
    Y = rng.standard_normal((4, 9))
    f, D = objective_and_direction(A, Y, 3)
    assert f == pytest.approx(objective(A, Y, RAW(3)), rel=1e-13)
    np.testing.assert_allclose(3 * D, gradient(A, Y, RAW(3)), rtol=1e-13)


@pytest.mark.parametrize("p,value", sorted(GAMMA.items()))
def test_gamma_values(p, value):
    assert gamma_p(p) == pytest.approx(value, rel=1e-14)


def test_gamma_scales_with_sigma():
    assert gamma_p(3, 2.0) == pytest.approx(8 * GAMMA[3], rel=1e-14)
    with pytest.raises(InvalidParamError):
        gamma_p(3, 0.0)


def test_population_max_values():
    assert population_max(4, 0.3) == pytest.approx(0.9, rel=1e-14)
    assert population_max(3, 0.1) == pytest.approx(0.15957691216057308, rel=1e-14)
    with pytest.raises(InvalidParamError):
        population_max(4, 1.0)


def test_monte_carlo_objective_at_truth_p3():
    inst = gen_instance(16, 200_000, BernoulliGaussianSpec(0.2), seed=6)
    val = objective(inst.D0.T, inst.Y, 3)
    assert val == pytest.approx(population_max(3, 0.2), rel=0.02)


def test_monte_carlo_objective_at_truth_p4():
    inst = gen_instance(10, 100_000, BernoulliGaussianSpec(0.3), seed=8)
    assert objective(inst.D0.T, inst.Y, 4) == pytest.approx(0.9, rel=0.05)


@settings(max_examples=40, deadline=None)
@given(p=st.integers(3, 6), seed=st.integers(0, 2**32 - 1))
def test_signed_permutation_invariance(p, seed):
    rng = np.random.default_rng(seed)
    A = np.array(random_stiefel(4, 4, rng))
    Y = rng.standard_normal((4, 15))
    P = np.eye(4)[rng.permutation(4)] * rng.choice([-1.0, 1.0], 4)[:, None]
    assert objective(P @ A, Y, p) == pytest.approx(objective(A, Y, p), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(p=st.integers(3, 6), c=st.floats(0.1, 10.0), seed=st.integers(0, 2**32 - 1))
def test_homogeneity(p, c, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((2, 3))
    Y = rng.standard_normal((3, 7))
    assert objective(c * A, Y, p) == pytest.approx(c**p * objective(A, Y, p), rel=1e-12)
    assert math.isfinite(objective(A, Y, p))
