import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpdict.errors import InvalidParamError, NotOrthonormalError, ShapeMismatchError
from lpdict.expectation import ExpectationEngine, population_direction, power_mean
from lpdict.metrics import align, sor, sor_error_identity, sphere_error, tau_all, tau_i, tau_min
from lpdict.oracle import exhaustive_alignment
from lpdict.stiefel import random_stiefel

EXACT = ExpectationEngine("exact-enumeration")
P4 = ExpectationEngine("closed-form-p4")


def _rot(eps):
    return np.array([[math.cos(eps), -math.sin(eps)], [math.sin(eps), math.cos(eps)]])


def _signed_perm(rng, n):
    return np.eye(n)[rng.permutation(n)] * rng.choice([-1.0, 1.0], n)[:, None]


def test_align_truth(rng):
    D0 = np.array(random_stiefel(5, 5, rng))
    res = align(D0.T, D0)
    assert res.frob_error == pytest.approx(0.0, abs=1e-14)
    assert res.l4_error == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_array_equal(res.permutation, np.arange(5))
    np.testing.assert_array_equal(res.signs, np.ones(5))


def test_align_recovers_scramble(rng):
    D0 = np.array(random_stiefel(4, 4, rng))
    A = D0.T[[2, 0, 3, 1]]
    A[1] *= -1
    res = align(A, D0)
    assert res.frob_error == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_array_equal(res.permutation, [2, 0, 3, 1])
    np.testing.assert_array_equal(res.signs, [1, -1, 1, 1])


def test_align_two_dimensional_rotation():
    D0 = _rot(0.7)
    for eps in (1e-3, 0.1, 0.4):
        A = _rot(eps) @ D0.T
        expected = 2 * math.sin(eps / 2)
        assert align(A, D0).frob_error == pytest.approx(expected, rel=1e-10)
        assert exhaustive_alignment(A, D0) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_align_matches_exhaustive(rng, n):
    for _ in range(3):
        A = np.array(random_stiefel(n, n, rng))
        D0 = np.array(random_stiefel(n, n, rng))
        assert align(A, D0).frob_error == pytest.approx(exhaustive_alignment(A, D0), rel=1e-12, abs=1e-14)


def test_align_beats_sampled_permutations_n8(rng):
    A = np.array(random_stiefel(8, 8, rng))
    D0 = np.array(random_stiefel(8, 8, rng))
    best = align(A, D0).frob_error
    for _ in range(5000):
        P = _signed_perm(rng, 8)
        assert best <= np.linalg.norm(A.T - D0 @ P) / math.sqrt(8) + 1e-12


def test_align_partial_rows(rng):
    D0 = np.array(random_stiefel(5, 5, rng))
    res = align(D0.T[[3, 1]], D0)
    np.testing.assert_array_equal(res.permutation, [3, 1])
    assert res.frob_error == pytest.approx(0.0, abs=1e-14)


def test_align_errors(rng):
    D0 = np.array(random_stiefel(3, 3, rng))
    with pytest.raises(ShapeMismatchError):
        align(np.eye(4), D0)
    with pytest.raises(NotOrthonormalError):
        align(2 * np.eye(3), D0)


def test_l4_error_in_unit_interval(rng):
    for _ in range(20):
        res = align(np.array(random_stiefel(6, 6, rng)), np.eye(6))
        assert 0.0 <= res.l4_error <= 1.0


def test_sphere_error_examples():
    D0 = np.eye(4)
    assert sphere_error(D0[:, 2], D0) == 0.0
    assert sphere_error(-D0[:, 2], D0) == 0.0
    a = np.array([1.0, 1.0]) / math.sqrt(2)
    assert sphere_error(a) == pytest.approx(math.sqrt(2 - math.sqrt(2)), rel=1e-14)
    assert sphere_error(a) == pytest.approx(0.7653668647301796, rel=1e-14)


def test_sphere_error_precision_near_target():
    a = np.array([1.0, 1e-9])
    a /= np.linalg.norm(a)
    assert sphere_error(a) == pytest.approx(1e-9, rel=1e-6)


def test_sor_examples():
    e = np.zeros(4)
    e[3] = 1.0
    res = sor(e, 3)
    assert res.sor == math.inf and res.degenerate
    a = np.array([1.0, 1.0]) / math.sqrt(2)
    res = sor(a, 1)
    assert res.sor == pytest.approx(1.0)
    assert sor_error_identity(res.sor) == pytest.approx(2 - math.sqrt(2), rel=1e-14)
    assert sor_error_identity(math.inf) == 0.0
    assert math.isnan(res.sor_i[1]) and res.sor_i[0] == pytest.approx(1.0)
    with pytest.raises(InvalidParamError):
        sor(np.zeros(3), 0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(1e-3, 1e3))
def test_sor_scale_invariant(seed, c):
    a = np.random.default_rng(seed).standard_normal(5)
    assert sor(c * a, 2).sor == pytest.approx(sor(a, 2).sor, rel=1e-15)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_sor_error_identity(seed):
    a = np.random.default_rng(seed).standard_normal(6)
    a[0] = abs(a[0])
    a /= np.linalg.norm(a)
    e = np.eye(6)[0]
    assert sor_error_identity(sor(a, 0).sor) == pytest.approx(np.sum((a - e) ** 2), rel=1e-10, abs=1e-15)


def test_tau_zero_on_tie():
    q = np.array([0.5, 0.5, 0.5, 0.5])
    for p in (3, 4, 5):
        assert tau_i(q, 1, 3, 0.3, p, EXACT) == pytest.approx(0.0, abs=1e-15)


def test_tau_bounds_random(rng):
    for _ in range(2000):
        n = int(rng.integers(3, 11))
        p = int(rng.integers(3, 7))
        theta = float(rng.uniform(0.01, 0.99))
        q = rng.standard_normal(n)
        q /= np.linalg.norm(q)
        t = int(np.argmax(np.abs(q)))
        i = int(rng.choice([j for j in range(n) if j != t]))
        v = tau_i(q, i, t, theta, p, EXACT)
        assert -1e-12 <= v <= (1 - theta) / theta + 1e-12


def test_tau_negative_when_target_is_smaller():
    # the bound needs |q_target| >= |q_i|
    q = np.array([0.9, 0.3, 0.3])
    q /= np.linalg.norm(q)
    assert tau_i(q, 0, 1, 0.3, 4, EXACT) < 0


def test_tau_upper_bound_approached():
    # q = (eps, 1) along (i, target): tau_i -> (1 - theta)/theta as eps -> 0
    q = np.array([1e-6, 0.0, 1.0])
    q /= np.linalg.norm(q)
    assert tau_i(q, 0, 2, 0.25, 4, EXACT) == pytest.approx(3.0, rel=1e-9)


def test_tau_homogeneous_means():
    # tau depends on q only through ratios: the means scale by c^(k/2)
    w = np.array([0.1, 0.2, 0.05])
    a = power_mean(w, [0.3, 0.1], 3, 0.4, EXACT)
    b = power_mean(4 * w, [1.2, 0.4], 3, 0.4, EXACT)
    np.testing.assert_allclose(b, 8 * a, rtol=1e-13)


def test_sor_recurrence_n6_p4(rng):
    q = rng.random(6) + 0.1
    q[5] = 2.0
    q /= np.linalg.norm(q)
    g = population_direction(q, 4, 0.3, EXACT)
    for i in range(5):
        after = g[5] / g[i]
        before = q[5] / q[i]
        assert after == pytest.approx(before * (1 + tau_i(q, i, 5, 0.3, 4, EXACT)), rel=1e-10)


def test_tau_all_closed_form_matches_exact(rng):
    q = rng.standard_normal(9)
    q /= np.linalg.norm(q)
    t = int(np.argmax(np.abs(q)))
    a = tau_all(q, t, 0.2, 4, P4)
    b = tau_all(q, t, 0.2, 4, EXACT)
    assert math.isnan(a[t]) and math.isnan(b[t])
    np.testing.assert_allclose(np.delete(a, t), np.delete(b, t), rtol=1e-12)
    assert tau_min(q, t, 0.2, 4, P4) == pytest.approx(np.nanmin(b), rel=1e-12)


def test_tau_monotone_in_gap(rng):
    # with the rest fixed, tau_i grows as q_i shrinks relative to q_target
    rest = rng.random(4) * 0.3
    vals = []
    for qi in np.linspace(0.6, 0.01, 12):
        q = np.concatenate([rest, [qi, 0.6]])
        q /= np.linalg.norm(q)
        vals.append(tau_i(q, 4, 5, 0.3, 5, EXACT))
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


def test_tau_monotone_increasing_in_target(rng):
    for p in (3, 4, 6):
        rest = rng.random(5) * 0.3
        vals = []
        for qn in np.linspace(0.35, 2.0, 12):
            q = np.concatenate([rest, [0.35, qn]])
            q /= np.linalg.norm(q)
            vals.append(tau_i(q, 5, 6, 0.2, p, EXACT))
        assert all(b > a for a, b in zip(vals, vals[1:]))


def test_metric_consistency(rng):
    D0 = np.array(random_stiefel(6, 6, rng))
    for _ in range(10):
        exact = _signed_perm(rng, 6) @ D0.T
        res = align(exact, D0)
        assert res.frob_error <= 1e-14 and res.l4_error <= 1e-10
        other = align(np.array(random_stiefel(6, 6, rng)), D0)
        assert other.frob_error > 1e-3 and other.l4_error > 1e-10


def test_tau_rejects_bad_input():
    q = np.array([0.6, 0.8])
    with pytest.raises(InvalidParamError):
        tau_i(q, 1, 1, 0.3, 4, EXACT)
    with pytest.raises(InvalidParamError):
        tau_i(2 * q, 0, 1, 0.3, 4, EXACT)
    with pytest.raises(InvalidParamError):
        tau_i(q, 0, 1, 0.3, 2, EXACT)


def _sharpness_slack(q, theta, p):
    n = q.size
    eye = np.eye(n)
    r = 0.5 * min(min(np.sum((q - e) ** 2), np.sum((q + e) ** 2)) for e in eye)
    value = power_mean(q * q, [0.0], p, theta, EXACT)[0]
    c_p = 1.0 / (1.0 - 2.0 * 0.5 ** (p / 2))
    return c_p / (theta * (1 - theta)) * (theta - value) - r


def test_sharpness_inequality(rng):
    for k in range(300):
        n = int(rng.integers(2, 11))
        p = int(rng.integers(3, 7))
        theta = float(rng.uniform(0.05, 0.95))
        q = rng.standard_normal(n)
        if k % 3 == 0:
            q = np.eye(n)[0] + rng.uniform(0, 0.3) * q
        q /= np.linalg.norm(q)
        assert _sharpness_slack(q, theta, p) >= -1e-12
