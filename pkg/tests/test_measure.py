import math

import numpy as np
import pytest

from selfsim.exceptions import (
    AtomBudgetExceeded,
    DegenerateScales,
    NoZeroTranslation,
    QOutOfRange,
    TooFewPoints,
)
from selfsim.ifs import cylinder_map, validate_system
from selfsim.measure import (
    AtomicMeasure2D,
    atomic_approx,
    box_moment,
    conjugate_to_zero,
    convolution_split,
    convolve_atoms,
    default_word_length,
    empirical_Dq,
    sample_measure,
    scale_ladder,
)


def test_atoms_depth0_depth1(sys_a):
    m = atomic_approx(sys_a, 0)
    assert len(m) == 1 and abs(m.points[0]) < 1e-15 and m.weights[0] == 1
    m = atomic_approx(sys_a, 1)
    np.testing.assert_allclose(m.points, sys_a.a, atol=1e-15)
    np.testing.assert_array_equal(m.weights, 0.25)


def test_atoms_are_images_of_barycentre(sys_b):
    m = atomic_approx(sys_b, 2)
    assert len(m) == 16
    lam, b = sys_b.lam, sys_b.barycenter
    assert abs(m.points[0] - ((1 + 1j) + lam * (1 + 1j) + lam**2 * b)) < 1e-15
    assert m.weights[0] == pytest.approx(0.16)
    assert m.total_mass() == pytest.approx(1, abs=1e-15)
    f = cylinder_map(sys_b, (2, 3))
    assert abs(m.points[2 * 4 + 3] - f(b)) < 1e-15


def test_barycentre_is_fixed_by_mean(sys_b):
    m = atomic_approx(sys_b, 6)
    assert abs(np.dot(m.weights, m.points) - sys_b.barycenter) < 1e-13


def test_atom_budget(sys_a):
    with pytest.raises(AtomBudgetExceeded):
        atomic_approx(sys_a, 11)
    assert len(atomic_approx(sys_a, 3, atom_budget=64)) == 64


def test_sample_single_point(sys_a):
    s = sample_measure(sys_a, 1, word_length=1, seed=5)
    assert np.min(np.abs(sys_a.a - s.points[0])) < 1e-15


def test_sample_mean_clt(sys_a):
    s = sample_measure(sys_a, 100_000, word_length=30, seed=42)
    se = np.std(s.points.real) / math.sqrt(len(s)), np.std(s.points.imag) / math.sqrt(len(s))
    mean = s.points.mean()
    assert abs(mean.real) < 3 * se[0] and abs(mean.imag) < 3 * se[1]


def test_sampling_deterministic_and_thread_independent(sys_b):
    a = sample_measure(sys_b, 150_000, seed=3)
    b = sample_measure(sys_b, 150_000, seed=3)
    c = sample_measure(sys_b, 150_000, seed=3, threads=3)
    np.testing.assert_array_equal(a.points, b.points)
    np.testing.assert_array_equal(a.points, c.points)
    assert not np.array_equal(a.points, sample_measure(sys_b, 150_000, seed=4).points)


def test_sample_words_reproduce_points(sys_b):
    s = sample_measure(sys_b, 50, seed=1, word_length=12)
    for p, w in zip(s.points, s.words):
        assert abs(cylinder_map(sys_b, w)(sys_b.barycenter) - p) < 1e-13


def test_default_word_length(sys_a):
    L = default_word_length(sys_a)
    assert sys_a.r**L < 1e-9 <= sys_a.r ** (L - 1)


def test_sample_validation(sys_a):
    with pytest.raises(ValueError):
        sample_measure(sys_a, 0)
    with pytest.raises(ValueError):
        sample_measure(sys_a, 5, word_length=0)


def test_conjugation_shifts_measure(sys_b):
    s2, beta = conjugate_to_zero(sys_b, 0)
    assert s2.translations[0] == 0
    m1, m2 = atomic_approx(sys_b, 4), atomic_approx(s2, 4)
    np.testing.assert_allclose(m2.points, m1.points + beta, atol=1e-13)


def test_split_k2_structure():
    s = validate_system(0.35 * np.exp(1j), [0, 1 - 1j, -1 + 1j, -1 - 1j], [0.25] * 4)
    mu, nuk, beta = convolution_split(s, 2)
    assert beta == 0
    assert mu.lam == pytest.approx(s.lam**2) and nuk.lam == pytest.approx(s.lam**2)
    np.testing.assert_allclose(mu.a, s.a * s.lam, atol=1e-15)


def _aggregate(m: AtomicMeasure2D):
    keys = np.round(m.points.real, 9) + 1j * np.round(m.points.imag, 9)
    uniq, inv = np.unique(keys, return_inverse=True)
    return uniq, np.bincount(inv, weights=m.weights)


@pytest.mark.parametrize("k,depth", [(2, 1), (2, 2), (3, 1)])
def test_split_convolution_matches(sys_b, k, depth):
    mu, nuk, beta = convolution_split(sys_b, k)
    conv = convolve_atoms(atomic_approx(mu, depth), atomic_approx(nuk, depth))
    direct = atomic_approx(conjugate_to_zero(sys_b)[0], k * depth)
    pu, wu = _aggregate(conv)
    pd, wd = _aggregate(direct)
    assert len(pu) == len(pd)
    np.testing.assert_allclose(pu, pd, atol=1e-9)
    assert 0.5 * np.abs(wu - wd).sum() < 1e-9
    assert beta != 0


def test_split_errors(sys_a):
    with pytest.raises(NoZeroTranslation):
        convolution_split(sys_a, 2, auto_conjugate=False)
    with pytest.raises(ValueError):
        convolution_split(sys_a, 1)


def test_dq_point_mass():
    m = AtomicMeasure2D(np.array([0.3 + 0.1j]), np.array([1.0]))
    assert empirical_Dq(m, 2, (1e-3, 1e-1)).value == pytest.approx(0, abs=1e-12)
    assert empirical_Dq(m, 3.5, (1e-3, 1e-1)).value == pytest.approx(0, abs=1e-12)


def test_dq_errors(sys_a):
    m = atomic_approx(sys_a, 3)
    with pytest.raises(QOutOfRange):
        empirical_Dq(m, 1.0)
    with pytest.raises(DegenerateScales):
        empirical_Dq(m, 2, (0.1, 0.1))
    with pytest.raises(DegenerateScales):
        scale_ladder((0, 1))
    with pytest.raises(TooFewPoints):
        empirical_Dq(np.array([0j]), 2)


def test_scale_ladder_ratio_two():
    d = scale_ladder((1e-3, 1e-1))
    assert len(d) == 7
    assert d[0] == pytest.approx(1e-3) and d[-1] == pytest.approx(1e-1)


def test_box_moment_unbiased_pairs():
    pts = np.array([0.01 + 0.01j, 0.02 + 0.02j, 0.5 + 0.5j])
    # one box holds 2 points: 2*1 / (3*2)
    assert box_moment(pts, None, 0.1, 2, 0j) == pytest.approx(1 / 3)
    assert box_moment(pts, np.full(3, 1 / 3), 0.1, 2, 0j) == pytest.approx(5 / 9)


def test_dq_accepts_xy_columns(sys_a):
    s = sample_measure(sys_a, 5000, seed=0)
    xy = np.column_stack([s.points.real, s.points.imag])
    assert empirical_Dq(xy, 2).value == empirical_Dq(s.points, 2).value


@pytest.mark.parametrize("name,target", [("a", 1.32051), ("b", 1.14683)])
def test_dq_recovers_closed_form(sys_a, sys_b, name, target):
    system = sys_a if name == "a" else sys_b
    s = sample_measure(system, 100_000, seed=42)
    est = empirical_Dq(s, 2, (0.35**8, 0.35**2))
    assert abs(est.value - target) <= 0.1
    assert abs(est.correlation_value - target) <= 0.1
    assert est.agrees
