import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selfsim.exceptions import (
    BadProbabilityVector,
    DegenerateTranslations,
    IndexOutOfRange,
    ModulusOutOfRange,
)
from selfsim.ifs import (
    check_irrational_rotation,
    check_ssc,
    closed_form_dims,
    continued_fraction_convergents,
    cylinder_map,
    cylinder_offsets,
    cylinder_weights,
    disk_min_gap,
    hausdorff_dimension_measure,
    lq_dimension_closed,
    smallest_enclosing_circle,
    system_from_polar,
    validate_system,
    word_index,
    words,
)

from .conftest import CORNERS, LAM

D_A = math.log(4) / -math.log(0.35)


def test_sys_a_parameters(sys_a):
    assert sys_a.r == pytest.approx(0.35, abs=1e-15)
    assert sys_a.lam == pytest.approx(LAM)
    assert math.fsum(sys_a.probs) == 1.0
    assert sys_a.n_maps == 4


@pytest.mark.parametrize("lam", [1.1, 1.0, 0.0, 1.5j, complex("nan")])
def test_bad_modulus(lam):
    with pytest.raises(ModulusOutOfRange):
        validate_system(lam, [0, 1], [0.5, 0.5])


@pytest.mark.parametrize("probs", [(0.5, 0.6), (1.0, 0.0), (0.5,), (-0.5, 1.5)])
def test_bad_probs(probs):
    with pytest.raises(BadProbabilityVector):
        validate_system(0.5, [0, 1], probs)


def test_degenerate_translations():
    with pytest.raises(DegenerateTranslations):
        validate_system(0.5, [1, 1], [0.5, 0.5])
    with pytest.raises(DegenerateTranslations):
        validate_system(0.5, [1], [1.0])


def test_polar_constructor(sys_a):
    s = system_from_polar(0.35, 1.0, CORNERS, [0.25] * 4)
    assert s.lam == sys_a.lam


def test_cylinder_map_examples(sys_a):
    e = cylinder_map(sys_a, ())
    assert (e.scale, e.offset, e.weight) == (1, 0, 1)
    m0 = cylinder_map(sys_a, (0,))
    assert m0.scale == sys_a.lam and m0.offset == 1 + 1j and m0.weight == 0.25
    m01 = cylinder_map(sys_a, (0, 1))
    assert abs(m01.offset - ((1 + 1j) + sys_a.lam * (1 - 1j))) < 1e-15
    w = 0.3 - 0.2j
    assert abs(m01(w) - ((1 + 1j) + sys_a.lam * ((1 - 1j) + sys_a.lam * w))) < 1e-15
    assert abs(m01.inverse(m01(w)) - w) < 1e-14


def test_cylinder_map_rejects_bad_symbol(sys_a):
    with pytest.raises(IndexOutOfRange):
        cylinder_map(sys_a, (0, 4))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 3), max_size=8), st.lists(st.integers(0, 3), max_size=8))
def test_cylinder_composition(u, v):
    from selfsim.io import named_system

    s = named_system("SYS-B")
    mu, mv, muv = cylinder_map(s, u), cylinder_map(s, v), cylinder_map(s, u + v)
    assert abs(muv.scale - mu.scale * mv.scale) < 1e-15
    assert abs(muv.offset - (mu.offset + mu.scale * mv.offset)) < 1e-12
    assert muv.weight == pytest.approx(mu.weight * mv.weight, rel=1e-12)


def test_cylinder_composition_exhaustive_two_maps():
    s = validate_system(0.4 * cmath.exp(0.5j), [0, 1], [0.3, 0.7])
    for d1 in range(0, 5):
        for d2 in range(0, 5):
            for u in words(2, d1):
                for v in words(2, d2):
                    mu, mv = cylinder_map(s, u), cylinder_map(s, v)
                    muv = cylinder_map(s, tuple(u) + tuple(v))
                    assert abs(muv.offset - (mu.offset + mu.scale * mv.offset)) < 1e-12


def test_offsets_follow_word_order(sys_b):
    off = cylinder_offsets(sys_b, 3)
    wts = cylinder_weights(sys_b, 3)
    for u in words(4, 3):
        j = word_index(u, 4)
        m = cylinder_map(sys_b, u)
        assert abs(off[j] - m.offset) < 1e-14
        assert wts[j] == pytest.approx(m.weight)


def test_bounding_disk(sys_a):
    c, rad = sys_a.bounding_disk
    assert abs(c) < 1e-15
    assert rad == pytest.approx(math.sqrt(2) / 0.65)
    assert smallest_enclosing_circle(CORNERS) == (pytest.approx(0), pytest.approx(math.sqrt(2)))


def test_smallest_circle_obtuse_triangle():
    c, rad = smallest_enclosing_circle([0, 4, 2 + 0.5j])
    assert c == pytest.approx(2)
    assert rad == pytest.approx(2)


def test_ssc_sys_a(sys_a):
    v = check_ssc(sys_a, max_depth=1)
    assert v.proven and v.depth_used == 1
    assert v.min_gap == pytest.approx(2 - 2 * 0.35 * math.sqrt(2) / 0.65)
    assert v.min_gap == pytest.approx(0.477, abs=1e-3)


def test_min_gap_nonincreasing(sys_a):
    gaps = [disk_min_gap(sys_a, d) for d in range(1, 7)]
    assert all(g > 0 for g in gaps)
    assert all(b <= a + 1e-15 for a, b in zip(gaps, gaps[1:]))


def test_ssc_overlapping():
    s = validate_system(0.9, [0, 0.1j], [0.5, 0.5])
    assert check_ssc(s, max_depth=6).status in ("Refuted", "Unknown")


def test_closed_forms(sys_a, sys_b):
    d = closed_form_dims(sys_a, 2)
    assert d.Dq_closed == pytest.approx(1.32051, abs=1e-5)
    assert d.dimH_measure_closed == pytest.approx(D_A)
    assert d.dimH_set_closed == pytest.approx(D_A)
    d = closed_form_dims(sys_b, 2)
    assert d.Dq_closed == pytest.approx(1.14683, abs=1e-5)
    assert d.dimH_measure_closed == pytest.approx(1.21911, abs=1e-5)
    assert d.dimH_set_closed == pytest.approx(1.32051, abs=1e-5)


def test_dq_limit_and_monotone(sys_b):
    assert lq_dimension_closed(sys_b, 1.001) == pytest.approx(hausdorff_dimension_measure(sys_b), abs=1e-3)
    qs = [1.1, 1.5, 2, 3, 5]
    vals = [lq_dimension_closed(sys_b, q) for q in qs]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert all(v <= hausdorff_dimension_measure(sys_b) for v in vals)


def test_uniform_dims_coincide(sys_a):
    for q in (1.1, 2, 5):
        assert lq_dimension_closed(sys_a, q) == pytest.approx(D_A, abs=1e-12)


@pytest.mark.parametrize("angle,expect", [
    (math.pi / 3, ("RationalMultiple", 1, 3)),
    (0.0, ("RationalMultiple", 0, 1)),
    (1.0, ("PlausiblyIrrational", None, None)),
    (math.pi * 2 / 7, ("RationalMultiple", 2, 7)),
])
def test_rotation_check(angle, expect):
    r = check_irrational_rotation(angle)
    assert (r.status, r.numerator, r.denominator) == expect


def test_rotation_on_system(sys_a, sys_real):
    assert check_irrational_rotation(sys_a).status == "PlausiblyIrrational"
    assert check_irrational_rotation(sys_real).status == "RationalMultiple"


def test_convergents_of_pi_inverse():
    conv = list(continued_fraction_convergents(1 / math.pi, 400))
    assert (1, 3) in conv and (7, 22) in conv and (113, 355) in conv
    with pytest.raises(ValueError):
        check_irrational_rotation(1.0, 0)


def test_words_order():
    w = words(3, 2)
    assert w.shape == (9, 2)
    assert [word_index(x, 3) for x in w] == list(range(9))
    np.testing.assert_array_equal(words(2, 0), np.zeros((1, 0)))
