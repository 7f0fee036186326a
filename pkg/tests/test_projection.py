import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selfsim.exceptions import GridMismatch, SupportOutOfRange
from selfsim.measure import AtomicMeasure2D, atomic_approx
from selfsim.projection import (
    AtomicMeasure1D,
    BumpFamily,
    as_direction,
    atom_radius,
    density,
    direction_from_angle,
    direction_sweep,
    inner,
    lipschitz_violations,
    lq_norm,
    project,
    projected_chunks,
    projected_density,
    selfsim_density_residual,
    sweep_bumps,
)


def test_project_examples(sys_a):
    m = AtomicMeasure2D(np.array([1 + 0j]), np.array([1.0]))
    assert project(m, 1).positions[0] == 1
    assert project(m, 1j).positions[0] == 0
    p = project(atomic_approx(sys_a, 1), cmath.exp(1j * math.pi / 4))
    np.testing.assert_allclose(np.sort(p.positions), [-math.sqrt(2), 0, 0, math.sqrt(2)], atol=1e-15)
    np.testing.assert_array_equal(p.weights, 0.25)


def test_direction_validation():
    assert as_direction(1) == 1 + 0j
    assert direction_from_angle(0.0) == 1 + 0j
    with pytest.raises(ValueError):
        as_direction(2)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * math.pi), st.complex_numbers(max_magnitude=10))
def test_projection_rotation_identity(theta, w):
    # P_z(lam w) = r P_{alpha^-1 z}(w)
    from selfsim.io import named_system

    s = named_system("SYS-A")
    z = direction_from_angle(theta)
    lhs = inner(z, np.array([s.lam * w]))[0]
    rhs = s.r * inner(z / s.alpha, np.array([w]))[0]
    assert abs(lhs - rhs) < 1e-12 * (1 + abs(w))


def test_density_examples():
    g = density(AtomicMeasure1D(np.array([0.0]), np.array([1.0])), -1, 1, 0.5)
    np.testing.assert_array_equal(g.values, [0, 0, 2, 0])
    g = density(AtomicMeasure1D(np.array([-0.75, 0.75]), np.array([0.5, 0.5])), -1, 1, 0.5)
    np.testing.assert_array_equal(g.values, [1, 0, 0, 1])
    assert g.mass() == 1
    with pytest.raises(SupportOutOfRange):
        density(AtomicMeasure1D(np.array([2.0]), np.array([1.0])), -1, 1, 0.5)
    with pytest.raises(ValueError):
        density(AtomicMeasure1D(np.array([0.0]), np.array([1.0])), -1, 1, 0)


def test_lq_norm_examples():
    uniform = density(AtomicMeasure1D(np.linspace(0.0005, 0.9995, 1000), np.full(1000, 1e-3)), 0, 1, 0.001)
    for q in (1.5, 2, 3, math.inf):
        assert lq_norm(uniform, q) == pytest.approx(1)
    g = density(AtomicMeasure1D(np.array([0.1]), np.array([1.0])), 0, 0.5, 0.5)
    assert lq_norm(g, 2) == pytest.approx(math.sqrt(2))


def test_grid_reads():
    g = density(AtomicMeasure1D(np.array([0.25, 0.75]), np.array([0.25, 0.75])), 0, 1, 0.5)
    assert g.value_at(0.1) == 0.5 and g.value_at(0.9) == 1.5 and g.value_at(3.0) == 0
    assert g.cdf(0.25) == pytest.approx(0.125)
    assert g.cdf(2.0) == pytest.approx(1)


def test_streaming_matches_direct(sys_b):
    z = cmath.exp(0.4j)
    m = atomic_approx(sys_b, 7)
    pos = np.concatenate([p for p, _ in projected_chunks(sys_b, z, 7, chunk_atoms=1000)])
    w = np.concatenate([w for _, w in projected_chunks(sys_b, z, 7, chunk_atoms=1000)])
    np.testing.assert_allclose(pos, inner(z, m.points), atol=1e-13)
    np.testing.assert_allclose(w, m.weights, rtol=1e-13)
    assert atom_radius(sys_b, 7) == pytest.approx(np.abs(m.points).max())


def test_projected_density_matches_histogram(sys_a):
    z = cmath.exp(0.3j)
    g = projected_density(sys_a, z, 6, 0.05)
    direct = density(project(atomic_approx(sys_a, 6), z), g.x0, g.edges[-1], 0.05)
    np.testing.assert_allclose(g.values, direct.values, atol=1e-12)


def test_depth12_density_refines(sys_a):
    g12 = projected_density(sys_a, 1, 12, 0.01)
    g13 = projected_density(sys_a, 1, 13, 0.01)
    assert g12.mass() == pytest.approx(1, abs=1e-6)
    assert np.isfinite(g12.values).all()
    assert g12.h * np.abs(g12.values - g13.values).sum() < 0.05


def test_selfsim_k0_is_identity(sys_a):
    assert selfsim_density_residual(sys_a, 1, 0, 8, 0.01) == 0


def test_selfsim_residual_sys_a(sys_a):
    r12 = selfsim_density_residual(sys_a, 1, 1, 12, 0.01)
    r10 = selfsim_density_residual(sys_a, 1, 1, 10, 0.01)
    assert r12 < 0.05 and r12 < r10


def test_selfsim_grid_mismatch(sys_a):
    with pytest.raises(GridMismatch):
        selfsim_density_residual(sys_a, 1, 2, 3, 0.01)


def test_bump_lipschitz_constant():
    b = BumpFamily((0.0,), 0.3)
    x = np.linspace(-2, 2, 200001)
    slope = np.abs(np.diff(b(x)[0]) / np.diff(x)).max()
    assert slope == pytest.approx(b.lipschitz, rel=1e-6)


def test_sweep_mass_and_lipschitz(sys_a):
    rows = direction_sweep(sys_a, 4, 8, 0.01)
    assert all(abs(r.mass - 1) < 1e-12 for r in rows)
    assert [round(r.angle, 12) for r in rows] == [0, round(math.pi / 2, 12), round(math.pi, 12),
                                                  round(3 * math.pi / 2, 12)]
    rows = direction_sweep(sys_a, 90, 8, 0.01)
    b = sweep_bumps(sys_a)
    assert lipschitz_violations(rows, b.lipschitz, atom_radius(sys_a, 8)) == []
    # the bound is tight enough to catch a tampered row
    bad = rows[:]
    from dataclasses import replace

    bad[5] = replace(bad[5], test_integrals=tuple(v + 0.5 for v in bad[5].test_integrals))
    assert lipschitz_violations(bad, b.lipschitz, atom_radius(sys_a, 8))


def test_sweep_threads_identical(sys_b):
    a = direction_sweep(sys_b, 12, 8, 0.02)
    b = direction_sweep(sys_b, 12, 8, 0.02, threads=3)
    assert a == b
