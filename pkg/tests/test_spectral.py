import cmath
import math

import numpy as np
import pytest

from selfsim.exceptions import CutoffOutsideTrustedBand, InsufficientRungs
from selfsim.measure import AtomicMeasure2D, atomic_approx
from selfsim.projection import projected_density
from selfsim.spectral import (
    fit_decay,
    ft_2d,
    ft_projection,
    projection_ft,
    sobolev_integral,
    sobolev_norm,
    system_decay_fit,
    system_ft,
    transform_depth,
)


def _point(w):
    return AtomicMeasure2D(np.array([complex(w)]), np.array([1.0]))


def test_ft_normalisation_and_single_atom(sys_a):
    m = atomic_approx(sys_a, 6)
    assert ft_2d(m, [0]).values[0] == pytest.approx(1)
    v = ft_2d(_point(0.3 - 2j), [1 + 1j, -4j, 7]).values
    np.testing.assert_allclose(np.abs(v), 1, atol=1e-15)
    assert ft_projection(m, cmath.exp(0.2j), [0.0]).values[0] == pytest.approx(1)


def test_ft_projection_single_atom():
    z = cmath.exp(0.8j)
    v = ft_projection(_point(1), z, [1.0]).values[0]
    assert abs(v - cmath.exp(1j * z.real)) < 1e-15


def test_ft_bounded_and_hermitian(sys_b):
    m = atomic_approx(sys_b, 6)
    rng = np.random.default_rng(0)
    xi = rng.normal(size=200) * 20 + 1j * rng.normal(size=200) * 20
    v, vm = ft_2d(m, xi).values, ft_2d(m, -xi).values
    assert np.all(np.abs(v) <= 1 + 1e-12)
    np.testing.assert_allclose(vm, np.conj(v), atol=1e-13)


def test_projection_identity_depth10(sys_a):
    m = atomic_approx(sys_a, 10)
    rng = np.random.default_rng(11)
    err = 0.0
    for _ in range(100):
        z = cmath.exp(1j * rng.uniform(0, 2 * math.pi))
        t = rng.uniform(-500, 500)
        err = max(err, abs(ft_projection(m, z, [t]).values[0] - ft_2d(m, [t * z]).values[0]))
    assert err < 1e-12


def test_depth_refinement_low_frequencies(sys_a):
    rng = np.random.default_rng(2)
    xi = rng.uniform(0, sys_a.r**-6, 100) * np.exp(1j * rng.uniform(0, 2 * np.pi, 100))
    d8 = ft_2d(atomic_approx(sys_a, 8), xi).values
    d12 = system_ft(sys_a, xi, 12)
    assert np.abs(d8 - d12).max() < 1e-3


@pytest.mark.parametrize("depth", [1, 4, 9])
def test_product_matches_direct_sum(sys_b, depth):
    rng = np.random.default_rng(depth)
    xi = rng.normal(size=300) * 200 + 1j * rng.normal(size=300) * 200
    direct = ft_2d(atomic_approx(sys_b, depth), xi).values
    assert np.abs(system_ft(sys_b, xi, depth) - direct).max() <= 1e-9


def test_one_step_functional_equation(sys_b):
    # nu_d_hat(xi) = sum_i p_i e^{i<xi, a_i>} nu_{d-1}_hat(conj(lam) xi)
    rng = np.random.default_rng(4)
    xi = rng.normal(size=100) * 50 + 1j * rng.normal(size=100) * 50
    for d in (1, 3, 6):
        lhs = ft_2d(atomic_approx(sys_b, d), xi).values
        prev = ft_2d(atomic_approx(sys_b, d - 1), np.conj(sys_b.lam) * xi).values
        phase = np.exp(1j * (xi.real[:, None] * sys_b.a.real + xi.imag[:, None] * sys_b.a.imag)) @ sys_b.p
        assert np.abs(lhs - phase * prev).max() <= 1e-12


def test_converged_transform(sys_a):
    xi = np.array([3 + 4j, 100j, -250.0])
    d = transform_depth(sys_a, 250.0)
    assert sys_a.r**d * 250 * 5 < 1e-16
    np.testing.assert_allclose(system_ft(sys_a, xi), system_ft(sys_a, xi, d + 5), atol=1e-15)


def test_fit_decay_point_mass():
    fit = fit_decay(lambda xi: np.ones(xi.shape, complex), 2.0 ** np.arange(6))
    assert fit.gamma_hat == pytest.approx(0, abs=1e-12)
    assert fit.freq_range == (1.0, 64.0)


def test_fit_decay_power_law():
    fit = fit_decay(lambda xi: np.abs(xi) ** -0.7 + 0j, 2.0 ** np.arange(6))
    assert fit.gamma_hat == pytest.approx(0.7, abs=1e-12)
    assert fit.r2 == pytest.approx(1)


def test_fit_decay_rungs_and_band():
    with pytest.raises(InsufficientRungs):
        fit_decay(lambda xi: xi, [1, 2, 4, 8, 16])
    with pytest.raises(CutoffOutsideTrustedBand):
        fit_decay(lambda xi: xi, 2.0 ** np.arange(6), band=50)


def test_decay_sys_a(sys_a):
    fit = system_decay_fit(sys_a)
    assert fit.gamma_hat > 0 and fit.r2 > 0.5
    assert fit.notes == ()


def test_decay_real_lambda_flagged(sys_real):
    fit = system_decay_fit(sys_real)
    assert fit.notes and "real" in fit.notes[0]


def test_sobolev_uniform_interval():
    g = lambda x: np.exp(0.5j * x) * 2 * np.sin(x / 2) / x  # noqa: E731
    est = sobolev_integral(g, 0.0, 4000.0, 0.05)
    # tail beyond the cutoff carries about 2 / (pi C)
    assert est.norm**2 == pytest.approx(1 - 2 / (math.pi * 4000), abs=1e-4)


def test_sobolev_parseval_matched_resolution(sys_a):
    cutoff = sys_a.r**-8
    for z in (1, cmath.exp(0.9j)):
        est = sobolev_norm(sys_a, z, 0.0, 12, cutoff)
        g = projected_density(sys_a, z, 12, math.pi / cutoff)
        hist = g.h * math.fsum(g.values**2)
        assert abs(est.norm**2 - hist) / hist < 0.05


def test_sobolev_monotone_in_gamma(sys_b):
    norms = [sobolev_norm(sys_b, cmath.exp(0.3j), g, 12).norm for g in (0, 0.05, 0.1, 0.2)]
    assert all(a <= b for a, b in zip(norms, norms[1:]))


def test_sobolev_no_tail_flag_small_gamma(sys_a):
    for j in range(16):
        est = sobolev_norm(sys_a, cmath.exp(2j * math.pi * j / 16), 0.05, 12)
        assert math.isfinite(est.norm) and not est.tail_flag


def test_sobolev_errors(sys_a):
    with pytest.raises(CutoffOutsideTrustedBand):
        sobolev_norm(sys_a, 1, 0, depth=6, cutoff=sys_a.r**-8)
    with pytest.raises(ValueError):
        sobolev_norm(sys_a, 1, -0.1)


def test_projection_ft_is_restriction(sys_b):
    z = cmath.exp(1.3j)
    t = np.linspace(-40, 40, 17)
    np.testing.assert_allclose(projection_ft(sys_b, z, t, 7), system_ft(sys_b, t * z, 7))
