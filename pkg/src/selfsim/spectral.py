"""Fourier transforms of the measure and its projections, decay fits, Sobolev norms.

Convention: ``mu_hat(xi) = int exp(i <xi, w>) dmu(w)``.  Sobolev norms carry the
``1 / (2 pi)`` factor that makes ``||g||_(0)`` the L^2 norm of the density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .exceptions import CutoffOutsideTrustedBand, InsufficientRungs
from .ifs import IFSSystem, check_irrational_rotation
from .measure import AtomicMeasure2D
from .projection import as_direction, inner

BLOCK = 1 << 22
TAIL_TOL = 1e-17


@dataclass(frozen=True)
class SpectrumTable:
    frequencies: np.ndarray
    values: np.ndarray

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)


def _phase_sum(weights: np.ndarray, phases_of: Callable[[slice], np.ndarray], n_freq: int, n_atoms: int):
    out = np.empty(n_freq, dtype=complex)
    step = max(1, BLOCK // max(n_atoms, 1))
    for s in range(0, n_freq, step):
        sl = slice(s, min(s + step, n_freq))
        out[sl] = np.exp(1j * phases_of(sl)) @ weights
    return out


def ft_2d(measure: AtomicMeasure2D, xi_list) -> SpectrumTable:
    """Direct sum ``sum_k w_k exp(i <xi, x_k>)`` at each frequency."""
    xi = np.atleast_1d(np.asarray(xi_list, dtype=complex))
    pts = measure.points

    def phases(sl):
        x = xi[sl, None]
        return x.real * pts.real[None, :] + x.imag * pts.imag[None, :]

    return SpectrumTable(xi, _phase_sum(measure.weights, phases, len(xi), len(pts)))


def ft_projection(measure: AtomicMeasure2D, z, t_list) -> SpectrumTable:
    """Transform of the projected measure, summed over the 1-D atoms ``<z, w_k>``."""
    z = as_direction(z)
    t = np.atleast_1d(np.asarray(t_list, dtype=float))
    pos = inner(z, measure.points)
    return SpectrumTable(t, _phase_sum(measure.weights, lambda sl: t[sl, None] * pos[None, :], len(t), len(pos)))


def transform_depth(system: IFSSystem, xi_max: float, tol: float = TAIL_TOL) -> int:
    """Depth past which the remaining product factors differ from 1 by less than ``tol``."""
    reach = abs(system.barycenter) + float(np.abs(system.a).max()) / (1 - system.r)
    if xi_max * reach <= tol:
        return 0
    return max(0, math.ceil(math.log(tol / (xi_max * reach)) / math.log(system.r)))


def system_ft(system: IFSSystem, xi, depth: int | None = None) -> np.ndarray:
    """Transform of the self-similar measure via its product expansion.

    With ``depth`` given this equals the transform of :func:`atomic_approx` at
    that depth; otherwise enough factors are taken to reach double precision.
    """
    xi = np.asarray(xi, dtype=complex)
    if depth is None:
        depth = transform_depth(system, float(np.abs(xi).max()) if xi.size else 0.0)
    out = np.ones(xi.shape, dtype=complex)
    scale = 1 + 0j
    for _ in range(depth):
        t = scale * system.a
        out *= np.exp(1j * (xi.real[..., None] * t.real + xi.imag[..., None] * t.imag)) @ system.p
        scale *= system.lam
    b = scale * system.barycenter
    return out * np.exp(1j * (xi.real * b.real + xi.imag * b.imag))


def projection_ft(system: IFSSystem, z, t, depth: int | None = None) -> np.ndarray:
    """``hat(P_z nu)(t) = nu_hat(t z)``."""
    z = as_direction(z)
    return system_ft(system, np.asarray(t, dtype=float) * z, depth)


def trusted_band(system: IFSSystem, depth: int) -> float:
    return system.r ** (-(depth - 2))


# -- decay -----------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    gamma_hat: float
    intercept: float
    r2: float
    freq_range: tuple[float, float]
    annulus_max: tuple[float, ...] = ()
    notes: tuple[str, ...] = ()


def annulus_frequencies(T: float, n_dirs: int = 64, n_moduli: int = 16) -> np.ndarray:
    ang = 2 * np.pi * (np.arange(n_dirs) + 0.5) / n_dirs
    mod = np.geomspace(T, 2 * T, n_moduli)
    return (mod[:, None] * np.exp(1j * ang)[None, :]).ravel()


def fit_decay(spectrum_builder: Callable[[np.ndarray], np.ndarray], freq_ladder, n_dirs: int = 64,
              n_moduli: int = 16, band: float | None = None) -> DecayFit:
    """Fit ``log max_{|xi| in [T, 2T]} |mu_hat(xi)|`` against ``log T``; ``gamma_hat`` is minus the slope.

    ``spectrum_builder`` maps an array of complex frequencies to transform values.
    """
    ladder = np.asarray(freq_ladder, dtype=float)
    if len(ladder) < 6:
        raise InsufficientRungs(f"need at least 6 rungs, got {len(ladder)}")
    if np.any(ladder <= 0) or np.any(np.diff(ladder) <= 0):
        raise ValueError("frequency ladder must be positive and increasing")
    if band is not None and 2 * ladder[-1] > band:
        raise CutoffOutsideTrustedBand(f"ladder reaches {2 * ladder[-1]:.4g} beyond band {band:.4g}")
    maxima = np.array([np.abs(spectrum_builder(annulus_frequencies(T, n_dirs, n_moduli))).max() for T in ladder])
    fit = stats.linregress(np.log(ladder), np.log(np.maximum(maxima, 1e-300)))
    r2 = fit.rvalue**2 if np.ptp(maxima) > 0 else 0.0
    return DecayFit(float(-fit.slope), float(fit.intercept), float(r2),
                    (float(ladder[0]), float(2 * ladder[-1])), tuple(maxima.tolist()))


def system_decay_fit(system: IFSSystem, freq_ladder=None, depth: int | None = None) -> DecayFit:
    """Decay fit for a system, with notes when the rotation hypothesis fails."""
    if freq_ladder is None:
        freq_ladder = 4.0 * 2.0 ** np.arange(10)
    band = trusted_band(system, depth) if depth is not None else None
    fit = fit_decay(lambda xi: system_ft(system, xi, depth), freq_ladder, band=band)
    notes = []
    rot = check_irrational_rotation(system)
    if rot.status == "RationalMultiple":
        what = "real" if rot.numerator == 0 or rot.denominator == 1 else "a rational multiple of pi"
        notes.append(f"hypothesis violated: arg(lambda) is {what} ({rot.numerator}/{rot.denominator})")
    return DecayFit(fit.gamma_hat, fit.intercept, fit.r2, fit.freq_range, fit.annulus_max, tuple(notes))


# -- Sobolev norms --------------------------------------------------------------------


@dataclass(frozen=True)
class SobolevEstimate:
    gamma: float
    norm: float
    cutoff: float
    tail_flag: bool
    tail_share: float = field(default=0.0)


def default_step(system: IFSSystem) -> float:
    # |g_hat|^2 oscillates on scale 2 pi / (2 * support length) >= pi / (2 R)
    return math.pi / (16 * system.bounding_disk[1])


def sobolev_integral(transform: Callable[[np.ndarray], np.ndarray], gamma: float, cutoff: float, step: float,
                     window: float | None = None) -> SobolevEstimate:
    """``(1/2pi) int_{|xi| <= cutoff} |g_hat(xi)|^2 (1 + xi^2)^gamma dxi``, square-rooted.

    ``transform`` maps real frequencies to ``g_hat``; ``|g_hat|^2`` must be even
    (true for real ``g``).  Midpoint rule on ``[0, cutoff]`` doubled by symmetry.
    ``window`` multiplies the integrand by ``sinc^2(xi window / 2)``, the factor
    a histogram of bin width ``window`` applies on average.  ``tail_flag`` marks
    more than 10% of the integral coming from the last decade.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if not (cutoff > 0 and step > 0):
        raise ValueError("cutoff and step must be positive")
    n = max(1, round(cutoff / step))
    step = cutoff / n
    t = (np.arange(n) + 0.5) * step
    vals = np.empty(n)
    block = 1 << 15
    for s in range(0, n, block):
        vals[s:s + block] = np.abs(transform(t[s:s + block])) ** 2
    integrand = vals * (1 + t**2) ** gamma
    if window is not None:
        integrand *= np.sinc(t * window / (2 * np.pi)) ** 2
    parts = integrand * step / np.pi
    total = math.fsum(parts)
    tail = math.fsum(parts[t >= cutoff / 10])
    share = tail / total if total > 0 else 0.0
    return SobolevEstimate(float(gamma), math.sqrt(total), float(cutoff), share > 0.1, share)


def sobolev_norm(system: IFSSystem, z, gamma: float, depth: int | None = 12, cutoff: float | None = None,
                 step: float | None = None, window: float | None = None) -> SobolevEstimate:
    """Sobolev norm of the density of ``P_z nu`` from its transform ``t -> nu_hat(t z)``.

    ``depth`` selects the atomic approximation whose transform is integrated
    (``None`` for the converged product); ``cutoff`` defaults to ``r^-8`` and
    must lie in the trusted band of ``depth``.
    """
    z = as_direction(z)
    if cutoff is None:
        cutoff = system.r ** (-8)
    if depth is not None and cutoff > trusted_band(system, depth):
        raise CutoffOutsideTrustedBand(f"cutoff {cutoff:.4g} beyond {trusted_band(system, depth):.4g}")
    if step is None:
        step = default_step(system)
    return sobolev_integral(lambda t: projection_ft(system, z, t, depth), gamma, cutoff, step, window)
