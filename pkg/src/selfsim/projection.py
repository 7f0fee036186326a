"""Projections of the measure onto lines, histogram densities and direction sweeps."""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .exceptions import GridMismatch, SupportOutOfRange
from .ifs import ALGEBRAIC_TOL, IFSSystem, cylinder_offsets, cylinder_weights
from .measure import AtomicMeasure2D

CHUNK_ATOMS = 1 << 22


def direction_from_angle(theta: float) -> complex:
    return cmath.exp(1j * float(theta))


def as_direction(z) -> complex:
    """Return ``z`` as a unit complex number (``1`` is the positive real axis)."""
    z = complex(z)
    if abs(abs(z) - 1) > ALGEBRAIC_TOL:
        raise ValueError(f"direction must have unit modulus, |z| = {abs(z)!r}")
    return z


def inner(z: complex, w):
    """``<z, w> = Re(z * conj(w))`` for scalar ``z`` and array ``w``."""
    return z.real * np.real(w) + z.imag * np.imag(w)


@dataclass(frozen=True)
class AtomicMeasure1D:
    positions: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True)
class DensityGrid:
    """Piecewise-constant density on ``[x0 + j h, x0 + (j+1) h)``."""

    x0: float
    h: float
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def edges(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(len(self.values) + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x0 + self.h * (np.arange(len(self.values)) + 0.5)

    def mass(self) -> float:
        return self.h * math.fsum(self.values)

    def value_at(self, x):
        """Density read at ``x`` (0 outside the grid)."""
        x = np.asarray(x, dtype=float)
        j = np.floor((x - self.x0) / self.h).astype(np.int64)
        inside = (j >= 0) & (j < len(self.values))
        out = np.where(inside, self.values[np.clip(j, 0, len(self.values) - 1)], 0.0)
        return out if out.ndim else float(out)

    def cdf(self, x):
        """Exact integral of the grid density over ``(-inf, x]``."""
        cum = np.concatenate([[0.0], np.cumsum(self.values) * self.h])
        return np.interp(np.asarray(x, dtype=float), self.edges, cum)


def project(measure: AtomicMeasure2D, z) -> AtomicMeasure1D:
    z = as_direction(z)
    return AtomicMeasure1D(inner(z, measure.points), measure.weights)


def density(measure: AtomicMeasure1D, x_min: float, x_max: float, h: float) -> DensityGrid:
    """Histogram density ``(mass in bin) / h`` on half-open bins from ``x_min``."""
    if not h > 0:
        raise ValueError("bin width must be positive")
    pos = np.asarray(measure.positions, dtype=float)
    if len(pos) and (pos.min() < x_min or pos.max() > x_max):
        raise SupportOutOfRange(f"support [{pos.min()}, {pos.max()}] not inside [{x_min}, {x_max}]")
    n_bins = max(1, math.ceil((x_max - x_min) / h))
    idx = np.floor((pos - x_min) / h).astype(np.int64)
    # a point sitting exactly on x_max belongs to the last bin
    idx = np.minimum(idx, n_bins - 1)
    mass = np.bincount(idx, weights=measure.weights, minlength=n_bins)
    return DensityGrid(float(x_min), float(h), mass / h)


def lq_norm(grid: DensityGrid, q: float) -> float:
    if q < 1:
        raise ValueError("q must be >= 1")
    if math.isinf(q):
        return float(np.max(grid.values))
    return (grid.h * math.fsum(grid.values**q)) ** (1.0 / q)


# -- streaming projections of depth-d atoms ------------------------------------


def projected_support(system: IFSSystem, z: complex) -> tuple[float, float]:
    """Interval containing the projection of the attractor (projected bounding disk)."""
    c, rad = system.bounding_disk
    mid = float(inner(z, c))
    return mid - rad, mid + rad


def _split_depth(system: IFSSystem, depth: int) -> tuple[int, int]:
    d2 = depth // 2
    return depth - d2, d2


def projected_chunks(system: IFSSystem, z: complex, depth: int,
                     chunk_atoms: int = CHUNK_ATOMS) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(positions, weights)`` of the projected depth-``depth`` atoms.

    Uses ``f_{uv}(b) = f_u(0) + lam^{|u|} f_v(b)`` so only prefix and suffix
    tables are held in memory.  Chunks come in lexicographic word order.
    """
    d1, d2 = _split_depth(system, depth)
    pre_pos = inner(z, cylinder_offsets(system, d1))
    pre_w = cylinder_weights(system, d1)
    suf = system.lam**d1 * (cylinder_offsets(system, d2) + system.lam**d2 * system.barycenter)
    suf_pos = inner(z, suf)
    suf_w = cylinder_weights(system, d2)
    rows = max(1, chunk_atoms // len(suf_pos))
    for s in range(0, len(pre_pos), rows):
        pos = (pre_pos[s:s + rows, None] + suf_pos[None, :]).ravel()
        w = (pre_w[s:s + rows, None] * suf_w[None, :]).ravel()
        yield pos, w


def atom_radius(system: IFSSystem, depth: int) -> float:
    """``max |w|`` over the depth-``depth`` atoms."""
    d1, d2 = _split_depth(system, depth)
    pre = cylinder_offsets(system, d1)
    suf = system.lam**d1 * (cylinder_offsets(system, d2) + system.lam**d2 * system.barycenter)
    best = 0.0
    rows = max(1, CHUNK_ATOMS // len(suf))
    for s in range(0, len(pre), rows):
        best = max(best, float(np.abs(pre[s:s + rows, None] + suf[None, :]).max()))
    return best


def projected_median(system: IFSSystem, z, n: int = 20_001, seed: int = 0) -> float:
    """Median of ``P_z`` of a seeded sample.

    Unlike a quantile read off a histogram this is always a point of the
    projected attractor (to within ``r^L``), even when the median falls in a gap.
    """
    from .measure import sample_measure

    z = as_direction(z)
    pts = sample_measure(system, n, seed=seed).points
    return float(np.median(inner(z, pts)))


def default_bin_width(system: IFSSystem, depth: int) -> float:
    return system.r ** (depth / 2)


def grid_for(system: IFSSystem, z: complex, h: float) -> tuple[float, int]:
    lo, hi = projected_support(system, z)
    x0 = math.floor(lo / h) * h
    return x0, max(1, math.ceil((hi - x0) / h))


def projected_density(system: IFSSystem, z, depth: int, h: float | None = None) -> DensityGrid:
    """Histogram of ``P_z`` of the depth-``depth`` atomic approximation.

    The grid is anchored at a multiple of ``h`` and covers the projected
    bounding disk, so every atom lands inside it.
    """
    z = as_direction(z)
    if h is None:
        h = default_bin_width(system, depth)
    x0, n_bins = grid_for(system, z, h)
    mass = np.zeros(n_bins)
    for pos, w in projected_chunks(system, z, depth):
        idx = np.floor((pos - x0) / h).astype(np.int64)
        mass += np.bincount(idx, weights=w, minlength=n_bins)
    return DensityGrid(x0, float(h), mass / h, {"depth": depth, "z": z, "h": h})


# -- density self-similarity ------------------------------------------------------


def selfsim_density_rhs(system: IFSSystem, z, k: int, depth: int, h: float, x0: float, n_bins: int,
                        oversample: int = 8) -> np.ndarray:
    """Bin averages of ``sum_u p_u r^-k g_{alpha^-k z}(r^-k (x - b_u))`` on a target grid.

    ``b_u = P_z f_u(0)`` over words of length ``k``.  The inner density is
    estimated at depth ``depth`` on a grid ``oversample`` times finer than the
    rescaled target bins and integrated exactly over each preimage bin.
    """
    z = as_direction(z)
    zk = z * system.alpha ** (-k)
    if k == 0:
        g = projected_density(system, zk, depth, h)
    else:
        g = projected_density(system, zk, depth, h * system.r**k / oversample)
    n_atoms = system.n_maps**depth
    if len(g.values) > n_atoms:
        raise GridMismatch(f"{len(g.values)} inner bins for only {n_atoms} atoms; raise depth")
    b = inner(z, cylinder_offsets(system, k))
    pw = cylinder_weights(system, k)
    edges = x0 + h * np.arange(n_bins + 1)
    scale = system.r ** (-k)
    mass = np.zeros(n_bins)
    for bu, pu in zip(b, pw):
        cdf = g.cdf(scale * (edges - bu))
        mass += pu * np.diff(cdf)
    return mass / h


def selfsim_density_residual(system: IFSSystem, z, k: int, depth: int, h: float,
                             oversample: int = 8) -> float:
    """L1 distance between the projected density and its k-step self-similar expansion."""
    z = as_direction(z)
    if k < 0:
        raise ValueError("k must be >= 0")
    lhs = projected_density(system, z, depth, h)
    rhs = selfsim_density_rhs(system, z, k, depth, h, lhs.x0, len(lhs.values), oversample)
    return float(h * np.sum(np.abs(lhs.values - rhs)))


# -- direction sweeps ----------------------------------------------------------------


@dataclass(frozen=True)
class BumpFamily:
    """Gaussian bumps ``exp(-(x - c)^2 / (2 s^2))`` with known Lipschitz constants."""

    centers: tuple[float, ...]
    width: float

    @classmethod
    def spanning(cls, lo: float, hi: float, m: int = 8) -> "BumpFamily":
        centers = np.linspace(lo, hi, m)
        width = (hi - lo) / (m - 1) / 2
        return cls(tuple(centers.tolist()), float(width))

    @property
    def lipschitz(self) -> float:
        return 1.0 / (self.width * math.sqrt(math.e))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        c = np.asarray(self.centers)[:, None]
        return np.exp(-((x[None, :] - c) ** 2) / (2 * self.width**2))


@dataclass(frozen=True)
class SweepRow:
    z: complex
    angle: float
    lq_norm: float
    mass: float
    test_integrals: tuple[float, ...]


def sweep_bumps(system: IFSSystem, m: int = 8) -> BumpFamily:
    c, rad = system.bounding_disk
    reach = abs(c) + rad
    return BumpFamily.spanning(-reach, reach, m)


def sweep_row(system: IFSSystem, z, depth: int, h: float, q: float, bumps: BumpFamily) -> SweepRow:
    z = as_direction(z)
    x0, n_bins = grid_for(system, z, h)
    mass = np.zeros(n_bins)
    integrals = np.zeros(len(bumps.centers))
    for pos, w in projected_chunks(system, z, depth):
        idx = np.floor((pos - x0) / h).astype(np.int64)
        mass += np.bincount(idx, weights=w, minlength=n_bins)
        integrals += bumps(pos) @ w
    grid = DensityGrid(x0, h, mass / h)
    angle = cmath.phase(z) % (2 * math.pi)
    return SweepRow(z, angle, lq_norm(grid, q), grid.mass(), tuple(integrals.tolist()))


def sweep_directions(n_directions: int) -> list[complex]:
    return [cmath.exp(2j * math.pi * j / n_directions) for j in range(n_directions)]


def direction_sweep(system: IFSSystem, n_directions: int, depth: int, h: float | None = None,
                    q: float = 2.0, n_test: int = 8, threads: int = 1) -> list[SweepRow]:
    """L^q norms and bump integrals of the projected measure at ``e^{2 pi i j / n}``."""
    if n_directions < 1:
        raise ValueError("n_directions must be positive")
    if h is None:
        h = default_bin_width(system, depth)
    bumps = sweep_bumps(system, n_test)
    zs = sweep_directions(n_directions)

    def one(z):
        return sweep_row(system, z, depth, h, q, bumps)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, zs))
    return [one(z) for z in zs]


def lipschitz_violations(rows: list[SweepRow], lipschitz: float, radius: float,
                         slack: float = 1e-12) -> list[tuple[int, int, float]]:
    """Adjacent-row pairs (cyclic) breaking ``|dI| <= Lip * |dz| * max|w|``.

    Returns ``(row index, bump index, excess)`` for each violation.
    """
    bad = []
    n = len(rows)
    for j in range(n):
        a, b = rows[j], rows[(j + 1) % n]
        bound = lipschitz * abs(a.z - b.z) * radius
        for m, (u, v) in enumerate(zip(a.test_integrals, b.test_integrals)):
            excess = abs(u - v) - bound
            if excess > slack:
                bad.append((j, m, excess))
    return bad
