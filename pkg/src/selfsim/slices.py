"""Coding map, shift, conditional measures on fibres and slice dimensions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DensityFloorHit,
    DepthExhausted,
    EmptyWindow,
    NotInAttractorNeighborhood,
)
from .ifs import IFSSystem, cylinder_map, hausdorff_dimension_measure
from .measure import AtomicMeasure2D, SampleSet, sample_measure
from .projection import DensityGrid, as_direction, inner, projected_density

DENSITY_FLOOR = 1e-4
CODING_TOL = 1e-9


@dataclass(frozen=True)
class CodedPoint:
    w: complex
    word: tuple[int, ...]
    depth: int
    level_margins: tuple[float, ...] = field(default=(), repr=False)

    @property
    def min_gap_margin(self) -> float:
        return min(self.level_margins, default=math.inf)


def code_points(system: IFSSystem, ws, depth: int, tol: float = CODING_TOL):
    """Vectorised greedy coding.

    Returns ``(words, margins, ok)``: ``words`` is ``(n, depth)``, ``margins``
    holds per-level distances (original units) to the nearest non-selected
    sibling disk, and ``ok`` is False where no child disk held the point.
    """
    ws = np.atleast_1d(np.asarray(ws, dtype=complex))
    c, rad = system.bounding_disk
    centres = system.lam * c + system.a
    child = system.r * rad
    n = len(ws)
    out = np.zeros((n, depth), dtype=np.int64)
    margins = np.full((n, depth), np.inf)
    ok = np.ones(n, dtype=bool)
    cur = ws.copy()
    unit = 1.0
    for level in range(depth):
        dist = np.abs(cur[:, None] - centres[None, :])
        pick = np.argmin(dist, axis=1)
        best = dist[np.arange(n), pick]
        ok &= best <= child + tol / unit
        if system.n_maps > 1:
            dist[np.arange(n), pick] = np.inf
            margins[:, level] = (dist.min(axis=1) - child) * unit
        out[:, level] = pick
        cur = (cur - system.a[pick]) / system.lam
        unit *= system.r
    return out, margins, ok


def code_point(system: IFSSystem, w, depth: int, tol: float = CODING_TOL) -> CodedPoint:
    """Word ``i_depth(w)`` chosen by descending through the cylinder disks holding ``w``."""
    words, margins, ok = code_points(system, [w], depth, tol)
    if not ok[0]:
        raise NotInAttractorNeighborhood(f"{complex(w)} is outside every child disk")
    return CodedPoint(complex(w), tuple(words[0].tolist()), depth, tuple(margins[0].tolist()))


def shift_T(system: IFSSystem, point: CodedPoint) -> CodedPoint:
    """``T w = f_{i_1}^{-1}(w)`` with the word shifted left."""
    if point.depth < 1:
        raise DepthExhausted("cannot shift a depth-0 coded point")
    i = point.word[0]
    w = (point.w - system.translations[i]) / system.lam
    margins = tuple(m / system.r for m in point.level_margins[1:])
    return CodedPoint(w, point.word[1:], point.depth - 1, margins)


def shift_points(system: IFSSystem, ws: np.ndarray, first: np.ndarray) -> np.ndarray:
    return (np.asarray(ws) - system.a[first]) / system.lam


# -- densities along the rotation orbit --------------------------------------------


class OrbitDensities:
    """Lazily built histograms of ``P_{alpha^-k z} nu`` for k = 0, 1, ..."""

    def __init__(self, system: IFSSystem, z, depth: int = 12, h: float = 0.01):
        self.system = system
        self.z = as_direction(z)
        self.depth = depth
        self.h = h
        self._grids: dict[int, DensityGrid] = {}

    def direction(self, k: int) -> complex:
        return self.z * self.system.alpha ** (-k)

    def __getitem__(self, k: int) -> DensityGrid:
        if k not in self._grids:
            self._grids[k] = projected_density(self.system, self.direction(k), self.depth, self.h)
        return self._grids[k]


@dataclass(frozen=True)
class SliceMass:
    value: float
    numerator_density: float
    denominator_density: float
    weight_factor: float
    k: int


def _read(grid: DensityGrid, x: float, half: float | None) -> float:
    if half is None:
        return float(grid.value_at(x))
    return float(grid.cdf(x + half) - grid.cdf(x - half)) / (2 * half)


def slice_mass_formula(system: IFSSystem, z, point: CodedPoint, k: int, density_depth: int = 12,
                       h: float = 0.01, floor: float = DENSITY_FLOOR,
                       densities: OrbitDensities | None = None, window: float | None = None) -> SliceMass:
    """Conditional mass of the level-k cylinder of ``w`` on its fibre.

    ``g_{alpha^-k z}(P_{alpha^-k z} T^k w) / g_z(P_z w) * p_u * r^-k`` with
    ``u = i_k(w)``, both densities read from histograms.  With ``window`` the
    reads are averages: ``g_z`` over ``P_z w +- window`` and the other density
    over the image of that window under ``T^k``, i.e. ``+- window * r^-k``.
    """
    z = as_direction(z)
    if k < 0 or k > point.depth:
        raise DepthExhausted(f"k={k} needs a point coded to depth >= k, have {point.depth}")
    if densities is None:
        densities = OrbitDensities(system, z, density_depth, h)
    den = _read(densities[0], float(inner(z, point.w)), window)
    if den < floor:
        raise DensityFloorHit(f"g_z(P_z w) = {den:.3g} below floor {floor}")
    if k == 0:
        return SliceMass(1.0, den, den, 1.0, 0)
    cyl = cylinder_map(system, point.word[:k])
    tkw = cyl.inverse(point.w)
    zk = densities.direction(k)
    num = _read(densities[k], float(inner(zk, tkw)), None if window is None else window * system.r ** (-k))
    factor = cyl.weight * system.r ** (-k)
    return SliceMass(num / den * factor, num, den, factor, k)


def slice_mass_empirical(system: IFSSystem, data, z, w, word, delta: float,
                         min_points: int = 10_000) -> float:
    """Share of the strip ``|P_z x - P_z w| <= delta`` carried by the cylinder ``word``."""
    z = as_direction(z)
    if isinstance(data, SampleSet):
        data = data.as_measure()
    if isinstance(data, AtomicMeasure2D):
        pts, wts = data.points, data.weights
    else:
        pts = np.asarray(data, dtype=complex)
        wts = np.full(len(pts), 1.0 / max(len(pts), 1))
    if len(pts) < min_points:
        raise ValueError(f"need at least {min_points} points, got {len(pts)}")
    word = tuple(word)
    sel = np.abs(inner(z, pts) - float(inner(z, w))) <= delta
    total = math.fsum(wts[sel])
    if total == 0:
        raise EmptyWindow(f"no mass within {delta} of P_z w")
    if not word:
        return 1.0
    strip_pts, strip_w = pts[sel], wts[sel]
    codes, _, ok = code_points(system, strip_pts, len(word))
    hit = ok & np.all(codes == np.asarray(word)[None, :], axis=1)
    return math.fsum(strip_w[hit]) / total


@dataclass(frozen=True)
class SliceLocalDim:
    slope: float
    deterministic_slope: float
    density_slope: float
    ks: tuple[int, ...]
    log_masses: tuple[float, ...]


def _slope(x, y) -> float:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def slice_local_dim(system: IFSSystem, z, point: CodedPoint, k_max: int = 10, density_depth: int = 12,
                    h: float = 0.01, floor: float = DENSITY_FLOOR,
                    densities: OrbitDensities | None = None) -> SliceLocalDim:
    """Slope of ``log nu_{z,w}(K_{i_k(w)})`` against ``k log r`` over k = 2..k_max.

    The slope splits into the cylinder-weight part ``log(p_u r^-k)`` and the
    density-ratio part; both are reported.
    """
    if k_max < 4:
        raise ValueError("k_max must be at least 4")
    if point.depth < k_max:
        raise DepthExhausted(f"point coded to depth {point.depth} < k_max={k_max}")
    z = as_direction(z)
    if densities is None:
        densities = OrbitDensities(system, z, density_depth, h)
    ks = list(range(2, k_max + 1))
    det, dens = [], []
    for k in ks:
        sm = slice_mass_formula(system, z, point, k, floor=floor, densities=densities)
        if sm.numerator_density < floor:
            raise DensityFloorHit(f"g at T^{k} w = {sm.numerator_density:.3g} below floor {floor}")
        det.append(math.log(sm.weight_factor))
        dens.append(math.log(sm.numerator_density / sm.denominator_density))
    x = [k * math.log(system.r) for k in ks]
    s_det, s_dens = _slope(x, det), _slope(x, dens)
    logs = tuple(a + b for a, b in zip(det, dens))
    return SliceLocalDim(s_det + s_dens, s_det, s_dens, tuple(ks), logs)


# -- dimension conservation -------------------------------------------------------------


@dataclass(frozen=True)
class DCPoint:
    w: complex
    word: tuple[int, ...]
    local_dim: float | None
    deterministic: float | None
    density_part: float | None
    floor_hit: bool


@dataclass(frozen=True)
class DCReport:
    z: complex
    dim_measure: float
    projected_dim: float
    median_slice_dim: float
    total: float
    tolerance: float
    passed: bool | None
    hypothesis_ok: bool
    floor_hits: int
    points: tuple[DCPoint, ...] = field(repr=False)


def projected_local_dim(grid: DensityGrid, xs, n_scales: int = 6, coarse: float = 0.2) -> float:
    """Median slope of ``log P nu([x - d, x + d])`` against ``log d`` for ``d`` in ``[h, coarse]``."""
    ds = np.geomspace(grid.h, coarse, n_scales)
    xs = np.asarray(xs, float)
    mass = grid.cdf(xs[:, None] + ds[None, :]) - grid.cdf(xs[:, None] - ds[None, :])
    mass = np.maximum(mass, 1e-300)
    ld = np.log(ds)
    ldc = ld - ld.mean()
    slopes = (np.log(mass) - np.log(mass).mean(axis=1, keepdims=True)) @ ldc / np.dot(ldc, ldc)
    return float(np.median(slopes))


def sample_coded_points(system: IFSSystem, n: int, depth: int, seed: int):
    """Seeded sample points together with their words to ``depth``."""
    s = sample_measure(system, n, seed=seed)
    words, _, ok = code_points(system, s.points, depth)
    return s.points[ok], words[ok]


def dimension_conservation_report(system: IFSSystem, z, n_points: int = 100, k_max: int = 10,
                                  density_depth: int = 12, h: float = 0.01, seed: int = 0,
                                  tol: float = 0.15, pool_factor: int = 4,
                                  floor: float = DENSITY_FLOOR) -> DCReport:
    """Compare ``dim P_z nu + median slice dim`` with the closed-form ``dim_H nu``.

    Points come from a seeded sample; those whose density reads fall under
    ``floor`` are recorded and skipped until ``n_points`` usable ones are found.
    """
    z = as_direction(z)
    dim = hausdorff_dimension_measure(system)
    # D_q tends to dim_H nu as q -> 1, so some D_q exceeds 1 iff dim_H nu > 1
    hypothesis_ok = dim > 1
    densities = OrbitDensities(system, z, density_depth, h)
    pts, words = sample_coded_points(system, pool_factor * n_points, k_max + 2, seed)
    rows, dims, hits = [], [], 0
    for w, word in zip(pts, words):
        if len(dims) == n_points:
            break
        cp = CodedPoint(complex(w), tuple(word.tolist()), k_max + 2)
        try:
            ld = slice_local_dim(system, z, cp, k_max, floor=floor, densities=densities)
        except DensityFloorHit:
            hits += 1
            rows.append(DCPoint(cp.w, cp.word, None, None, None, True))
            continue
        dims.append(ld.slope)
        rows.append(DCPoint(cp.w, cp.word, ld.slope, ld.deterministic_slope, ld.density_slope, False))
    median_slice = float(np.median(dims)) if dims else math.nan
    xs = inner(z, np.array([r.w for r in rows if not r.floor_hit]))
    proj_dim = projected_local_dim(densities[0], xs) if len(xs) else math.nan
    total = proj_dim + median_slice
    passed = bool(abs(total - dim) <= tol) if hypothesis_ok else None
    return DCReport(z, dim, proj_dim, median_slice, total, tol, passed, hypothesis_ok, hits, tuple(rows))
