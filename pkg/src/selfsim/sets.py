"""Set-level checks: projected attractor, coverage by the density, slice box dimension."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import LineMissesAttractor
from .ifs import IFSSystem, hausdorff_dimension_set
from .projection import DensityGrid, as_direction, inner, projected_density


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, pairwise disjoint closed intervals stored as an ``(m, 2)`` array."""

    intervals: np.ndarray

    @classmethod
    def merge(cls, lo, hi) -> "IntervalUnion":
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
        reach = np.maximum.accumulate(hi)
        # a new block starts where an interval begins strictly past everything before it
        start = np.ones(len(lo), dtype=bool)
        start[1:] = lo[1:] > reach[:-1]
        idx = np.flatnonzero(start)
        ends = np.append(idx[1:], len(lo)) - 1
        return cls(np.column_stack([lo[idx], reach[ends]]))

    @property
    def total_length(self) -> float:
        return math.fsum(self.intervals[:, 1] - self.intervals[:, 0])

    def __len__(self):
        return len(self.intervals)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        j = np.searchsorted(self.intervals[:, 0], x, side="right") - 1
        jc = np.clip(j, 0, len(self.intervals) - 1)
        return (j >= 0) & (x <= self.intervals[jc, 1])

    def covered_length(self, x) -> np.ndarray:
        """Length of the union inside ``(-inf, x]``."""
        x = np.asarray(x, float)
        lo, hi = self.intervals[:, 0], self.intervals[:, 1]
        before = np.concatenate([[0.0], np.cumsum(hi - lo)])
        j = np.searchsorted(lo, x, side="right") - 1
        jc = np.clip(j, 0, len(lo) - 1)
        partial = np.clip(x - lo[jc], 0, hi[jc] - lo[jc])
        return np.where(j >= 0, before[jc] + partial, 0.0)


def project_attractor(system: IFSSystem, z, depth: int) -> IntervalUnion:
    """Union of the projected depth-``depth`` cylinder disks.

    Uses ``U_d(z) = union_i (P_z a_i + r U_{d-1}(alpha^-1 z))`` with ``U_0(z)``
    the projected bounding disk, merging at every level.
    """
    z = as_direction(z)
    c, rad = system.bounding_disk
    zs = [z * system.alpha ** (-j) for j in range(depth + 1)]
    mid = float(inner(zs[depth], c))
    u = IntervalUnion(np.array([[mid - rad, mid + rad]]))
    for j in range(depth - 1, -1, -1):
        shifts = inner(zs[j], system.a)
        lo = (shifts[:, None] + system.r * u.intervals[None, :, 0]).ravel()
        hi = (shifts[:, None] + system.r * u.intervals[None, :, 1]).ravel()
        u = IntervalUnion.merge(lo, hi)
    return u


def inner_length(system: IFSSystem, z, depth: int = 10, h: float = 1e-3) -> float:
    """Atom-based length estimate: total width of ``h``-bins holding a projected atom."""
    grid = projected_density(system, z, depth, h)
    return h * int(np.count_nonzero(grid.values))


@dataclass(frozen=True)
class CoverageReport:
    z: complex
    cov_a: float
    cov_b: float
    length_outer: float
    length_inner: float
    epsilon: float
    # density mass of {g >= eps} lying in the projected attractor
    cov_b_mass: float = math.nan


def default_epsilon(grid: DensityGrid, factor: float = 1e-3) -> float:
    pos = grid.values[grid.values > 0]
    return factor * float(np.median(pos))


def equivalence_check(system: IFSSystem, z, depth: int = 12, h: float = 0.01,
                      epsilon: float | None = None, inner_depth: int = 10,
                      inner_h: float = 1e-3, outer_depth: int | None = None) -> CoverageReport:
    """Two-sided coverage between ``{g_z >= eps}`` and the outer projected attractor.

    ``cov_a`` is the share of the projected attractor where the density is at
    least ``eps``; ``cov_b`` the share of ``{g_z >= eps}`` inside the projected
    attractor.  The density uses ``depth``; the interval union uses
    ``outer_depth`` (default ``depth``).
    """
    z = as_direction(z)
    grid = projected_density(system, z, depth, h)
    if epsilon is None:
        epsilon = default_epsilon(grid)
    outer = project_attractor(system, z, depth if outer_depth is None else outer_depth)
    edges = grid.edges
    cov = np.diff(outer.covered_length(edges))
    heavy = grid.values >= epsilon
    # clipped: bin edges and interval ends round independently
    cov_a = min(1.0, math.fsum(cov[heavy]) / outer.total_length)
    cov_b = min(1.0, math.fsum(cov[heavy]) / (h * np.count_nonzero(heavy)))
    mass = grid.values * h
    cov_b_mass = min(1.0, math.fsum((mass * cov / h)[heavy]) / math.fsum(mass[heavy]))
    return CoverageReport(z, cov_a, cov_b, outer.total_length,
                          inner_length(system, z, inner_depth, inner_h), float(epsilon), cov_b_mass)


@dataclass(frozen=True)
class BoxDimResult:
    slope: float
    counts: tuple[int, ...]
    fit_from: int
    hypothesis_ok: bool


def slice_counts(system: IFSSystem, z, x: float, depth: int) -> list[int]:
    """Number of depth-d cylinder disks meeting the line ``P_z^-1 {x}`` for d = 1..depth."""
    z = as_direction(z)
    c, rad = system.bounding_disk
    offsets = np.zeros(1, dtype=complex)
    counts = []
    for d in range(1, depth + 1):
        # children of f_u are f_u o f_j: offset f_u(0) + lam^(d-1) a_j
        offsets = (offsets[:, None] + system.lam ** (d - 1) * system.a[None, :]).ravel()
        centres = offsets + system.lam**d * c
        offsets = offsets[np.abs(inner(z, centres) - x) <= system.r**d * rad]
        counts.append(len(offsets))
        if not len(offsets):
            break
    return counts


def slice_set_boxdim(system: IFSSystem, z, x: float, depth: int = 12, fit_from: int | None = None) -> BoxDimResult:
    """Box-counting slope of the fibre ``K cap P_z^-1 {x}`` from cylinder-disk counts.

    Fits ``log N(d)`` against ``d * (-log r)`` for ``d >= fit_from`` (default:
    the deeper half of the levels, where disk overestimation has washed out).
    """
    counts = slice_counts(system, z, x, depth)
    if len(counts) < depth or counts[-1] == 0:
        raise LineMissesAttractor(f"the line through x={x} misses the depth-{len(counts)} cylinders")
    if fit_from is None:
        fit_from = max(1, depth // 2)
    d = np.arange(fit_from, depth + 1)
    y = np.log(np.asarray(counts[fit_from - 1:], float))
    xs = d * -math.log(system.r)
    slope = float(np.polyfit(xs, y, 1)[0])
    return BoxDimResult(slope, tuple(counts), fit_from, hausdorff_dimension_set(system) > 1)
