"""Homogeneous planar IFS with rotation: validation, cylinders and closed forms.

A system is the family ``f_i(w) = lam * w + a_i`` on the complex plane together
with a probability vector ``p``.  Complex numbers stand in for points of R^2,
with ``<z, w> = Re(z * conj(w))``.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import (
    BadProbabilityVector,
    DegenerateTranslations,
    IndexOutOfRange,
    ModulusOutOfRange,
    QOutOfRange,
)

ALGEBRAIC_TOL = 1e-12
DEFAULT_ATOM_BUDGET = 2_000_000


@dataclass(frozen=True)
class IFSSystem:
    """Immutable homogeneous IFS ``{lam * w + a_i}`` with weights ``p``."""

    lam: complex
    translations: tuple[complex, ...]
    probs: tuple[float, ...]

    @property
    def r(self) -> float:
        return abs(self.lam)

    @property
    def alpha(self) -> complex:
        return self.lam / abs(self.lam)

    @property
    def n_maps(self) -> int:
        return len(self.translations)

    @cached_property
    def a(self) -> np.ndarray:
        arr = np.array(self.translations, dtype=complex)
        arr.setflags(write=False)
        return arr

    @cached_property
    def p(self) -> np.ndarray:
        arr = np.array(self.probs, dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def barycenter(self) -> complex:
        """Mean of the self-similar measure, ``sum(p_i a_i) / (1 - lam)``."""
        return complex(np.dot(self.p, self.a) / (1 - self.lam))

    @cached_property
    def bounding_disk(self) -> tuple[complex, float]:
        """Disk ``B(c, R)`` mapped into itself by every ``f_i``.

        With ``c' `` the centre of the smallest circle enclosing the
        translations, ``c = c' / (1 - lam)`` and ``R = max|a_i - c'| / (1 - r)``.
        """
        centre, rad = smallest_enclosing_circle(self.a)
        return complex(centre / (1 - self.lam)), rad / (1 - self.r)

    def with_probs(self, probs: Sequence[float]) -> "IFSSystem":
        return validate_system(self.lam, self.translations, probs)

    def to_dict(self) -> dict:
        return {
            "lambda_re": self.lam.real,
            "lambda_im": self.lam.imag,
            "translations": [[t.real, t.imag] for t in self.translations],
            "probs": list(self.probs),
        }


def validate_system(lam, translations, probs, tol: float = ALGEBRAIC_TOL) -> IFSSystem:
    """Check raw parameters and return a normalised :class:`IFSSystem`.

    Raises
    ------
    ModulusOutOfRange
        ``|lam|`` is not in the open interval (0, 1).
    BadProbabilityVector
        An entry is not positive, the sum is not 1, or lengths differ.
    DegenerateTranslations
        Fewer than two maps or all translations equal.
    """
    lam = complex(lam)
    if not (cmath.isfinite(lam) and 0 < abs(lam) < 1):
        raise ModulusOutOfRange(f"|lambda| = {abs(lam)!r} is not in (0, 1)")
    a = tuple(complex(t) for t in translations)
    if not all(cmath.isfinite(t) for t in a):
        raise DegenerateTranslations("translations must be finite")
    if len(a) < 2:
        raise DegenerateTranslations("need at least two maps")
    if all(t == a[0] for t in a):
        raise DegenerateTranslations("all translations are equal")
    p = tuple(float(x) for x in probs)
    if len(p) != len(a):
        raise BadProbabilityVector(f"{len(p)} probabilities for {len(a)} maps")
    if any(not math.isfinite(x) or x <= 0 for x in p):
        raise BadProbabilityVector(f"probabilities must be positive: {p}")
    if abs(math.fsum(p) - 1.0) > tol:
        raise BadProbabilityVector(f"probabilities sum to {math.fsum(p)!r}, not 1")
    return IFSSystem(lam=lam, translations=a, probs=p)


def system_from_polar(r: float, angle: float, translations, probs) -> IFSSystem:
    return validate_system(cmath.rect(r, angle), translations, probs)


# -- cylinders ---------------------------------------------------------------


@dataclass(frozen=True)
class CylinderMap:
    """The composition ``f_word = f_{i_1} o ... o f_{i_k}`` and its weight."""

    scale: complex
    offset: complex
    weight: float
    word: tuple[int, ...] = field(default=())

    def __call__(self, w):
        return self.scale * w + self.offset

    def inverse(self, w):
        return (w - self.offset) / self.scale


def _check_word(system: IFSSystem, word: Sequence[int]) -> tuple[int, ...]:
    word = tuple(int(i) for i in word)
    bad = [i for i in word if not 0 <= i < system.n_maps]
    if bad:
        raise IndexOutOfRange(f"symbols {bad} outside 0..{system.n_maps - 1}")
    return word


def cylinder_map(system: IFSSystem, word: Sequence[int]) -> CylinderMap:
    word = _check_word(system, word)
    scale, offset, weight = 1 + 0j, 0j, 1.0
    # offset = sum_j lam^(j-1) a_{i_j}, accumulated left to right
    for i in word:
        offset += scale * system.translations[i]
        scale *= system.lam
        weight *= system.probs[i]
    return CylinderMap(scale=scale, offset=offset, weight=weight, word=word)


def cylinder_offsets(system: IFSSystem, depth: int) -> np.ndarray:
    """``f_u(0)`` for every word ``u`` of length ``depth`` in lexicographic order."""
    off = np.zeros(1, dtype=complex)
    for _ in range(depth):
        off = (system.a[:, None] + system.lam * off[None, :]).ravel()
    return off


def cylinder_weights(system: IFSSystem, depth: int) -> np.ndarray:
    w = np.ones(1)
    for _ in range(depth):
        w = (system.p[:, None] * w[None, :]).ravel()
    return w


def words(n_maps: int, depth: int) -> np.ndarray:
    """All words of a given length as rows, same order as :func:`cylinder_offsets`."""
    if depth == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(n_maps), repeat=depth)), dtype=np.int64)


def word_index(word: Sequence[int], n_maps: int) -> int:
    idx = 0
    for i in word:
        idx = idx * n_maps + int(i)
    return idx


# -- geometry ----------------------------------------------------------------


def smallest_enclosing_circle(points) -> tuple[complex, float]:
    """Minimum enclosing circle of a small planar point set.

    Brute force over circles through two or three points; exact for the
    handful of translations an IFS carries.
    """
    pts = np.unique(np.asarray(points, dtype=complex))
    if len(pts) == 1:
        return complex(pts[0]), 0.0
    best_c, best_r = None, math.inf

    def consider(c, rad):
        nonlocal best_c, best_r
        if rad < best_r and np.all(np.abs(pts - c) <= rad * (1 + 1e-12) + 1e-15):
            best_c, best_r = c, rad

    for u, v in itertools.combinations(pts, 2):
        c = (u + v) / 2
        consider(c, abs(u - c))
    for u, v, w in itertools.combinations(pts, 3):
        c = _circumcentre(u, v, w)
        if c is not None:
            consider(c, abs(u - c))
    return complex(best_c), float(best_r)


def _circumcentre(u: complex, v: complex, w: complex):
    b, c = v - u, w - u
    d = 2 * (b.real * c.imag - b.imag * c.real)
    if d == 0:
        return None
    bb, cc = abs(b) ** 2, abs(c) ** 2
    x = (c.imag * bb - b.imag * cc) / d
    y = (b.real * cc - c.real * bb) / d
    return u + complex(x, y)


# -- strong separation ---------------------------------------------------------


@dataclass(frozen=True)
class SSCVerdict:
    status: str  # "Proven" | "Refuted" | "Unknown"
    depth_used: int
    min_gap: float

    @property
    def proven(self) -> bool:
        return self.status == "Proven"


def disk_min_gap(system: IFSSystem, depth: int) -> float:
    """Smallest gap between distinct depth-``depth`` cylinder disks.

    Negative when two disks overlap.  Depth 0 has a single disk; returns inf.
    """
    if depth == 0:
        return math.inf
    c, rad = system.bounding_disk
    centres = cylinder_offsets(system, depth) + system.lam**depth * c
    pts = np.column_stack([centres.real, centres.imag])
    dist, _ = cKDTree(pts).query(pts, k=2)
    return float(dist[:, 1].min() - 2 * system.r**depth * rad)


def check_ssc(system: IFSSystem, max_depth: int = 6, atom_budget: int = DEFAULT_ATOM_BUDGET) -> SSCVerdict:
    """Hierarchical disk test for the strong separation condition.

    Proven at depth d when all depth-d cylinder disks are pairwise disjoint;
    that covers each first-level piece of the attractor by disks which miss
    every other piece.  Refuted is a sampled witness: at every tested depth some
    atoms with different first symbols sit inside each other's disks.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    c, rad = system.bounding_disk
    b = system.barycenter
    witnessed = True
    gap = -math.inf
    depth = 0
    for depth in range(1, max_depth + 1):
        if system.n_maps**depth > atom_budget:
            depth -= 1
            break
        gap = disk_min_gap(system, depth)
        if gap > 0:
            return SSCVerdict("Proven", depth, gap)
        witnessed = witnessed and _overlap_witness(system, depth, c, rad, b)
    status = "Refuted" if witnessed and depth == max_depth else "Unknown"
    return SSCVerdict(status, depth, gap)


def _overlap_witness(system, depth, c, rad, b) -> bool:
    off = cylinder_offsets(system, depth)
    scale = system.lam**depth
    atoms = off + scale * b
    centres = off + scale * c
    first = np.repeat(np.arange(system.n_maps), system.n_maps ** (depth - 1))
    rho = system.r**depth * rad
    tree = cKDTree(np.column_stack([atoms.real, atoms.imag]))
    for i, j in tree.query_pairs(rho):
        if first[i] != first[j] and abs(atoms[i] - centres[j]) <= rho and abs(atoms[j] - centres[i]) <= rho:
            return True
    return False


# -- closed-form dimensions ------------------------------------------------------


@dataclass(frozen=True)
class DimReport:
    q: float
    Dq_closed: float
    dimH_measure_closed: float
    dimH_set_closed: float
    ssc_status: str = "Unchecked"


def lq_dimension_closed(system: IFSSystem, q: float) -> float:
    if not q > 1:
        raise QOutOfRange(f"q must exceed 1, got {q}")
    return math.log(float(np.sum(system.p**q))) / ((q - 1) * math.log(system.r))


def hausdorff_dimension_measure(system: IFSSystem) -> float:
    return float(np.sum(system.p * np.log(system.p))) / math.log(system.r)


def hausdorff_dimension_set(system: IFSSystem) -> float:
    return math.log(system.n_maps) / -math.log(system.r)


def closed_form_dims(system: IFSSystem, q: float, ssc_status: str = "Unchecked") -> DimReport:
    """Closed-form L^q, measure and set dimensions, valid under SSC."""
    return DimReport(
        q=float(q),
        Dq_closed=lq_dimension_closed(system, q),
        dimH_measure_closed=hausdorff_dimension_measure(system),
        dimH_set_closed=hausdorff_dimension_set(system),
        ssc_status=ssc_status,
    )


# -- rotation -----------------------------------------------------------------


@dataclass(frozen=True)
class RotationCheck:
    status: str  # "PlausiblyIrrational" | "RationalMultiple"
    numerator: int | None = None
    denominator: int | None = None
    denominator_bound: int = 0


def continued_fraction_convergents(x: float, max_denominator: int):
    """Yield convergents ``(p, q)`` of ``x`` with ``q <= max_denominator``."""
    p0, q0, p1, q1 = 0, 1, 1, 0
    rest = x
    for _ in range(64):
        a = math.floor(rest)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > max_denominator:
            return
        yield p1, q1
        frac = rest - a
        if frac < 1e-15:
            return
        rest = 1 / frac


def check_irrational_rotation(system_or_angle, denominator_bound: int = 10**6, tol: float = ALGEBRAIC_TOL) -> RotationCheck:
    """Heuristic test of ``arg(lam) / pi`` against rationals of bounded denominator.

    A convergent ``p/q`` counts as a match when ``|arg(lam) - pi p / q| <= tol`` (radians).
    """
    if denominator_bound < 1:
        raise ValueError("denominator_bound must be >= 1")
    if isinstance(system_or_angle, IFSSystem):
        theta = cmath.phase(system_or_angle.lam)
    else:
        theta = float(system_or_angle)
    x = theta / math.pi
    for num, den in continued_fraction_convergents(x, denominator_bound):
        if abs(theta - math.pi * num / den) <= tol:
            return RotationCheck("RationalMultiple", num, den, denominator_bound)
    return RotationCheck("PlausiblyIrrational", denominator_bound=denominator_bound)
