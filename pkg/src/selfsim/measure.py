"""Finite approximations of the self-similar measure and L^q dimension estimates."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree

from .exceptions import (
    AtomBudgetExceeded,
    DegenerateScales,
    NoZeroTranslation,
    QOutOfRange,
    TooFewPoints,
)
from .ifs import (
    DEFAULT_ATOM_BUDGET,
    IFSSystem,
    cylinder_offsets,
    cylinder_weights,
    validate_system,
)

SAMPLE_CHUNK = 1 << 16


@dataclass(frozen=True)
class AtomicMeasure2D:
    """Weighted point masses in the plane (points stored as complex numbers)."""

    points: np.ndarray
    weights: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.points.shape != self.weights.shape:
            raise ValueError("points and weights must have the same length")

    def __len__(self):
        return len(self.points)

    def total_mass(self) -> float:
        return math.fsum(self.weights)


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    seed: int
    word_length: int
    words: np.ndarray = field(repr=False, compare=False, default=None)

    def __len__(self):
        return len(self.points)

    def as_measure(self) -> AtomicMeasure2D:
        n = len(self.points)
        return AtomicMeasure2D(self.points, np.full(n, 1.0 / n), {"samples": n, "seed": self.seed})


def atomic_approx(system: IFSSystem, depth: int, atom_budget: int = DEFAULT_ATOM_BUDGET) -> AtomicMeasure2D:
    """Atoms ``f_u(b)`` with weights ``p_u`` over all words ``u`` of length ``depth``.

    ``b`` is the barycenter of the measure.  Atoms come in lexicographic word order.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    n_atoms = system.n_maps**depth
    if n_atoms > atom_budget:
        raise AtomBudgetExceeded(f"{n_atoms} atoms exceed the budget of {atom_budget}")
    pts = cylinder_offsets(system, depth) + system.lam**depth * system.barycenter
    return AtomicMeasure2D(pts, cylinder_weights(system, depth), {"depth": depth, "base_point": "barycenter"})


def default_word_length(system: IFSSystem, resolution: float = 1e-9) -> int:
    """Smallest ``L`` with ``r**L < resolution``."""
    return max(1, math.floor(math.log(resolution) / math.log(system.r)) + 1)


def _sample_chunk(system: IFSSystem, n: int, word_length: int, seq: np.random.SeedSequence):
    rng = np.random.default_rng(seq)
    w = rng.choice(system.n_maps, size=(n, word_length), p=system.p).astype(np.uint8)
    pts = np.full(n, system.barycenter, dtype=complex)
    a = system.a
    for j in range(word_length - 1, -1, -1):
        pts = a[w[:, j]] + system.lam * pts
    return pts, w


def sample_measure(system: IFSSystem, n: int, word_length: int | None = None, seed: int = 0,
                   threads: int = 1) -> SampleSet:
    """Draw ``n`` points ``f_{i_1...i_L}(b)`` with i.i.d. symbols ``i_j ~ p``.

    The stream is split into fixed-size chunks, each seeded from a spawned
    child of ``seed``, so the result does not depend on ``threads``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if word_length is None:
        word_length = default_word_length(system)
    if word_length < 1:
        raise ValueError("word_length must be >= 1")
    sizes = [min(SAMPLE_CHUNK, n - s) for s in range(0, n, SAMPLE_CHUNK)]
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seqs))
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda job: _sample_chunk(system, job[0], word_length, job[1]), jobs))
    else:
        parts = [_sample_chunk(system, m, word_length, s) for m, s in jobs]
    pts = np.concatenate([p for p, _ in parts])
    w = np.concatenate([w for _, w in parts])
    return SampleSet(pts, int(seed), int(word_length), w)


# -- convolution split -----------------------------------------------------------


def conjugate_to_zero(system: IFSSystem, index: int = 0) -> tuple[IFSSystem, complex]:
    """Conjugate by ``h(w) = w + beta`` so that translation ``index`` becomes 0.

    Returns the new system and ``beta``; the new measure is the old one shifted by ``beta``.
    """
    beta = -system.translations[index] / (1 - system.lam)
    shifted = [t + beta * (1 - system.lam) for t in system.translations]
    shifted[index] = 0j
    return validate_system(system.lam, shifted, system.probs), beta


def convolution_split(system: IFSSystem, k: int, auto_conjugate: bool = True):
    """Split the measure as ``mu * nu_{lam^k}``.

    ``mu`` is generated by ``g_u(w) = lam^k w + sum_{j=1}^{k-1} a_{u_j} lam^j``
    over words ``u`` of length ``k - 1`` with weights ``p_u``; the second factor
    is the measure of ``{lam^k w + a_i}`` with the same ``p``.

    Returns ``(mu_system, nuk_system, beta)`` where ``beta`` is the shift applied
    by conjugation (0 when a zero translation already exists).
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    beta = 0j
    if not any(t == 0 for t in system.translations):
        if not auto_conjugate:
            raise NoZeroTranslation("no translation equals 0 and auto-conjugation is off")
        system, beta = conjugate_to_zero(system)
    lam = system.lam
    # sum_{j=1}^{k-1} a_{u_j} lam^j = lam * f_u(0) for the word u of length k-1
    offsets = lam * cylinder_offsets(system, k - 1)
    weights = cylinder_weights(system, k - 1)
    mu = validate_system(lam**k, offsets, weights / math.fsum(weights))
    nuk = validate_system(lam**k, system.translations, system.probs)
    return mu, nuk, beta


def convolve_atoms(m1: AtomicMeasure2D, m2: AtomicMeasure2D) -> AtomicMeasure2D:
    pts = (m1.points[:, None] + m2.points[None, :]).ravel()
    wts = (m1.weights[:, None] * m2.weights[None, :]).ravel()
    return AtomicMeasure2D(pts, wts, {"convolution": True})


# -- L^q dimension ---------------------------------------------------------------


@dataclass(frozen=True)
class DqEstimate:
    q: float
    value: float
    ci: float
    scales: tuple[float, ...]
    log_moments: tuple[float, ...]
    r2: float
    correlation_value: float | None = None
    correlation_ci: float | None = None

    @property
    def agrees(self) -> bool | None:
        if self.correlation_value is None:
            return None
        return abs(self.value - self.correlation_value) <= self.ci + self.correlation_ci


def _as_points_weights(data, weights=None):
    if isinstance(data, AtomicMeasure2D):
        return data.points, data.weights, False
    if isinstance(data, SampleSet):
        return data.points, None, True
    pts = np.asarray(data)
    if pts.ndim == 2 and pts.shape[1] == 2:
        pts = pts[:, 0] + 1j * pts[:, 1]
    pts = np.asarray(pts, dtype=complex)
    if weights is None:
        return pts, None, True
    return pts, np.asarray(weights, dtype=float), False


def scale_ladder(scale_range: tuple[float, float], n_scales: int | None = None) -> np.ndarray:
    lo, hi = map(float, scale_range)
    if not (0 < lo < hi and math.isfinite(hi)):
        raise DegenerateScales(f"need 0 < delta_min < delta_max, got {scale_range}")
    if n_scales is None:
        # ratio-2 ladder from delta_max down
        n_scales = int(math.floor(math.log2(hi / lo))) + 1
    if n_scales < 2:
        raise DegenerateScales("need at least two scales")
    return np.geomspace(lo, hi, n_scales)


def box_moment(points: np.ndarray, weights: np.ndarray | None, delta: float, q: float,
               anchor: complex) -> float:
    """``sum_boxes mass(box)^q`` on the half-open grid of side ``delta`` anchored at ``anchor``.

    For unweighted samples with ``q == 2`` the unbiased pair-count form
    ``sum n(n-1) / (N(N-1))`` is used.
    """
    ix = np.floor((points.real - anchor.real) / delta).astype(np.int64)
    iy = np.floor((points.imag - anchor.imag) / delta).astype(np.int64)
    key = ix * (1 << 31) + iy
    uniq, inv = np.unique(key, return_inverse=True)
    if weights is None:
        n = len(points)
        counts = np.bincount(inv, minlength=len(uniq)).astype(float)
        if q == 2 and n > 1:
            return float(np.sum(counts * (counts - 1)) / (n * (n - 1)))
        return float(np.sum((counts / n) ** q))
    mass = np.bincount(inv, weights=weights, minlength=len(uniq))
    return float(np.sum(mass**q))


def correlation_sum(points: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """Fraction of ordered distinct pairs within distance ``delta``."""
    n = len(points)
    xy = np.column_stack([points.real, points.imag])
    tree = cKDTree(xy)
    counts = tree.count_neighbors(tree, np.asarray(deltas, dtype=float)).astype(float)
    return (counts - n) / (n * (n - 1))


def _fit(log_d, log_s, q):
    fit = stats.linregress(log_d, log_s)
    t = stats.t.ppf(0.975, max(len(log_d) - 2, 1))
    return fit.slope / (q - 1), t * fit.stderr / (q - 1), fit.rvalue**2


def empirical_Dq(data, q: float = 2.0, scale_range: tuple[float, float] = (1e-3, 1e-1),
                 n_scales: int | None = None, weights=None, anchor: complex | None = None,
                 with_correlation: bool = True) -> DqEstimate:
    """Slope estimate of the lower L^q dimension from box moment sums.

    ``data`` is an :class:`AtomicMeasure2D`, a :class:`SampleSet`, or points
    (complex or ``(n, 2)``) with optional ``weights``.  For ``q == 2`` on
    unweighted samples a pairwise correlation-sum estimate is also returned.
    """
    if not q > 1:
        raise QOutOfRange(f"q must exceed 1, got {q}")
    pts, wts, unweighted = _as_points_weights(data, weights)
    if len(pts) < 1 or (unweighted and len(pts) < 2 and q == 2):
        raise TooFewPoints("need at least two sample points")
    deltas = scale_ladder(scale_range, n_scales)
    if anchor is None:
        anchor = complex(pts.real.min(), pts.imag.min())
    moments = np.array([box_moment(pts, wts, d, q, anchor) for d in deltas])
    if np.any(moments <= 0):
        raise TooFewPoints("empty moment sum at the finest scale; add points or coarsen scales")
    log_d, log_s = np.log(deltas), np.log(moments)
    value, ci, r2 = _fit(log_d, log_s, q)
    corr_value = corr_ci = None
    if with_correlation and q == 2 and unweighted:
        c = correlation_sum(pts, deltas)
        if np.all(c > 0):
            corr_value, corr_ci, _ = _fit(log_d, np.log(c), 2.0)
    return DqEstimate(float(q), float(value), float(ci), tuple(deltas.tolist()), tuple(log_s.tolist()),
                      float(r2), corr_value, corr_ci)
