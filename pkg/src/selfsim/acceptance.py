"""End-to-end verification suite: one verdict per acceptance criterion.

Every check is deterministic for a given :class:`AcceptanceConfig`; the
rendered report contains no timings so two runs can be compared byte for byte.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable

import numpy as np

from .exceptions import AtomBudgetExceeded, DensityFloorHit
from .ifs import IFSSystem, hausdorff_dimension_measure, hausdorff_dimension_set, lq_dimension_closed
from .io import dumps, envelope, named_system
from .measure import atomic_approx, empirical_Dq, sample_measure
from .projection import (
    direction_sweep,
    inner,
    lipschitz_violations,
    projected_density,
    selfsim_density_residual,
    sweep_bumps,
)
from .sets import equivalence_check, inner_length, project_attractor, slice_set_boxdim
from .slices import (
    CodedPoint,
    OrbitDensities,
    code_points,
    dimension_conservation_report,
    sample_coded_points,
    slice_mass_empirical,
    slice_mass_formula,
)
from .spectral import ft_2d, ft_projection, sobolev_norm


@dataclass(frozen=True)
class AcceptanceConfig:
    seed: int = 0
    threads: int = 1
    # 1
    dq_samples: int = 100_000
    dq_tol: float = 0.10
    # 2
    ft_pairs: int = 100
    ft_depth: int = 10
    ft_tol: float = 1e-12
    # 3
    ss_depth: int = 12
    ss_h: float = 0.01
    ss_tol_a: float = 0.05
    ss_tol_b: float = 0.08
    # 4, 5
    sweep_directions: int = 360
    sweep_depth: int = 10
    sweep_h: float = 0.01
    sweep_soft_ratio: float = 5.0
    mass_tol: float = 1e-6
    lipschitz_slack: float = 1e-12
    # 6
    slice_points: int = 100
    slice_k: int = 2
    slice_delta: float = 0.02
    slice_atom_depth: int = 10
    slice_median_tol: float = 0.10
    slice_p90_tol: float = 0.25
    # 7
    dc_points: int = 100
    dc_directions: int = 8
    dc_k_max: int = 10
    dc_tol: float = 0.15
    # 8
    box_x_values: int = 20
    box_directions: int = 4
    box_depth: int = 12
    box_tol: float = 0.15
    # 9
    length_directions: int = 360
    length_depth: int = 12
    inner_depth: int = 10
    inner_h: float = 1e-3
    inner_ratio: float = 0.5
    # 10
    cov_directions: int = 8
    cov_depth: int = 12
    cov_h: float = 0.01
    cov_a_min: float = 0.95
    cov_b_min: float = 0.99
    # 11
    sobolev_power: int = 8
    sobolev_tol: float = 0.05
    sobolev_gammas: tuple[float, ...] = (0.0, 0.05, 0.1)
    # 12
    shift_max_depth: int = 8
    shift_tol: float = 1e-12
    # 13
    determinism: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "AcceptanceConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown acceptance settings: {sorted(unknown)}")
        vals = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return replace(cls(), **vals)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} C{self.number:02d} {self.title}: {self.summary}"


def _f(x, digits=4) -> str:
    return f"{x:.{digits}g}"


def _systems() -> tuple[IFSSystem, IFSSystem]:
    return named_system("SYS-A"), named_system("SYS-B")


def _circle(n: int) -> list[complex]:
    return [cmath.exp(2j * math.pi * j / n) for j in range(n)]


def _half_circle(n: int) -> list[complex]:
    return [cmath.exp(1j * math.pi * j / n) for j in range(n)]


# -- individual criteria -------------------------------------------------------------------


def c01_dimension(cfg: AcceptanceConfig) -> CriterionResult:
    vals, ok, parts = {}, True, []
    for name, system in zip("AB", _systems()):
        s = sample_measure(system, cfg.dq_samples, seed=cfg.seed + 1, threads=cfg.threads)
        est = empirical_Dq(s, 2.0, (system.r**8, system.r**2))
        target = lq_dimension_closed(system, 2.0)
        good = abs(est.value - target) <= cfg.dq_tol
        ok &= good
        vals[f"SYS-{name}"] = {"empirical": est.value, "ci": est.ci, "closed": target,
                                "correlation": est.correlation_value}
        parts.append(f"SYS-{name} {_f(est.value)} vs {_f(target)}")
    return CriterionResult(1, "closed-form L^q dimension", ok, "; ".join(parts) + f" (tol {cfg.dq_tol})", vals)


def c02_ft_identity(cfg: AcceptanceConfig) -> CriterionResult:
    system = _systems()[0]
    m = atomic_approx(system, cfg.ft_depth)
    rng = np.random.default_rng(cfg.seed + 2)
    zs = np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.ft_pairs))
    ts = rng.uniform(-system.r ** (-(cfg.ft_depth - 2)), system.r ** (-(cfg.ft_depth - 2)), cfg.ft_pairs)
    err = 0.0
    for z, t in zip(zs, ts):
        z = complex(z) / abs(z)
        lhs = ft_projection(m, z, [t]).values[0]
        rhs = ft_2d(m, [t * z]).values[0]
        err = max(err, abs(lhs - rhs))
    return CriterionResult(2, "projection / transform identity", err < cfg.ft_tol,
                           f"max error {_f(err, 3)} over {cfg.ft_pairs} pairs (tol {cfg.ft_tol})", {"max_error": err})


def c03_density_selfsim(cfg: AcceptanceConfig) -> CriterionResult:
    A, B = _systems()
    cases = [("SYS-A", A, 1 + 0j, 1, cfg.ss_tol_a), ("SYS-B", B, cmath.exp(0.7j), 2, cfg.ss_tol_b)]
    vals, ok, parts = {}, True, []
    for name, system, z, k, tol in cases:
        deep = selfsim_density_residual(system, z, k, cfg.ss_depth, cfg.ss_h)
        shallow = selfsim_density_residual(system, z, k, cfg.ss_depth - 2, cfg.ss_h)
        good = deep < tol and deep < shallow
        ok &= good
        vals[name] = {"residual": deep, "residual_shallow": shallow}
        parts.append(f"{name} {_f(deep, 3)} (depth {cfg.ss_depth - 2}: {_f(shallow, 3)}, tol {tol})")
    return CriterionResult(3, "density self-similarity", ok, "; ".join(parts), vals)


def _sweep(cfg: AcceptanceConfig):
    return direction_sweep(_systems()[0], cfg.sweep_directions, cfg.sweep_depth, cfg.sweep_h, 2.0,
                           threads=cfg.threads)


def c04_bounded_norms(cfg: AcceptanceConfig, rows) -> CriterionResult:
    norms = np.array([r.lq_norm for r in rows])
    masses = np.array([r.mass for r in rows])
    finite = bool(np.all(np.isfinite(norms)))
    mass_err = float(np.max(np.abs(masses - 1)))
    ratio = float(norms.max() / np.median(norms)) if finite else math.inf
    soft = ratio < cfg.sweep_soft_ratio
    ok = finite and mass_err <= cfg.mass_tol
    note = "soft bound met" if soft else "soft bound exceeded, investigate"
    return CriterionResult(4, "bounded L^2 norms over directions", ok,
                           f"{len(rows)} directions, max |mass-1| {_f(mass_err, 3)}, max/median {_f(ratio)} ({note})",
                           {"max_over_median": ratio, "soft_ok": soft, "mass_error": mass_err,
                            "max_norm": float(norms.max()), "median_norm": float(np.median(norms))})


def c05_weak_continuity(cfg: AcceptanceConfig, rows) -> CriterionResult:
    system = _systems()[0]
    bumps = sweep_bumps(system)
    try:
        radius = float(np.max(np.abs(atomic_approx(system, cfg.sweep_depth).points)))
    except AtomBudgetExceeded:
        # every atom lies in the bounding disk
        c, rad = system.bounding_disk
        radius = abs(c) + rad
    bad = lipschitz_violations(rows, bumps.lipschitz, radius, cfg.lipschitz_slack)
    return CriterionResult(5, "Lipschitz bound between adjacent directions", not bad,
                           f"{len(bad)} violations over {len(rows)} pairs x {len(bumps.centers)} test functions",
                           {"violations": len(bad)})


def c06_slice_formula(cfg: AcceptanceConfig) -> CriterionResult:
    system = _systems()[0]
    z = 1 + 0j
    atoms = atomic_approx(system, cfg.slice_atom_depth)
    dens = OrbitDensities(system, z, cfg.ss_depth, cfg.ss_h)
    pts, words = sample_coded_points(system, 4 * cfg.slice_points, cfg.ss_depth, cfg.seed + 6)
    rel, hits = [], 0
    for w, word in zip(pts, words):
        if len(rel) == cfg.slice_points:
            break
        cp = CodedPoint(complex(w), tuple(word.tolist()), cfg.ss_depth)
        try:
            f = slice_mass_formula(system, z, cp, cfg.slice_k, densities=dens, window=cfg.slice_delta)
        except DensityFloorHit:
            hits += 1
            continue
        e = slice_mass_empirical(system, atoms, z, cp.w, cp.word[:cfg.slice_k], cfg.slice_delta)
        rel.append(abs(f.value - e) / e)
    med, p90 = float(np.median(rel)), float(np.percentile(rel, 90))
    ok = len(rel) == cfg.slice_points and med < cfg.slice_median_tol and p90 < cfg.slice_p90_tol
    return CriterionResult(6, "slice formula vs empirical strips", ok,
                           f"median {_f(med, 3)}, p90 {_f(p90, 3)} over {len(rel)} points ({hits} floor hits)",
                           {"median": med, "p90": p90, "floor_hits": hits, "n": len(rel)})


def c07_conservation(cfg: AcceptanceConfig) -> CriterionResult:
    vals, ok, parts = {}, True, []
    for name, system in zip("AB", _systems()):
        target = hausdorff_dimension_measure(system) - 1
        meds = []
        for j, z in enumerate(_circle(cfg.dc_directions)):
            rep = dimension_conservation_report(system, z, cfg.dc_points, cfg.dc_k_max, cfg.ss_depth,
                                                cfg.ss_h, seed=cfg.seed + 70 + j, tol=cfg.dc_tol)
            meds.append(rep.median_slice_dim)
        worst = max(abs(m - target) for m in meds)
        ok &= worst <= cfg.dc_tol
        vals[f"SYS-{name}"] = {"target": target, "medians": meds}
        parts.append(f"SYS-{name} medians {_f(min(meds), 3)}..{_f(max(meds), 3)} vs {_f(target)}")
    return CriterionResult(7, "slice dimension over directions", ok, "; ".join(parts) + f" (tol {cfg.dc_tol})", vals)


def c08_slice_boxdim(cfg: AcceptanceConfig) -> CriterionResult:
    system = _systems()[0]
    target = hausdorff_dimension_set(system) - 1
    meds = []
    for j, z in enumerate(_half_circle(cfg.box_directions)):
        s = sample_measure(system, cfg.box_x_values, seed=cfg.seed + 80 + j)
        xs = inner(z, s.points)
        meds.append(float(np.median([slice_set_boxdim(system, z, float(x), cfg.box_depth).slope for x in xs])))
    worst = max(abs(m - target) for m in meds)
    return CriterionResult(8, "slice set box dimension", worst <= cfg.box_tol,
                           f"medians {', '.join(_f(m, 3) for m in meds)} vs {_f(target)} (tol {cfg.box_tol})",
                           {"target": target, "medians": meds})


def c09_projected_length(cfg: AcceptanceConfig) -> CriterionResult:
    system = _systems()[0]
    zs = _circle(cfg.length_directions)
    outer = np.array([project_attractor(system, z, cfg.length_depth).total_length for z in zs])
    inner_l = np.array([inner_length(system, z, cfg.inner_depth, cfg.inner_h) for z in zs])
    lo = float(outer.min())
    ok = lo > 0 and float(inner_l.min()) > cfg.inner_ratio * lo
    return CriterionResult(9, "uniform projected length", ok,
                           f"min outer {_f(lo)}, min inner {_f(float(inner_l.min()))} over {len(zs)} directions",
                           {"min_outer": lo, "min_inner": float(inner_l.min())})


def c10_equivalence(cfg: AcceptanceConfig) -> CriterionResult:
    vals, ok, parts = {}, True, []
    for name, system in zip("AB", _systems()):
        reps = [equivalence_check(system, z, cfg.cov_depth, cfg.cov_h) for z in _circle(cfg.cov_directions)]
        a = min(r.cov_a for r in reps)
        b = min(r.cov_b for r in reps)
        bm = min(r.cov_b_mass for r in reps)
        ok &= a >= cfg.cov_a_min and b >= cfg.cov_b_min
        vals[f"SYS-{name}"] = {"cov_a": [r.cov_a for r in reps], "cov_b": [r.cov_b for r in reps],
                               "cov_b_mass": [r.cov_b_mass for r in reps]}
        parts.append(f"SYS-{name} min cov_a {_f(a)}, min cov_b {_f(b)} (by mass {_f(bm)})")
    return CriterionResult(10, "density support vs projected attractor", ok,
                           "; ".join(parts) + f" (need {cfg.cov_a_min}, {cfg.cov_b_min})", vals)


def c11_sobolev(cfg: AcceptanceConfig) -> CriterionResult:
    system = _systems()[0]
    cutoff = system.r ** (-cfg.sobolev_power)
    h = math.pi / cutoff
    vals, ok, parts = {}, True, []
    for label, z in (("1", 1 + 0j), ("e^0.9i", cmath.exp(0.9j))):
        est = sobolev_norm(system, z, 0.0, cfg.ss_depth, cutoff)
        grid = projected_density(system, z, cfg.ss_depth, h)
        hist = grid.h * math.fsum(grid.values**2)
        rel = abs(est.norm**2 - hist) / hist
        norms = [sobolev_norm(system, z, g, cfg.ss_depth, cutoff).norm for g in cfg.sobolev_gammas]
        mono = all(a <= b for a, b in zip(norms, norms[1:]))
        ok &= rel < cfg.sobolev_tol and mono
        vals[label] = {"fourier": est.norm**2, "histogram": hist, "rel": rel, "norms": norms}
        parts.append(f"z={label} rel {_f(rel, 3)}, monotone {mono}")
    return CriterionResult(11, "Sobolev / Parseval consistency", ok,
                           "; ".join(parts) + f" (tol {cfg.sobolev_tol})", vals)


def c12_shift_invariance(cfg: AcceptanceConfig) -> CriterionResult:
    system = _systems()[0]
    worst_pos = worst_w = 0.0
    coded = True
    for d in range(1, cfg.shift_max_depth + 1):
        deep = atomic_approx(system, d)
        first, _, ok = code_points(system, deep.points, 1)
        coded &= bool(ok.all())
        moved = (deep.points - system.a[first[:, 0]]) / system.lam
        shallow = atomic_approx(system, d - 1)
        # lexicographic order: index = i_1 * n^(d-1) + tail, so rows share the tail
        n = system.n_maps
        expect_first = np.repeat(np.arange(n), n ** (d - 1))
        coded &= bool(np.array_equal(first[:, 0], expect_first))
        pos = moved.reshape(n, -1)
        worst_pos = max(worst_pos, float(np.abs(pos - shallow.points[None, :]).max()))
        pushed = deep.weights.reshape(n, -1).sum(axis=0)
        worst_w = max(worst_w, float(np.abs(pushed - shallow.weights).max()))
    ok = coded and worst_pos <= cfg.shift_tol and worst_w <= cfg.shift_tol
    return CriterionResult(12, "shift preserves the atomic measures", ok,
                           f"depth <= {cfg.shift_max_depth}: position error {_f(worst_pos, 3)}, "
                           f"weight error {_f(worst_w, 3)}, coding {'ok' if coded else 'failed'}",
                           {"position_error": worst_pos, "weight_error": worst_w})


# -- runner --------------------------------------------------------------------


def run_criteria(cfg: AcceptanceConfig, progress: Callable[[CriterionResult], None] | None = None
                 ) -> list[CriterionResult]:
    out: list[CriterionResult] = []

    def add(res):
        out.append(res)
        if progress:
            progress(res)

    add(c01_dimension(cfg))
    add(c02_ft_identity(cfg))
    add(c03_density_selfsim(cfg))
    rows = _sweep(cfg)
    add(c04_bounded_norms(cfg, rows))
    add(c05_weak_continuity(cfg, rows))
    add(c06_slice_formula(cfg))
    add(c07_conservation(cfg))
    add(c08_slice_boxdim(cfg))
    add(c09_projected_length(cfg))
    add(c10_equivalence(cfg))
    add(c11_sobolev(cfg))
    add(c12_shift_invariance(cfg))
    return out


def render(cfg: AcceptanceConfig, results: list[CriterionResult]) -> str:
    doc = envelope("verify-all", cfg.to_dict(), {
        "criteria": [{"number": r.number, "title": r.title, "passed": r.passed, "summary": r.summary,
                      "values": r.values} for r in results],
        "passed": all(r.passed for r in results),
    })
    return dumps(doc)


def run_all(cfg: AcceptanceConfig | None = None,
            progress: Callable[[CriterionResult], None] | None = None) -> tuple[list[CriterionResult], str]:
    """All criteria; criterion 13 reruns 1-12 and compares the rendered reports byte for byte."""
    cfg = cfg or AcceptanceConfig()
    results = run_criteria(cfg, progress)
    text = render(cfg, results)
    if cfg.determinism:
        again = render(cfg, run_criteria(cfg))
        same = again == text
        res = CriterionResult(13, "determinism", same,
                              "rerun report byte-identical" if same else "rerun report differs",
                              {"bytes": len(text.encode())})
        results = results + [res]
        if progress:
            progress(res)
        text = render(cfg, results)
    return results, text
