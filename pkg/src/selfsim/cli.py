"""Command line front end.

Every subcommand prints one JSON document on stdout and writes its artifacts
(JSON report plus CSV tables) into ``--out``.  Exit codes: 0 success, 1 usage
error, 2 computation error, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import AcceptanceConfig, run_all
from .exceptions import DensityFloorHit, EmptyWindow, SelfSimError
from .ifs import check_irrational_rotation, check_ssc, closed_form_dims
from .io import (
    ATOM_COLUMNS,
    COVERAGE_COLUMNS,
    DENSITY_COLUMNS,
    INTERVAL_COLUMNS,
    SCHEMA_VERSION,
    SLICE_COLUMNS,
    atom_rows,
    density_rows,
    dumps,
    envelope,
    load_system,
    spectrum_rows_1d,
    sweep_columns,
    sweep_rows,
    write_csv,
    write_json,
)
from .measure import atomic_approx, empirical_Dq, sample_measure
from .projection import (
    direction_from_angle,
    direction_sweep,
    inner,
    lipschitz_violations,
    lq_norm,
    projected_density,
    projected_median,
    sweep_bumps,
)
from .sets import equivalence_check, project_attractor, slice_set_boxdim
from .slices import (
    CodedPoint,
    OrbitDensities,
    dimension_conservation_report,
    sample_coded_points,
    slice_local_dim,
    slice_mass_empirical,
    slice_mass_formula,
)
from .spectral import ft_projection, sobolev_norm, system_decay_fit

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_ACCEPTANCE = 0, 1, 2, 3
THREADS_ENV = "SELFSIM_THREADS"
SAMPLING = {"dims", "slice", "conserve"}
# not part of the embedded config: they do not change any result
NON_CONFIG = {"out", "threads", "func", "command"}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _positive_float(s):
    v = float(s)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def build_parser() -> Parser:
    common = Parser(add_help=False)
    common.add_argument("--system", default="SYS-A", help="SYS-A, SYS-B, a JSON file or inline JSON")
    common.add_argument("--out", default=".", help="directory for report and CSV files")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help=f"worker threads (default ${THREADS_ENV} or 1)")
    common.add_argument("--seed", type=int, default=None, help="random seed (required when sampling)")

    p = Parser(prog="selfsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    s = sub.add_parser("validate", parents=[common], help="system, separation and rotation checks")
    s.add_argument("--max-depth", type=_positive_int, default=6)
    s.add_argument("--denominator-bound", type=_positive_int, default=10**6)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("dims", parents=[common], help="closed-form and empirical dimensions")
    s.add_argument("--q", type=float, default=2.0)
    s.add_argument("--samples", type=_positive_int, default=100_000)
    s.add_argument("--scale-min-power", type=_positive_int, default=8, help="smallest box side r^k")
    s.add_argument("--export-samples", action="store_true", help="also write the samples CSV")
    s.set_defaults(func=cmd_dims)

    s = sub.add_parser("project", parents=[common], help="projected density for one direction")
    s.add_argument("--angle", type=float, default=0.0, help="direction angle in radians")
    s.add_argument("--depth", type=_positive_int, default=12)
    s.add_argument("--h", type=_positive_float, default=0.01)
    s.add_argument("--export-atoms", type=int, default=None, metavar="DEPTH",
                   help="also write the depth-DEPTH atoms CSV")
    s.set_defaults(func=cmd_project)

    s = sub.add_parser("sweep", parents=[common], help="L^q norms and test integrals over directions")
    s.add_argument("--n-directions", type=_positive_int, default=360)
    s.add_argument("--depth", type=_positive_int, default=10)
    s.add_argument("--h", type=_positive_float, default=0.01)
    s.add_argument("--q", type=float, default=2.0)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("spectrum", parents=[common], help="transform tables and decay fit")
    s.add_argument("--angle", type=float, default=0.0)
    s.add_argument("--depth", type=_positive_int, default=10)
    s.add_argument("--n-freq", type=_positive_int, default=512)
    s.add_argument("--t-max", type=_positive_float, default=None, help="default: trusted band edge")
    s.add_argument("--rungs", type=_positive_int, default=10, help="decay ladder 4 * 2^j, j < rungs")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("sobolev", parents=[common], help="Sobolev norms of a projected density")
    s.add_argument("--angle", type=float, default=0.0)
    s.add_argument("--gamma", type=float, action="append", default=None)
    s.add_argument("--depth", type=_positive_int, default=12)
    s.add_argument("--cutoff-power", type=_positive_int, default=8, help="cutoff r^-k")
    s.set_defaults(func=cmd_sobolev)

    s = sub.add_parser("slice", parents=[common], help="slice masses and local dimensions")
    s.add_argument("--angle", type=float, default=0.0)
    s.add_argument("--n-points", type=_positive_int, default=100)
    s.add_argument("--k", type=_positive_int, default=2)
    s.add_argument("--k-max", type=_positive_int, default=10)
    s.add_argument("--delta", type=_positive_float, default=0.02)
    s.add_argument("--depth", type=_positive_int, default=12, help="density depth")
    s.add_argument("--h", type=_positive_float, default=0.01)
    s.add_argument("--atom-depth", type=_positive_int, default=10, help="atoms for the empirical side")
    s.set_defaults(func=cmd_slice)

    s = sub.add_parser("conserve", parents=[common], help="dimension conservation report")
    s.add_argument("--angle", type=float, default=0.0)
    s.add_argument("--n-points", type=_positive_int, default=100)
    s.add_argument("--k-max", type=_positive_int, default=10)
    s.add_argument("--depth", type=_positive_int, default=12)
    s.add_argument("--h", type=_positive_float, default=0.01)
    s.add_argument("--tol", type=_positive_float, default=0.15)
    s.set_defaults(func=cmd_conserve)

    s = sub.add_parser("sets", parents=[common], help="projected attractor, coverage, slice box dimension")
    s.add_argument("--angle", type=float, default=0.0)
    s.add_argument("--depth", type=_positive_int, default=12)
    s.add_argument("--h", type=_positive_float, default=0.01)
    s.add_argument("--x", type=float, action="append", default=None, help="fibre positions (repeatable)")
    s.add_argument("--n-x", type=_positive_int, default=None, help="sample this many positions (needs --seed)")
    s.set_defaults(func=cmd_sets)

    s = sub.add_parser("verify-all", parents=[common], help="run every acceptance criterion")
    s.add_argument("--config", default=None, help="JSON file overriding acceptance settings")
    s.set_defaults(func=cmd_verify_all)
    return p


def resolve_threads(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(THREADS_ENV)
    if env is None or env == "":
        return 1
    try:
        n = int(env)
    except ValueError:
        raise UsageError(f"{THREADS_ENV}={env!r} is not an integer") from None
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be >= 1")
    return n


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in NON_CONFIG}


class Run:
    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.config = {"command": args.command, **_config(args)}
        self.system = load_system(args.system)
        self.config["system_definition"] = self.system.to_dict()
        self.files: list[str] = []

    def csv(self, name, kind, columns, rows):
        write_csv(self.out / name, kind, self.config, columns, rows)
        self.files.append(name)

    def report(self, payload: dict) -> str:
        doc = envelope(self.args.command, self.config, {**payload, "files": self.files + [f"{self.args.command}.json"]})
        return write_json(self.out / f"{self.args.command}.json", doc)


def cmd_validate(run: Run):
    a = run.args
    ssc = check_ssc(run.system, a.max_depth)
    rot = check_irrational_rotation(run.system, a.denominator_bound)
    dims = closed_form_dims(run.system, 2.0, ssc.status)
    return run.report({
        "system": run.system.to_dict(),
        "ssc": {"status": ssc.status, "depth_used": ssc.depth_used, "min_gap": ssc.min_gap},
        "rotation": {"status": rot.status, "numerator": rot.numerator, "denominator": rot.denominator,
                     "denominator_bound": rot.denominator_bound},
        "dims": {"D2_closed": dims.Dq_closed, "dimH_measure": dims.dimH_measure_closed,
                 "dimH_set": dims.dimH_set_closed},
    }), EXIT_OK


def cmd_dims(run: Run):
    a, sys_ = run.args, run.system
    dims = closed_form_dims(sys_, a.q)
    s = sample_measure(sys_, a.samples, seed=a.seed, threads=resolve_threads(a.threads))
    est = empirical_Dq(s, a.q, (sys_.r**a.scale_min_power, sys_.r**2))
    if a.export_samples:
        run.csv("samples.csv", "samples", ATOM_COLUMNS, atom_rows(s.points, np.full(len(s), 1.0 / len(s))))
    return run.report({
        "closed": {"q": a.q, "Dq": dims.Dq_closed, "dimH_measure": dims.dimH_measure_closed,
                   "dimH_set": dims.dimH_set_closed},
        "empirical": {"q": a.q, "value": est.value, "ci": est.ci, "r2": est.r2, "scales": est.scales,
                      "correlation_value": est.correlation_value, "correlation_ci": est.correlation_ci},
    }), EXIT_OK


def cmd_project(run: Run):
    a = run.args
    z = direction_from_angle(a.angle)
    grid = projected_density(run.system, z, a.depth, a.h)
    run.csv("density.csv", "density", DENSITY_COLUMNS, density_rows(grid))
    if a.export_atoms is not None:
        m = atomic_approx(run.system, a.export_atoms)
        run.csv("atoms.csv", "atoms", ATOM_COLUMNS, atom_rows(m.points, m.weights))
    return run.report({"z": z, "mass": grid.mass(), "l2_norm": lq_norm(grid, 2), "linf_norm": lq_norm(grid, math.inf),
                       "x0": grid.x0, "h": grid.h, "n_bins": len(grid.values)}), EXIT_OK


def cmd_sweep(run: Run):
    a = run.args
    rows = direction_sweep(run.system, a.n_directions, a.depth, a.h, a.q, threads=resolve_threads(a.threads))
    bumps = sweep_bumps(run.system)
    run.csv("sweep.csv", "sweep", sweep_columns(len(bumps.centers)), sweep_rows(rows))
    norms = np.array([r.lq_norm for r in rows])
    c, rad = run.system.bounding_disk
    bad = lipschitz_violations(rows, bumps.lipschitz, abs(c) + rad)
    return run.report({"n_directions": len(rows), "max_norm": float(norms.max()), "median_norm": float(np.median(norms)),
                       "max_over_median": float(norms.max() / np.median(norms)),
                       "max_mass_error": float(max(abs(r.mass - 1) for r in rows)),
                       "lipschitz_violations": len(bad), "bump_lipschitz": bumps.lipschitz}), EXIT_OK


def cmd_spectrum(run: Run):
    a, sys_ = run.args, run.system
    z = direction_from_angle(a.angle)
    band = sys_.r ** (-(a.depth - 2))
    t_max = a.t_max if a.t_max is not None else band
    t = np.linspace(0.0, t_max, a.n_freq)
    table = ft_projection(atomic_approx(sys_, a.depth), z, t)
    run.csv("spectrum.csv", "spectrum", ("t", "value_re", "value_im", "modulus"), spectrum_rows_1d(table))
    fit = system_decay_fit(sys_, 4.0 * 2.0 ** np.arange(a.rungs))
    return run.report({"z": z, "trusted_band": band, "t_max": t_max,
                       "decay": {"gamma_hat": fit.gamma_hat, "intercept": fit.intercept, "r2": fit.r2,
                                 "freq_range": fit.freq_range, "annulus_max": fit.annulus_max,
                                 "notes": fit.notes}}), EXIT_OK


def cmd_sobolev(run: Run):
    a, sys_ = run.args, run.system
    z = direction_from_angle(a.angle)
    gammas = a.gamma if a.gamma else [0.0, 0.05, 0.1]
    cutoff = sys_.r ** (-a.cutoff_power)
    ests = [sobolev_norm(sys_, z, g, a.depth, cutoff) for g in gammas]
    return run.report({"z": z, "cutoff": cutoff, "estimates": [
        {"gamma": e.gamma, "norm": e.norm, "tail_flag": e.tail_flag, "tail_share": e.tail_share} for e in ests]}), EXIT_OK


def cmd_slice(run: Run):
    a, sys_ = run.args, run.system
    z = direction_from_angle(a.angle)
    depth = max(a.k, a.k_max) + 2
    dens = OrbitDensities(sys_, z, a.depth, a.h)
    atoms = atomic_approx(sys_, a.atom_depth)
    pts, words = sample_coded_points(sys_, 4 * a.n_points, depth, a.seed)
    rows, rel, hits = [], [], 0
    for w, word in zip(pts, words):
        if len(rows) == a.n_points:
            break
        cp = CodedPoint(complex(w), tuple(word.tolist()), depth)
        try:
            f = slice_mass_formula(sys_, z, cp, a.k, densities=dens, window=a.delta)
            ld = slice_local_dim(sys_, z, cp, a.k_max, densities=dens).slope
        except DensityFloorHit:
            hits += 1
            continue
        try:
            e = slice_mass_empirical(sys_, atoms, z, cp.w, cp.word[:a.k], a.delta)
        except EmptyWindow:
            e = math.nan
        rows.append((a.angle, cp.w.real, cp.w.imag, a.k, f.value, e, ld))
        if e > 0:
            rel.append(abs(f.value - e) / e)
    run.csv("slices.csv", "slices", SLICE_COLUMNS, rows)
    ld = [r[-1] for r in rows]
    return run.report({"z": z, "n_points": len(rows), "floor_hits": hits,
                       "median_relative_discrepancy": float(np.median(rel)) if rel else None,
                       "p90_relative_discrepancy": float(np.percentile(rel, 90)) if rel else None,
                       "median_local_dim": float(np.median(ld)) if ld else None}), EXIT_OK


def cmd_conserve(run: Run):
    a = run.args
    z = direction_from_angle(a.angle)
    rep = dimension_conservation_report(run.system, z, a.n_points, a.k_max, a.depth, a.h, seed=a.seed, tol=a.tol)
    run.csv("conserve.csv", "conserve", ("w_re", "w_im", "local_dim", "deterministic", "density_part", "floor_hit"),
            [(p.w.real, p.w.imag, p.local_dim, p.deterministic, p.density_part, p.floor_hit) for p in rep.points])
    return run.report({"z": z, "dim_measure": rep.dim_measure, "projected_dim": rep.projected_dim,
                       "median_slice_dim": rep.median_slice_dim, "total": rep.total, "tolerance": rep.tolerance,
                       "passed": rep.passed, "hypothesis_ok": rep.hypothesis_ok,
                       "floor_hits": rep.floor_hits}), EXIT_OK


def cmd_sets(run: Run):
    a, sys_ = run.args, run.system
    z = direction_from_angle(a.angle)
    u = project_attractor(sys_, z, a.depth)
    run.csv("intervals.csv", "intervals", INTERVAL_COLUMNS, u.intervals.tolist())
    cov = equivalence_check(sys_, z, a.depth, a.h)
    run.csv("coverage.csv", "coverage", COVERAGE_COLUMNS,
            [(a.angle, cov.cov_a, cov.cov_b, cov.length_outer, cov.length_inner)])
    if a.x:
        xs = list(a.x)
    elif a.n_x:
        if a.seed is None:
            raise UsageError("--n-x samples fibre positions and needs --seed")
        xs = inner(z, sample_measure(sys_, a.n_x, seed=a.seed).points).tolist()
    else:
        xs = [projected_median(sys_, z, seed=a.seed or 0)]
    box = [slice_set_boxdim(sys_, z, x, a.depth) for x in xs]
    return run.report({"z": z, "n_intervals": len(u), "length_outer": cov.length_outer,
                       "length_inner": cov.length_inner, "cov_a": cov.cov_a, "cov_b": cov.cov_b,
                       "cov_b_mass": cov.cov_b_mass, "epsilon": cov.epsilon,
                       "boxdim": [{"x": x, "slope": b.slope, "counts": b.counts, "fit_from": b.fit_from,
                                   "hypothesis_ok": b.hypothesis_ok} for x, b in zip(xs, box)],
                       "median_boxdim": float(np.median([b.slope for b in box]))}), EXIT_OK


def cmd_verify_all(run: Run):
    a = run.args
    overrides = {}
    if a.config:
        overrides = json.loads(Path(a.config).read_text())
        if not isinstance(overrides, dict):
            raise UsageError("--config must hold a JSON object")
    if a.seed is not None:
        overrides["seed"] = a.seed
    overrides["threads"] = resolve_threads(a.threads)
    try:
        cfg = AcceptanceConfig.from_dict(overrides)
    except (TypeError, ValueError) as e:
        raise UsageError(str(e)) from None
    results, text = run_all(cfg, progress=lambda r: print(r.line(), file=sys.stderr, flush=True))
    (run.out / "verify-all.json").write_text(text)
    (run.out / "verify-all.txt").write_text("".join(r.line() + "\n" for r in results))
    return text, EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE


def error_json(kind: str, message: str, code: int) -> str:
    return dumps({"schema_version": SCHEMA_VERSION, "library_version": __version__,
                  "error": {"type": kind, "message": message}, "exit_code": code})


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        resolve_threads(args.threads)
        if args.command in SAMPLING and args.seed is None:
            raise UsageError(f"'{args.command}' samples the measure and needs --seed")
        run = Run(args)
        text, code = args.func(run)
    except UsageError as e:
        sys.stdout.write(error_json("UsageError", str(e), EXIT_USAGE))
        return EXIT_USAGE
    except (SelfSimError, ValueError, OSError, json.JSONDecodeError) as e:
        sys.stdout.write(error_json(type(e).__name__, str(e), EXIT_COMPUTE))
        return EXIT_COMPUTE
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
