"""System files, named test systems and deterministic JSON / CSV emission.

System file schema (JSON)::

    {"lambda_re": 0.189, "lambda_im": 0.294,
     "translations": [[1, 1], [1, -1], [-1, 1], [-1, -1]],
     "probs": [0.25, 0.25, 0.25, 0.25]}

``"r"`` and ``"angle"`` may replace ``lambda_re`` / ``lambda_im``; ``probs``
defaults to uniform.  CSV files start with one ``#``-prefixed JSON line holding
``schema_version``, the library version and the run config.
"""

from __future__ import annotations

import cmath
import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .ifs import IFSSystem, validate_system

SCHEMA_VERSION = "1.0"

_CORNERS = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]

NAMED_SYSTEMS = {
    "SYS-A": {"r": 0.35, "angle": 1.0, "translations": _CORNERS, "probs": [0.25] * 4},
    "SYS-B": {"r": 0.35, "angle": 1.0, "translations": _CORNERS, "probs": [0.4, 0.3, 0.2, 0.1]},
}


def system_from_dict(d: dict) -> IFSSystem:
    if "translations" not in d:
        raise ValueError("system definition needs 'translations'")
    if "lambda_re" in d or "lambda_im" in d:
        lam = complex(float(d.get("lambda_re", 0.0)), float(d.get("lambda_im", 0.0)))
    elif "r" in d:
        lam = cmath.rect(float(d["r"]), float(d.get("angle", 0.0)))
    else:
        raise ValueError("system definition needs lambda_re/lambda_im or r/angle")
    trans = []
    for t in d["translations"]:
        if isinstance(t, (list, tuple)) and len(t) == 2:
            trans.append(complex(float(t[0]), float(t[1])))
        else:
            raise ValueError(f"translation {t!r} is not a [re, im] pair")
    probs = d.get("probs")
    if probs is None:
        probs = [1.0 / len(trans)] * len(trans)
    return validate_system(lam, trans, probs)


def named_system(name: str) -> IFSSystem:
    key = name.upper()
    if key not in NAMED_SYSTEMS:
        raise ValueError(f"unknown system {name!r}; choose from {sorted(NAMED_SYSTEMS)}")
    return system_from_dict(NAMED_SYSTEMS[key])


def load_system(source: str) -> IFSSystem:
    """A named system (``SYS-A``), inline JSON, or a path to a JSON file."""
    if source.upper() in NAMED_SYSTEMS:
        return named_system(source)
    text = source if source.lstrip().startswith("{") else Path(source).read_text()
    return system_from_dict(json.loads(text))


# -- serialisation --------------------------------------------------------------


def jsonable(obj):
    """Plain JSON types; complex numbers become ``[re, im]``, non-finite floats strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(float(obj.real)), jsonable(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def envelope(kind: str, config: dict, payload: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "library_version": __version__,
        "config": jsonable(config),
        **jsonable(payload),
    }


def dumps(doc: dict) -> str:
    return json.dumps(jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Path | None, doc: dict) -> str:
    text = dumps(doc)
    if path is not None:
        Path(path).write_text(text)
    return text


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(kind: str, config: dict, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    meta = {"schema_version": SCHEMA_VERSION, "kind": kind, "library_version": __version__,
            "config": jsonable(config)}
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True, allow_nan=False) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: Path, kind: str, config: dict, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    text = csv_text(kind, config, columns, rows)
    Path(path).write_text(text)
    return text


def read_csv(path: Path) -> tuple[dict, list[str], list[list[str]]]:
    """Inverse of :func:`write_csv`: ``(meta, columns, rows as strings)``."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError(f"{path} has no metadata line")
    meta = json.loads(lines[0][2:])
    rows = list(csv.reader(lines[1:]))
    return meta, rows[0], rows[1:]


# -- table builders ---------------------------------------------------------------

ATOM_COLUMNS = ("re", "im", "weight")
DENSITY_COLUMNS = ("x", "g")
INTERVAL_COLUMNS = ("lo", "hi")
COVERAGE_COLUMNS = ("z_angle", "cov_a", "cov_b", "length_outer", "length_inner")
SLICE_COLUMNS = ("z_angle", "w_re", "w_im", "k", "mass_formula", "mass_empirical", "local_dim")


def atom_rows(points, weights):
    return zip(np.real(points).tolist(), np.imag(points).tolist(), np.asarray(weights).tolist())


def density_rows(grid):
    return zip(grid.centers.tolist(), grid.values.tolist())


def sweep_columns(n_test: int) -> tuple[str, ...]:
    return ("z_angle", "lq_norm") + tuple(f"test_integral_{j}" for j in range(n_test))


def sweep_rows(rows):
    return ([r.angle, r.lq_norm, *r.test_integrals] for r in rows)


def spectrum_rows_2d(table):
    f, v = table.frequencies, table.values
    return zip(f.real.tolist(), f.imag.tolist(), v.real.tolist(), v.imag.tolist(), np.abs(v).tolist())


def spectrum_rows_1d(table):
    f, v = table.frequencies, table.values
    return zip(np.real(f).tolist(), v.real.tolist(), v.imag.tolist(), np.abs(v).tolist())
