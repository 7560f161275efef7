"""Report documents and curve files written by the command-line tools.

Reports are JSON with sorted keys and a fixed ``schema_version``; curves are
CSV with one header line.  Floats are written with 17 significant digits, so
reading a file back reproduces the written values exactly.
"""

from __future__ import annotations

import csv
import json
import math
import os
from datetime import datetime, timezone

import numpy as np

SCHEMA_VERSION = 1


def jsonable(obj):
    """Convert numpy scalars/arrays and tuples to plain JSON values; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(doc):
    return json.dumps(jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(doc))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def timestamp():
    """UTC time in ISO format; ``SOURCE_DATE_EPOCH`` pins it for reproducible builds."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.replace(microsecond=0).isoformat()


def provenance(config_digest):
    from . import __version__

    return {"tool": "bangbang", "version": __version__, "config_sha256": config_digest, "timestamp": timestamp()}


def write_csv(path, header, columns):
    data = np.column_stack([np.asarray(c, float) for c in columns])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in data:
            w.writerow([repr(float(v)) for v in row])


def read_csv(path):
    """``(header, data)`` with ``data`` of shape ``(rows, columns)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body], float).reshape(len(body), len(header))
    return header, data


# --------------------------------------------------------------------------- radial


def sample_radii(R, n, extra=()):
    """``n`` uniform radii on ``[0, R]`` merged with the exact points ``extra``."""
    pts = set(np.linspace(0.0, R, n).tolist())
    pts.update(float(x) for x in extra if 0.0 <= x <= R)
    return np.array(sorted(pts))


def radial_curves(solution, n):
    """Sampled ``psi``, ``u_i`` and ``theta`` curves of a radial solution."""
    design = solution.design
    R = design.radius
    extra = set(solution.psi.poly.breaks) | set(design.edges.tolist())
    for fl in solution.fluxes:
        extra |= set(fl.source.breaks)
    r = sample_radii(R, n, extra)
    labels = [m.label for m in design.materials]
    curves = {
        "psi": (["r", "psi"], [r, solution.psi(r)]),
        "u": (["r"] + [f"u_{i + 1}" for i in range(len(solution.states))], [r] + [s(r) for s in solution.states]),
        "theta": (["r"] + [f"theta_{lab}" for lab in labels], [r] + list(design.theta_at(r).T)),
    }
    return curves


def bands(design):
    labels = [m.label for m in design.materials]
    out = []
    for (a, b), th in zip(zip(design.edges, design.edges[1:]), design.theta):
        out.append({"r_lo": float(a), "r_hi": float(b), "theta": th.tolist(), "material": labels[int(np.argmax(th))]})
    return out


def radial_report(config, solution, files):
    design = solution.design
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "radial",
        "problem": config.document,
        "quantities": config.problem.quantities.tolist(),
        "thresholds": list(solution.alphas),
        "radii": list(solution.radii),
        "bands": bands(design),
        "fat_levels": [lvl.describe() for lvl in design.levels],
        "objective": solution.objective,
        "certificate": solution.certificate.as_dict(),
        "files": files,
        "provenance": provenance(config.digest),
    }


def distribution_table(dist, n, extra=()):
    """Rows ``(alpha, lambda, lambda_left, normalized)`` at the breakpoint levels and ``n`` uniform levels."""
    top = dist.max_value
    levels = set(np.linspace(0.0, top, n).tolist()) | set(dist.breakpoint_levels())
    levels |= {float(a) for a in extra}
    levels |= {c for c, _ in dist.jumps()}
    alpha = np.array(sorted(a for a in levels if a >= 0.0))
    lam = np.array([dist(a) for a in alpha])
    left = np.array([dist.left_limit(a) for a in alpha])
    return alpha, lam, left, lam / dist.total_measure
