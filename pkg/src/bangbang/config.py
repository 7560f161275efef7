"""Problem configuration documents: schema, validation and conversion to a :class:`ProblemSpec`.

A configuration is a JSON object::

    {
      "domain": {"kind": "ball", "dimension": 2, "radius": 1.0},
      "materials": [{"label": "M1", "lambda_min": 1, "lambda_max": 1, "fraction": 0.4}, ...],
      "constraint_mode": "exact",
      "loads": [{"weight": 1, "source": {"pieces": [{"r_lo": 0, "r_hi": 0.5, "coeffs": [1]},
                                                    {"r_lo": 0.5, "r_hi": 1, "coeffs": [0]}]}}],
      "solver": {"h": 0.0078125, "damping": 0.5, "tol_gap": 0.001, "sample_count": 2048}
    }

Piece coefficients are ascending in powers of ``r`` starting at ``min_power``
(default 0), so ``{"coeffs": [-1], "min_power": -1}`` is ``-1/r``.  Grid loads
may instead name a field file: ``{"source": {"file": "f.csv"}}`` (CSV with an
``x,y,value`` header, or the binary layout of :func:`bangbang.grid.write_field_binary`
when the name ends in ``.bin``); relative paths are resolved against the
configuration file's directory.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from ._validation import ConstraintError
from .core import Ball, ConstraintMode, LoadCase, Material, ProblemSpec, Rectangle, VolumeConstraint
from .piecewise import PiecewisePoly

FRACTION_TOL = 1e-9

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_INTERVAL = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}

_PIECE = {
    "type": "object",
    "required": ["r_lo", "r_hi", "coeffs"],
    "additionalProperties": False,
    "properties": {
        "r_lo": {"type": "number", "minimum": 0},
        "r_hi": _POSITIVE,
        "coeffs": {"type": "array", "items": _NUMBER, "minItems": 1, "maxItems": 17},
        "min_power": {"type": "integer", "minimum": -16, "maximum": 16},
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["domain", "materials", "loads"],
    "additionalProperties": False,
    "properties": {
        "domain": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["ball", "rectangle", "disk_in_rectangle"]},
                "dimension": {"type": "integer", "minimum": 1, "maximum": 16},
                "radius": _POSITIVE,
                "extents": {"type": "array", "items": _INTERVAL, "minItems": 2, "maxItems": 2},
                "disk": {
                    "type": "object",
                    "required": ["radius"],
                    "additionalProperties": False,
                    "properties": {"center": _INTERVAL, "radius": _POSITIVE},
                },
            },
            "additionalProperties": False,
            "allOf": [
                {
                    "if": {"properties": {"kind": {"const": "ball"}}},
                    "then": {"required": ["radius"]},
                },
                {
                    "if": {"properties": {"kind": {"const": "rectangle"}}},
                    "then": {"required": ["extents"]},
                },
                {
                    "if": {"properties": {"kind": {"const": "disk_in_rectangle"}}},
                    "then": {"required": ["extents", "disk"]},
                },
            ],
        },
        "materials": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["lambda_min", "lambda_max"],
                "additionalProperties": False,
                "properties": {
                    "label": {"type": "string"},
                    "lambda_min": _POSITIVE,
                    "lambda_max": _POSITIVE,
                    "quantity": {"type": "number", "minimum": 0},
                    "fraction": {"type": "number", "minimum": 0},
                },
            },
        },
        "constraint_mode": {"enum": ["exact", "upper"]},
        "loads": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["source", "weight"],
                "additionalProperties": False,
                "properties": {
                    "weight": _POSITIVE,
                    "source": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "pieces": {"type": "array", "items": _PIECE, "minItems": 1},
                            "file": {"type": "string"},
                        },
                        "oneOf": [{"required": ["pieces"]}, {"required": ["file"]}],
                    },
                },
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "h": _POSITIVE,
                "damping": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "tol_gap": {"type": "number", "minimum": 0},
                "tol_change": {"type": "number", "minimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
                "cg_rtol": _POSITIVE,
                "line_search": {"type": "boolean"},
                "round_result": {"type": "boolean"},
                "sample_count": {"type": "integer", "minimum": 2},
                "certificate_samples": {"type": "integer", "minimum": 0},
            },
        },
    },
}


class ConfigError(ConstraintError):
    """Invalid configuration document; the message names the offending field."""


def _path(parts):
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def validate(doc):
    """Raise :class:`ConfigError` with a path-qualified message for the first schema violation."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if not errors:
        return
    err = errors[0]
    where = list(err.absolute_path)
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else err.message
        raise ConfigError(f"{_path(where + [missing])}: required field is missing")
    raise ConfigError(f"{_path(where)}: {err.message}")


@dataclass(frozen=True)
class SolverSettings:
    h: float = 1.0 / 64
    damping: float = 0.5
    tol_gap: float = 1e-3
    tol_change: float = 1e-10
    max_iters: int = 200
    cg_rtol: float = 1e-10
    line_search: bool = True
    round_result: bool = True
    sample_count: int = 2048
    certificate_samples: int = 100


@dataclass
class Config:
    """A validated configuration with its resolved problem."""

    document: dict
    problem: ProblemSpec
    solver: SolverSettings
    sources: list  # per load: PiecewisePoly or a path to a field file
    digest: str
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def kind(self):
        return self.document["domain"]["kind"]


def _domain(spec):
    kind = spec["kind"]
    if kind == "ball":
        return Ball(float(spec["radius"]), int(spec.get("dimension", 2)))
    if spec.get("dimension", 2) != 2:
        raise ConfigError("domain.dimension: rectangles are two-dimensional")
    ext = tuple((float(a), float(b)) for a, b in spec["extents"])
    for i, (a, b) in enumerate(ext):
        if b <= a:
            raise ConfigError(f"domain.extents[{i}]: upper end {b} must exceed lower end {a}")
    disk = None
    if kind == "disk_in_rectangle":
        c = spec["disk"].get("center", [0.0, 0.0])
        disk = (float(c[0]), float(c[1]), float(spec["disk"]["radius"]))
    try:
        return Rectangle(ext, disk)
    except ConstraintError as exc:
        raise ConfigError(f"domain: {exc}") from exc


def _materials(rows):
    mats = []
    for i, row in enumerate(rows):
        try:
            mats.append(Material(row.get("label", f"M{i + 1}"), row["lambda_min"], row["lambda_max"]))
        except ConstraintError as exc:
            raise ConfigError(f"materials[{i}]: {exc}") from exc
    return mats


def _constraint(rows, mode, measure):
    has_q = [("quantity" in r) for r in rows]
    has_f = [("fraction" in r) for r in rows]
    for i, (a, b) in enumerate(zip(has_q, has_f)):
        if a and b:
            raise ConfigError(f"materials[{i}]: give either 'quantity' or 'fraction', not both")
        if not a and not b:
            raise ConfigError(f"materials[{i}].fraction: required field is missing (or give 'quantity')")
    if any(has_q) and any(has_f):
        i = has_q.index(not has_q[0])
        raise ConfigError(
            f"materials[{i}]: mixes absolute quantities and fractions; use one kind for every material"
        )
    if all(has_f):
        fr = np.array([float(r["fraction"]) for r in rows])
        s = math.fsum(fr)
        if mode is ConstraintMode.EXACT:
            if abs(s - 1.0) > FRACTION_TOL:
                raise ConfigError(f"materials[*].fraction: fractions sum to {s!r}, expected 1 within {FRACTION_TOL}")
            fr = fr / s
        elif s < 1.0 - FRACTION_TOL:
            raise ConfigError(f"materials[*].fraction: upper bounds sum to {s!r} < 1")
        q = tuple(float(v) * measure for v in fr)
    else:
        q = tuple(float(r["quantity"]) for r in rows)
    try:
        c = VolumeConstraint(q, mode)
        c.check_against(measure)
    except ConstraintError as exc:
        raise ConfigError(f"materials[*].quantity: {exc}") from exc
    return c


def _source(spec, i, base_dir):
    if "file" in spec:
        p = Path(spec["file"])
        return p if p.is_absolute() else base_dir / p
    rows = [(p["r_lo"], p["r_hi"], p["coeffs"], p.get("min_power", 0)) for p in spec["pieces"]]
    try:
        return PiecewisePoly.from_spec(rows)
    except ConstraintError as exc:
        raise ConfigError(f"loads[{i}].source.pieces: {exc}") from exc


def digest(doc):
    """SHA-256 of the canonical JSON form of ``doc``."""
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def parse(doc, base_dir=None):
    """Validate ``doc`` and build the problem it describes."""
    validate(doc)
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    domain = _domain(doc["domain"])
    mats = _materials(doc["materials"])
    mode = ConstraintMode(doc.get("constraint_mode", "exact"))
    constraint = _constraint(doc["materials"], mode, domain.measure)
    sources, loads = [], []
    for i, ld in enumerate(doc["loads"]):
        src = _source(ld["source"], i, base)
        if isinstance(domain, Ball) and not isinstance(src, PiecewisePoly):
            raise ConfigError(f"loads[{i}].source: a ball needs piecewise radial sources")
        sources.append(src)
        loads.append(LoadCase(src if isinstance(src, PiecewisePoly) else None, float(ld["weight"])))
    solver = SolverSettings(**doc.get("solver", {}))
    try:
        problem = ProblemSpec(domain, tuple(mats), constraint, tuple(loads))
    except ConstraintError as exc:
        raise ConfigError(str(exc)) from exc
    return Config(doc, problem, solver, sources, digest(doc), base)


def load(path):
    """Read, validate and parse a configuration file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"{path}: no such configuration file") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    return parse(doc, path.parent)
