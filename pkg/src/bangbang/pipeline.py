"""End-to-end runs behind the command-line tools: solve, write artifacts, verify them."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import report as rpt
from ._validation import ConstraintError
from .config import ConfigError, parse
from .core import Ball, ConstraintMode, Rectangle
from .grid import Grid2D, read_field_binary, read_field_csv, write_field_binary, write_field_csv
from .measure_alloc import bathtub, objective, prepare
from .piecewise import PiecewisePoly
from .radial import (
    RadialDesign,
    assemble_psi,
    certify,
    design_objective,
    monotone_segments,
    radial_distribution,
    radial_flux,
    radial_thresholds,
    reconstruct_state,
    solve_radial,
    solve_radial_design,
    strip_violations,
)
from .saddle import SaddleOptions, alternate, certify_grid, evaluate, problem_on_grid

log = logging.getLogger(__name__)


def _require_ball(cfg, command):
    if not isinstance(cfg.problem.domain, Ball):
        raise ConfigError(f"domain.kind: '{command}' needs a ball, got '{cfg.kind}'")


def _require_rectangle(cfg):
    if not isinstance(cfg.problem.domain, Rectangle):
        raise ConfigError(f"domain.kind: 'grid' needs a rectangle or disk_in_rectangle, got '{cfg.kind}'")


# --------------------------------------------------------------------------- radial


def run_radial(cfg, out, samples=2048, seed=0):
    """Solve a ball problem exactly and write ``report.json`` plus ``psi/u/theta`` curves."""
    _require_ball(cfg, "radial")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    sol = solve_radial(cfg.problem, rng=rng, n_samples=cfg.solver.certificate_samples)
    files = {}
    for name, (header, cols) in rpt.radial_curves(sol, samples).items():
        files[name] = f"{name}.csv"
        rpt.write_csv(out / files[name], header, cols)
    doc = rpt.radial_report(cfg, sol, files)
    doc["seed"] = seed
    rpt.write_json(out / "report.json", doc)
    return doc, sol


def run_distribution(cfg, out, samples=2048):
    """Write ``distribution.csv`` (alpha, lambda, lambda_left, normalized) and ``distribution.json``."""
    _require_ball(cfg, "distribution")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    dom = cfg.problem.domain
    fluxes = [radial_flux(ld.source, dom.dimension, dom.radius) for ld in cfg.problem.loads]
    psi = assemble_psi(fluxes, [ld.weight for ld in cfg.problem.loads])
    seg = monotone_segments(psi)
    dist = radial_distribution(psi, seg, dom.dimension)
    red = prepare(cfg.problem).reduced
    alphas = radial_thresholds(dist, red.quantities)
    cols = rpt.distribution_table(dist, samples, extra=alphas)
    rpt.write_csv(out / "distribution.csv", ["alpha", "lambda", "lambda_left", "normalized"], cols)
    doc = {
        "schema_version": rpt.SCHEMA_VERSION,
        "command": "distribution",
        "problem": cfg.document,
        "measure": dist.total_measure,
        "thresholds": alphas.tolist(),
        "jumps": [{"alpha": a, "measure": m, "normalized": m / dist.total_measure} for a, m in dist.jumps()],
        "max_psi": dist.max_value,
        "files": {"distribution": "distribution.csv"},
        "provenance": rpt.provenance(cfg.digest),
    }
    rpt.write_json(out / "distribution.json", doc)
    return doc, dist


# --------------------------------------------------------------------------- grid


def grid_for(cfg):
    _require_rectangle(cfg)
    try:
        return Grid2D.from_domain(cfg.problem.domain, cfg.solver.h)
    except ConstraintError as exc:
        raise ConfigError(f"solver.h: {exc}") from exc


def _center(domain):
    return (domain.disk[0], domain.disk[1]) if domain.disk is not None else (0.0, 0.0)


def grid_sources(cfg, grid):
    """One full ``(ny, nx)`` source field per load.

    Piecewise radial sources are evaluated at the cell centres' distance from
    the disk centre (the origin for plain rectangles) and vanish beyond their
    last breakpoint.
    """
    out = []
    for i, src in enumerate(cfg.sources):
        if isinstance(src, PiecewisePoly):
            r = grid.radius(_center(cfg.problem.domain))
            vals = np.where((r >= src.lo) & (r <= src.hi), src(np.clip(r, src.lo, src.hi)), 0.0)
        else:
            try:
                if str(src).endswith(".bin"):
                    vals, h = read_field_binary(src)
                    if vals.shape != grid.shape or not math.isclose(h, grid.h, rel_tol=1e-12):
                        raise ConfigError(f"loads[{i}].source.file: field layout does not match the grid")
                else:
                    vals = read_field_csv(src, grid)
            except FileNotFoundError as exc:
                raise ConfigError(f"loads[{i}].source.file: {src} not found") from exc
        out.append(np.where(grid.mask, vals, 0.0))
    return out


def saddle_options(settings):
    return SaddleOptions(
        max_iters=settings.max_iters,
        damping=settings.damping,
        tol_gap=settings.tol_gap,
        tol_change=settings.tol_change,
        cg_rtol=settings.cg_rtol,
        line_search=settings.line_search,
        round_result=settings.round_result,
    )


def _write_field(path, grid, values, fmt):
    if fmt == "bin":
        write_field_binary(path, grid, values)
    else:
        write_field_csv(path, grid, values)


def run_grid(cfg, out, fmt="csv"):
    """Run the saddle alternation and write fields, the iteration log and ``report.json``."""
    grid = grid_for(cfg)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    sources = grid_sources(cfg, grid)
    pg = problem_on_grid(cfg.problem, grid)
    res = alternate(pg, grid, sources, options=saddle_options(cfg.solver))
    cert = certify_grid(grid, res.reduced_theta, res.state.sigma, sources, pg)
    ext = "bin" if fmt == "bin" else "csv"
    files = {"theta": {}, "u": [], "log": "iterations.csv"}
    for j, mat in enumerate(cfg.problem.materials):
        name = f"theta_{mat.label}.{ext}"
        _write_field(out / name, grid, grid.full(res.theta[:, j]), fmt)
        files["theta"][mat.label] = name
    for k, u in enumerate(res.state.u):
        name = f"u_{k + 1}.{ext}"
        _write_field(out / name, grid, u, fmt)
        files["u"].append(name)
    (out / "iterations.csv").write_text("\n".join(res.diagnostics.lines()) + "\n")
    doc = {
        "schema_version": rpt.SCHEMA_VERSION,
        "command": "grid",
        "problem": cfg.document,
        "grid": {"nx": grid.nx, "ny": grid.ny, "h": grid.h, "n_active": grid.n_active, "measure": grid.measure},
        "quantities": pg.quantities.tolist(),
        "thresholds": res.alphas,
        "objective": res.lower,
        "upper_bound": res.upper,
        "relative_gap": res.relative_gap,
        "relaxed_objective": res.relaxed_lower,
        "converged": res.converged,
        "rounded": res.rounded,
        "iterations": len(res.diagnostics),
        "bang_bang_fraction": res.bang_bang_fraction,
        "certificate": cert.as_dict(),
        "files": files,
        "format": fmt,
        "config_dir": str(Path(cfg.base_dir).resolve()),
        "provenance": rpt.provenance(cfg.digest),
    }
    rpt.write_json(out / "report.json", doc)
    return doc, res, grid


# --------------------------------------------------------------------------- verification


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _check(name, value, tol, what="error"):
    ok = bool(np.isfinite(value) and value <= tol)
    return Check(name, ok, f"{what} {value:.3e} (tolerance {tol:.1e})")


def verify(report_path, seed=0, n_samples=100):
    """Recompute the certificates of a previous run from its written artifacts."""
    report_path = Path(report_path)
    doc = rpt.read_json(report_path)
    if doc.get("schema_version") != rpt.SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {rpt.SCHEMA_VERSION}, found {doc.get('schema_version')!r}")
    # field-file sources are relative to the directory of the original configuration
    cfg = parse(doc["problem"], doc.get("config_dir", report_path.parent))
    if doc.get("command") == "radial":
        return verify_radial(doc, cfg, report_path.parent, seed, n_samples)
    if doc.get("command") == "grid":
        return verify_grid(doc, cfg, report_path.parent)
    raise ConfigError(f"command: cannot verify a '{doc.get('command')}' report")


def _report_design(doc, cfg):
    """Radial design from the report's radii (edges) and band fractions."""
    dom = cfg.problem.domain
    edges = np.array([0.0] + [float(r) for r in doc["radii"]] + [dom.radius])
    theta = np.array([b["theta"] for b in doc["bands"]], float)
    if theta.shape[0] != edges.size - 1:
        raise ConfigError(f"bands: {theta.shape[0]} bands for {edges.size - 2} radii")
    if np.any(np.diff(edges) <= 0):
        raise ConfigError("radii: interface radii must increase strictly inside (0, R)")
    return RadialDesign(edges, theta, dom.dimension, cfg.problem.materials)


def verify_radial(doc, cfg, base, seed=0, n_samples=100):
    problem = cfg.problem
    dom = problem.domain
    design = _report_design(doc, cfg)
    mu = dom.measure
    checks = []
    band_edges = [doc["bands"][0]["r_lo"]] + [b["r_hi"] for b in doc["bands"]]
    checks.append(_check("band edges match radii", float(np.max(np.abs(np.array(band_edges) - design.edges))), 0.0))
    row_err = float(np.max(np.abs(design.theta.sum(axis=1) - 1.0)))
    neg = float(max(0.0, -design.theta.min()))
    checks.append(_check("simplex", max(row_err, neg), 1e-12))
    q = problem.quantities
    if problem.constraint.mode is ConstraintMode.EXACT:
        vol_err = float(np.max(np.abs(design.volumes - q)))
    else:
        vol_err = float(max(np.max(design.volumes - q), abs(design.volumes.sum() - mu)))
    checks.append(_check("volumes", vol_err / mu, 1e-9, "relative error"))

    fluxes = [radial_flux(ld.source, dom.dimension, dom.radius) for ld in problem.loads]
    psi = assemble_psi(fluxes, [ld.weight for ld in problem.loads])
    seg = monotone_segments(psi)
    dist = radial_distribution(psi, seg, dom.dimension)
    prep = prepare(problem)
    red = prep.reduced
    alphas = radial_thresholds(dist, red.quantities)
    reported = np.array(doc["thresholds"], float)
    a_err = float(np.max(np.abs(reported - alphas))) if reported.shape == alphas.shape else math.inf
    checks.append(_check("thresholds", a_err / max(1.0, float(np.max(alphas))), 1e-9, "relative error"))
    reduced = RadialDesign(design.edges, prep.to_reduced(design.theta), dom.dimension, red.materials)
    bad = strip_violations(reduced, psi, alphas)
    checks.append(Check("strip conditions", bad == 0, f"{bad} violating sample points"))

    states = [reconstruct_state(fl, design, dom.radius) for fl in fluxes]
    header, data = rpt.read_csv(base / doc["files"]["u"])
    u_err = 0.0
    for k, st in enumerate(states):
        col = data[:, k + 1]
        u_err = max(u_err, float(np.max(np.abs(col - st(data[:, 0])))) / max(1e-300, float(np.max(np.abs(col)))))
    checks.append(_check("u curve matches reconstruction", u_err, 1e-9, "relative error"))
    cert = certify(design, fluxes, psi, q, states, rng=np.random.default_rng(seed), n_samples=n_samples)
    checks.append(_check("u' = sigma / lambda_-", cert.state_residual, 1e-9, "max residual"))
    h_design = design_objective(design, psi)
    checks.append(
        _check("objective matches report", abs(h_design - doc["objective"]) / abs(h_design), 1e-9, "relative error")
    )
    optimum = design_objective(solve_radial_design(psi, seg, red.materials, red.quantities, dom.dimension), psi)
    checks.append(_check("objective is optimal", abs(optimum - h_design) / abs(optimum), 1e-9, "relative shortfall"))
    checks.append(
        _check("saddle samples", max(0.0, cert.saddle_max_excess) / abs(h_design), 1e-10, "relative excess")
    )
    return checks


def _read_field(path, grid, fmt):
    if fmt == "bin":
        vals, _ = read_field_binary(path)
        return vals
    return read_field_csv(path, grid)


def verify_grid(doc, cfg, base):
    grid = grid_for(cfg)
    fmt = doc.get("format", "csv")
    pg = problem_on_grid(cfg.problem, grid)
    prep = prepare(pg, grid.measure)
    red = prep.reduced
    theta = np.column_stack(
        [grid.active(_read_field(base / doc["files"]["theta"][m.label], grid, fmt)) for m in cfg.problem.materials]
    )
    checks = []
    row_err = float(np.max(np.abs(theta.sum(axis=1) - 1.0)))
    checks.append(_check("simplex", max(row_err, float(max(0.0, -theta.min()))), 1e-12))
    vol = grid.measures @ theta
    q = pg.quantities
    if pg.constraint.mode is ConstraintMode.EXACT:
        vol_err = float(np.max(np.abs(vol - q)))
    else:
        vol_err = float(max(np.max(vol - q), abs(vol.sum() - grid.measure)))
    checks.append(_check("volumes", vol_err / grid.measure, 1e-10, "relative error"))
    sources = grid_sources(cfg, grid)
    weights = [ld.weight for ld in pg.loads]
    th_red = prep.to_reduced(theta)
    state = evaluate(grid, th_red, sources, weights, red.materials)
    u_err = 0.0
    for k, name in enumerate(doc["files"]["u"]):
        stored = _read_field(base / name, grid, fmt)
        u_err = max(u_err, float(np.max(np.abs(stored - state.u[k]))) / max(1e-300, float(np.max(np.abs(stored)))))
    checks.append(_check("u fields solve the state equation", u_err, 1e-6, "relative error"))
    cells = state.cells(grid)
    lower = objective(cells, th_red, red.materials)
    _, alloc = bathtub(cells, red.quantities)
    upper_own = objective(cells, alloc.theta, red.materials)
    checks.append(_check("objective matches report", abs(lower - doc["objective"]) / abs(lower), 1e-7, "relative error"))
    checks.append(Check("weak duality", upper_own >= lower * (1 - 1e-12), f"L = {lower:.10g}, U = {upper_own:.10g}"))
    gap = (doc["upper_bound"] - lower) / abs(lower)
    checks.append(_check("reported gap", abs(gap - doc["relative_gap"]), 1e-7, "mismatch"))
    return checks
