"""Command-line front end.

Commands::

    bangbang radial       --config CFG --out DIR [--samples N] [--seed K]
    bangbang distribution --config CFG --out DIR [--samples N]
    bangbang grid         --config CFG --out DIR [--format csv|bin]
    bangbang verify       --out DIR [--report PATH] [--seed K]

Exit codes: 0 success (a failed certificate inside a report still exits 0),
1 a ``verify`` check failed, 2 configuration error, 3 solver error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ._validation import ConstraintError, InfeasibleError, SolverError
from .config import ConfigError, load

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

log = logging.getLogger("bangbang")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="problem configuration (JSON)")
    p.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output directory")
    p.add_argument("--samples", type=int, default=argparse.SUPPRESS, help="uniform curve samples (default 2048)")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for certificate sampling (default 0)")
    p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="bangbang", description=__doc__.split("\n")[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("radial", parents=[common], help="exact radial solution on a ball")
    sub.add_parser("distribution", parents=[common], help="distribution function of psi on a ball")
    g = sub.add_parser("grid", parents=[common], help="saddle alternation on a rectangle or disk")
    g.add_argument("--format", choices=["csv", "bin"], default="csv", help="field file format")
    v = sub.add_parser("verify", parents=[common], help="re-check the artifacts of a previous run")
    v.add_argument("--report", type=Path, default=None, help="report file (default OUT/report.json)")
    return parser


def _settings(args):
    return {
        "config": getattr(args, "config", None),
        "out": getattr(args, "out", Path(".")),
        "samples": getattr(args, "samples", None),
        "seed": getattr(args, "seed", 0),
        "verbose": getattr(args, "verbose", 0),
    }


def _run(args, opts):
    from . import pipeline

    if args.command == "verify":
        report = args.report or opts["out"] / "report.json"
        if not Path(report).exists():
            raise ConfigError(f"--report: {report} does not exist")
        checks = pipeline.verify(report, seed=opts["seed"])
        for c in checks:
            print(c.line())
        ok = all(c.passed for c in checks)
        print("verdict:", "PASS" if ok else "FAIL")
        return EXIT_OK if ok else EXIT_VERIFY

    if opts["config"] is None:
        raise ConfigError("--config: required for this command")
    cfg = load(opts["config"])
    samples = opts["samples"] or cfg.solver.sample_count
    if samples < 2:
        raise ConfigError("--samples: must be at least 2")
    if args.command == "radial":
        doc, _ = pipeline.run_radial(cfg, opts["out"], samples=samples, seed=opts["seed"])
        print("radii:", " ".join(f"{r:.12g}" for r in doc["radii"]))
        print("thresholds:", " ".join(f"{a:.12g}" for a in doc["thresholds"]))
        print(f"objective: {doc['objective']:.15g}")
        print("certificate:", "passed" if doc["certificate"]["passed"] else "FAILED")
    elif args.command == "distribution":
        doc, _ = pipeline.run_distribution(cfg, opts["out"], samples=samples)
        print("thresholds:", " ".join(f"{a:.12g}" for a in doc["thresholds"]))
        for j in doc["jumps"]:
            print(f"jump at alpha = {j['alpha']:.12g}: normalized height {j['normalized']:.12g}")
    else:
        doc, res, _ = pipeline.run_grid(cfg, opts["out"], fmt=args.format)
        print(f"iterations: {doc['iterations']}  converged: {doc['converged']}  rounded: {doc['rounded']}")
        print(f"L = {doc['objective']:.12g}  U = {doc['upper_bound']:.12g}  relative gap = {doc['relative_gap']:.3e}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    opts = _settings(args)
    logging.basicConfig(
        level=logging.DEBUG if opts["verbose"] > 1 else logging.INFO if opts["verbose"] else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _run(args, opts)
    except (SolverError, InfeasibleError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ConstraintError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
