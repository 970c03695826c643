"""Command-line entry point.

Exit status: 0 when every physics check passes, 2 on configuration errors,
3 when an inequality check is violated (a report is written instead of data),
1 on numerical failures such as excessive norm drift.
"""
import argparse
import os
import sys

from ..errors import BoundViolation, ConfigError, QslError
from . import config as cfgmod
from .emit import emit_csv
from .experiments import compute
from .svg import emit_svg

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG, EXIT_VIOLATION = 0, 1, 2, 3


def summary_text(cfg, result):
    lines = [f"experiment = {result.experiment}"]
    for c in result.checks:
        lines.append(f"check {c.name}: max_violation={c.value:.6e} tol={c.tol:g} {'PASS' if c.passed else 'FAIL'}")
    lines.extend(f"note {n}" for n in result.notes)
    lines.append(f"status = {'PASS' if result.ok else 'FAIL'}")
    return "\n".join(lines) + "\n"


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def run(cfg):
    """Compute an experiment, enforce its checks, then write outputs.

    Returns ``(result, written paths)``; raises BoundViolation (after writing
    ``violations.txt``) when any check fails.
    """
    result = compute(cfg)
    os.makedirs(cfg.out, exist_ok=True)
    summary = summary_text(cfg, result)
    if not result.ok:
        path = os.path.join(cfg.out, "violations.txt")
        _write(path, summary)
        failed = [c.name for c in result.checks if not c.passed]
        raise BoundViolation(f"{len(failed)} check(s) failed; report in {path}", report=summary)
    written = []
    for table in result.tables:
        if cfg.emit_csv:
            written.append(emit_csv(table.columns, os.path.join(cfg.out, table.name + ".csv")))
        if cfg.emit_svg and table.plot and len(table.columns[table.x]):
            written.append(emit_svg(
                table.columns[table.x], {k: table.columns[k] for k in table.plot},
                os.path.join(cfg.out, table.name + ".svg"), title=table.name, xlabel=table.xlabel,
                ylabel=table.ylabel, logx=table.logx, logy=table.logy, markers=table.markers,
            ))
    for name, text in (("summary.txt", summary), ("config.txt", cfgmod.dumps(cfg))):
        path = os.path.join(cfg.out, name)
        _write(path, text)
        written.append(path)
    return result, written


def build_parser():
    p = argparse.ArgumentParser(prog="qsllab", description="Quantum speed-limit experiments.")
    p.add_argument("experiment", nargs="?", choices=cfgmod.EXPERIMENTS, help="experiment preset")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--model", choices=cfgmod.MODELS, help="model for custom runs")
    p.add_argument("--N", type=int, help="system size")
    p.add_argument("--T", type=float, help="annealing time")
    p.add_argument("--steps", type=int, help="number of recorded grid points")
    p.add_argument("--substeps", type=int, help="RK4 steps between recorded points")
    p.add_argument("--seed", type=int, help="random seed (first seed for sweeps)")
    p.add_argument("--n-seeds", dest="n_seeds", type=int, help="number of random protocols")
    p.add_argument("--out", help="output directory")
    p.add_argument("--emit", choices=cfgmod.EMITS, help="output formats")
    p.add_argument("--J", type=float, help="quench coupling")
    p.add_argument("--h-field", dest="h_field", type=float, help="quench field")
    p.add_argument("--h", type=float, help="two-level field strength")
    p.add_argument("--t-max", dest="t_max", type=float, help="quench end time")
    p.add_argument("--protocol", choices=cfgmod.PROTOCOLS, help="schedule shape")
    p.add_argument("--N-list", dest="N_list", help="comma-separated sizes")
    p.add_argument("--T-list", dest="T_list", help="comma-separated annealing times")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--precision", choices=("auto", "double", "mp"), help="quench arithmetic")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        file_values = cfgmod.load(args.config) if args.config else {}
        overrides = {k: v for k, v in vars(args).items() if k != "config"}
        for key in ("N_list", "T_list"):
            if overrides.get(key) is not None:
                overrides[key] = cfgmod._convert(key, overrides[key])
        cfg = cfgmod.build(file_values, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result, written = run(cfg)
    except BoundViolation as exc:
        print(exc.report or "", end="")
        print(f"violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QslError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(summary_text(cfg, result), end="")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
