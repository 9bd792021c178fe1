"""Command-line runner: ``qsfilter run|compare|list-scenarios``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .artifacts import compare_csv, write_json, write_manifest
from .config import ConfigError, build_config
from .scenarios import SCENARIOS


def _add_run_parser(sub):
    p = sub.add_parser("run", help="run a scenario and write CSV/JSON artifacts")
    p.add_argument("kind", help="scenario kind (see list-scenarios)")
    p.add_argument("--config", help="YAML config file; flags override it")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--N", dest="n_traj", type=int, help="ensemble size")
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--l", help="coupling vector, e.g. 0,0,1")
    p.add_argument("--k", help="precession vector (give either --k or --h)")
    p.add_argument("--h", help="Hamiltonian vector; k = 2h/hbar")
    p.add_argument("--r0", help="initial polarization")
    p.add_argument("--scheme", choices=["euler", "exponential"])
    p.add_argument("--workers", type=int)
    p.add_argument("--save-paths", dest="save_paths", type=int)
    p.add_argument("--posterior", action="store_const", const=True, default=None,
                   help="sample posterior (output-measure) trajectories")
    p.add_argument("--embed", action="store_const", const=True, default=None,
                   help="build the jump model by embedding (L, H, nu)")
    p.add_argument("--w-value", dest="w_value", type=float,
                   help="fixed Wiener value for the closed-form scenario")
    p.add_argument("--x-min", dest="x_min", type=float)
    p.add_argument("--x-max", dest="x_max", type=float)
    p.add_argument("--x-points", dest="x_points", type=int)
    p.add_argument("--n-directions", dest="n_directions", type=int)
    p.add_argument("--lambda", dest="lambda_probe", type=float)
    return p


def _add_compare_parser(sub):
    p = sub.add_parser("compare", help="compare two CSV artifacts column-wise")
    p.add_argument("artifact_a")
    p.add_argument("artifact_b")
    p.add_argument("--tol", default="0",
                   help="default tolerance, or per-column spec 'col=tol,col=tol'")
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    return p


def _parse_tol(spec: str):
    default = 0.0
    per_column: dict[str, float] = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" in part:
            name, value = part.split("=", 1)
            per_column[name.strip()] = float(value)
        else:
            default = float(part)
    return per_column, default


OVERRIDE_KEYS = ("out_dir", "seed", "n_traj", "T", "dt", "nu", "l", "k", "h",
                 "r0", "scheme", "workers", "save_paths", "posterior", "embed",
                 "w_value", "x_min", "x_max", "x_points", "n_directions",
                 "lambda_probe")


def cmd_run(args) -> int:
    if args.kind not in SCENARIOS:
        print(f"error: unknown scenario {args.kind!r}; try list-scenarios", file=sys.stderr)
        return 2
    overrides = {k: getattr(args, k) for k in OVERRIDE_KEYS}
    try:
        cfg = build_config(args.kind, args.config, overrides)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    outdir = Path(cfg.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    runner, _ = SCENARIOS[cfg.kind]
    try:
        names, notes = runner(cfg, outdir)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    manifest = write_manifest(outdir, cfg.kind, cfg.to_dict(), names, notes)
    print(f"wrote {len(names)} artifacts to {outdir} (manifest: {manifest})")
    for note in notes:
        print(f"note: {note}")
    return 0


def cmd_compare(args) -> int:
    per_column, default = _parse_tol(args.tol)
    try:
        report = compare_csv(args.artifact_a, args.artifact_b, per_column, default)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        write_json(args.out, report)
    else:
        for col in report["columns"]:
            status = "pass" if col["pass"] else "FAIL"
            print(f"{status}  {col['column']}: max {col['max_abs_dev']:.3e} "
                  f"mean {col['mean_abs_dev']:.3e} tol {col['tolerance']:.3e}")
    print("PASS" if report["pass"] else "FAIL")
    return 0 if report["pass"] else 1


def cmd_list(_args) -> int:
    width = max(len(k) for k in SCENARIOS)
    for kind, (_, desc) in SCENARIOS.items():
        print(f"{kind.ljust(width)}  {desc}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qsfilter",
        description="quantum stochastic filtering scenarios: simulate, export, compare")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(sub)
    _add_compare_parser(sub)
    sub.add_parser("list-scenarios", help="list scenario kinds")
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "compare":
        return cmd_compare(args)
    return cmd_list(args)


if __name__ == "__main__":
    sys.exit(main())
