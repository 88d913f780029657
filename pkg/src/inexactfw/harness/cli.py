"""Command line entry point.

    inexactfw run CONFIG
    inexactfw sweep CONFIG --param delta --values 0.01,0.02,0.04
    inexactfw verify --seed 0
    inexactfw reduce CONFIG
    inexactfw configs            # list bundled configs

``CONFIG`` is a path or the name of a bundled config (``scalar_floor``).
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import config as cfgmod
from . import runner
from .verify import verify_all


def bundled_configs() -> dict[str, Path]:
    root = resources.files("inexactfw") / "configs"
    return {p.name[:-5]: Path(str(p)) for p in root.iterdir() if p.name.endswith(".toml")}


def resolve_config(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    stem = name[:-5] if name.endswith(".toml") else name
    bundled = bundled_configs()
    if stem in bundled:
        return bundled[stem]
    raise SystemExit(f"config {name!r} not found (bundled: {', '.join(sorted(bundled))})")


def _parse_values(text: str, param: str) -> list:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if param == "step":
        return parts
    if param == "K_max":
        return [int(p) for p in parts]
    return [float(p) for p in parts]


def _print_checks(summary: dict) -> None:
    for c in summary.get("checks", []):
        flag = "PASS" if c["pass"] else "FAIL"
        print(f"{flag:4}  {c['name']:<24} slack={c['slack']}")
    for err in summary.get("errors", []):
        print(f"error: {err}", file=sys.stderr)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="inexactfw", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (overrides config and environment)")

    p_red = sub.add_parser("reduce", help="run a reduction-mode config")
    p_red.add_argument("config")
    p_red.add_argument("--out")

    p_sw = sub.add_parser("sweep", help="sweep one parameter of a config")
    p_sw.add_argument("config")
    p_sw.add_argument("--param", required=True, choices=runner.SWEEP_PARAMS)
    p_sw.add_argument("--values", required=True, help="comma-separated values")
    p_sw.add_argument("--jobs", type=int, default=1)
    p_sw.add_argument("--out")

    p_ver = sub.add_parser("verify", help="run every invariant suite")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--corrupt-oracle", type=float, default=1.0, metavar="FACTOR",
                       help="scale oracle errors beyond their certified level (negative control)")
    p_ver.add_argument("--out", help="write the verdict JSON here")

    sub.add_parser("configs", help="list bundled configs")

    args = ap.parse_args(argv)

    if args.cmd == "configs":
        for name, path in sorted(bundled_configs().items()):
            print(f"{name:<20} {path}")
        return 0

    if args.cmd == "verify":
        report = verify_all(args.seed, args.corrupt_oracle)
        for name, suite in report["suites"].items():
            n_fail = sum(not c["pass"] for c in suite["checks"])
            print(f"{'PASS' if suite['pass'] else 'FAIL':4}  {name:<22} {len(suite['checks'])} checks, "
                  f"{n_fail} failed, worst slack {suite['worst_slack']:.3e}, {suite['seconds']}s")
        for name in report["failures"]:
            print(f"failed: {name}")
        if args.out:
            runner.write_atomic(Path(args.out), runner._json(report))
        return 0 if report["pass"] else 1

    cfg = cfgmod.load(resolve_config(args.config))
    if args.cmd == "sweep":
        res = runner.sweep(cfg, args.param, _parse_values(args.values, args.param), args.out, args.jobs)
        for row in res.rows:
            print(json.dumps(row, default=runner._default))
        extra = {k: v for k, v in res.summary.items() if k not in ("name", "param", "values")}
        print(json.dumps(extra, default=runner._default))
        print(f"wrote {res.paths['csv']}")
        return res.exit_code

    res = runner.reduce(cfg, args.out) if args.cmd == "reduce" else runner.run(cfg, args.out)
    _print_checks(res.summary)
    for kind, path in res.paths.items():
        print(f"wrote {kind}: {path}")
    print("PASS" if res.exit_code == 0 else f"FAIL (exit {res.exit_code})")
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
