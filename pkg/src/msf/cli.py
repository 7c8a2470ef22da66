"""Command line: ``msf {catalog,build,spectrum,verify}``.

Exit codes: 0 success, 1 a check failed, 2 bad configuration, 3 inadmissible C.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import operators as op
from .assembly import assemble
from .deformation import InadmissibleConstantError, deform, deformed_potential
from .master import catalog_families, partner_potentials, superpotential
from .pipeline import ConfigError, RunConfig, load_config, run_checks, with_overrides
from .verification import discretize_and_eigen, emit_report

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INADMISSIBLE = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="msf", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("catalog", help="list families and parameter constraints")
    for name, text in (("build", "construct operators and write their summary JSON"),
                       ("spectrum", "diagonalize H2, H1 and H' and write eigenvalue CSV"),
                       ("verify", "run the check suite and write the report")):
        s = sub.add_parser(name, help=text)
        s.add_argument("config", nargs="?", help="JSON or TOML run configuration")
        s.add_argument("--family")
        s.add_argument("--alpha", type=float)
        s.add_argument("--beta", type=float)
        s.add_argument("--m", type=int)
        s.add_argument("--c-const", dest="C", type=float)
        s.add_argument("--r0", type=float)
        s.add_argument("--grid-n", dest="grid_n", type=int)
        s.add_argument("--rmin", type=float)
        s.add_argument("--rmax", type=float)
        s.add_argument("--k", type=int)
        s.add_argument("--report")
        s.add_argument("--csv")
    return p


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    keys = ("family", "alpha", "beta", "m", "C", "r0", "grid_n", "rmin", "rmax", "k", "report", "csv")
    return with_overrides(cfg, **{k: getattr(args, k) for k in keys})


def _write(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_catalog(_args) -> int:
    for name, info in catalog_families().items():
        print(name)
        for k, v in info.items():
            print(f"    {k}: {v}")
    return EXIT_OK


def cmd_build(cfg: RunConfig) -> int:
    sys_ = cfg.system()
    asm = assemble(sys_, cfg.C, cfg.r0)
    rs, rps = asm.probe_points(5)
    line = np.sort(rs)
    prof = asm.profile
    doc = {
        "system": cfg.describe(),
        "admissible": {"band": [prof.admissible.lo, prof.admissible.hi], "message": prof.admissible.describe()},
        "probe_r": line.tolist(),
        "W": [float(x) for x in prof.W(line)],
        "lambda": [float(x) for x in prof.lam(line)],
        "omega": [float(x) for x in prof.omega(line)],
        "probe_2d": [rs.tolist(), rps.tolist()],
        "operators": {name: op.summary(P, (rs, rps)) for name, P in
                      (("Hs", asm.Hs), ("K", asm.K), ("A1", asm.A1), ("A2", asm.A2))},
        "orders": {"K": asm.orders[0], "A1": asm.orders[1], "A2": asm.orders[2],
                   "A1_naive": asm.naive_order_A1, "A1_top_cancelled": asm.a1_top_cancelled},
        "resonance": {"m": asm.resonance.m, "n": asm.resonance.n,
                      "lambda_x": asm.resonance.lam_x, "lambda_y": asm.resonance.lam_y},
    }
    _write(json.dumps(doc, indent=2, sort_keys=True) + "\n", cfg.report)
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    sys_ = cfg.system()
    grid = cfg.grid(sys_)
    v1, v2 = partner_potentials(superpotential(sys_))
    vp = deformed_potential(deform(sys_, cfg.C, cfg.r0))
    cols = [discretize_and_eigen(v, grid, cfg.k).eigenvalues for v in (v2, v1, vp)]
    lines = ["index,eigenvalue_H2,eigenvalue_H1,eigenvalue_Hprime"]
    lines += [f"{i},{a!r},{b!r},{c!r}" for i, (a, b, c) in enumerate(zip(*cols))]
    _write("\n".join(lines) + "\n", cfg.csv)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    checks = run_checks(cfg)
    report = emit_report(checks, cfg.describe(), cfg.report)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  residual={c.residual:.3e}  tol={c.tolerance:.1e}")
    summ = report.summary()
    print("all checks passed" if summ["pass"] else f"failing: {', '.join(summ['failing'])}")
    return EXIT_OK if summ["pass"] else EXIT_FAIL


COMMANDS = {"build": cmd_build, "spectrum": cmd_spectrum, "verify": cmd_verify}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "catalog":
        return cmd_catalog(args)
    try:
        cfg = _config(args)
        cfg.system()
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InadmissibleConstantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE


if __name__ == "__main__":
    sys.exit(main())
