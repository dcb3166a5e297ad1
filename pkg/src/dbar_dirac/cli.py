"""Command line entry point: ``dbar-dirac <reconstruct|consistency|scan|sweep|plots>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig

# config keys whose values are complex numbers or points, given as "re,im"
_PAIRS = {"centre", "c", "k0"}


def _pair(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")
    return tuple(parts)


def _optional_float(text):
    return None if text.lower() == "none" else float(text)


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="YAML run configuration")
    g = p.add_argument_group("configuration overrides")
    defaults = RunConfig()
    for f in fields(RunConfig):
        if f.name == "schema_version":
            continue
        flag = "--" + f.name.replace("_", "-")
        value = getattr(defaults, f.name)
        if f.name in _PAIRS:
            kind = _pair
        elif f.name == "truncation":
            kind = _optional_float
        elif isinstance(value, bool):
            kind = int
        else:
            kind = type(value)
        g.add_argument(flag, dest=f.name, type=kind, default=None,
                       help=f"default {value!r}")


def config_from_args(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    changes = {f.name: getattr(args, f.name) for f in fields(RunConfig)
               if getattr(args, f.name, None) is not None}
    return cfg.replace(**changes) if changes else cfg


def _report(lines, ok):
    for ln in lines:
        print(ln)
    return 0 if ok else 1


def cmd_reconstruct(args):
    from .pipeline import StageError, run_reconstruction
    cfg = config_from_args(args)
    try:
        out = run_reconstruction(cfg)
    except StageError as exc:
        print(f"FAIL  {exc}", file=sys.stderr)
        return 2
    m = out.metrics
    lines = [f"gamma rel L2 {m.gamma_l2:.4e}  Linf {m.gamma_linf:.4e}",
             f"Q rel L2 {m.Q_l2:.4e}  Linf {m.Q_linf:.4e}",
             f"solvability failures {m.failures}/{m.n_nodes}",
             f"artifacts in {cfg.output}"]
    ok = m.failures == 0 and (args.target is None or m.gamma_l2 <= args.target)
    return _report(lines, ok)


def cmd_consistency(args):
    from .consistency import SUITES
    from .pipeline import run_consistency
    names = list(SUITES) + ["sweep"] if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        for chk in run_consistency(name, args.output):
            print(f"[{name}] {chk.line()}")
            ok &= chk.passed
    return 0 if ok else 1


def cmd_scan(args):
    from .forward import scan_exceptional
    from .phantom import gamma_to_Q
    from .pipeline import phantom_from_config
    cfg = config_from_args(args)
    Q = gamma_to_Q(phantom_from_config(cfg), cfg.half_width, cfg.n)
    radii = np.linspace(args.r_min, args.r_max, args.radii)
    angles = 2 * np.pi * np.arange(args.angles) / args.angles
    rep = scan_exceptional(Q, radii, angles, flag_ratio=cfg.flag_ratio, margin=cfg.k0_margin)
    out = Path(cfg.output) / "exceptional_scan.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(rep.to_dict(), indent=2))
    print(f"min sigma {rep.sigma.min():.3e}; flagged {len(rep.flagged)}; "
          f"recommended A {rep.recommended_A:g}")
    return 0 if not rep.needs_refinement else 1


def cmd_sweep(args):
    from .consistency import suite_sweep
    from .phantom import gamma_to_Q
    from .pipeline import emit_plots, phantom_from_config
    cfg = config_from_args(args)
    Q = gamma_to_Q(phantom_from_config(cfg), cfg.half_width, cfg.n)
    checks, rep = suite_sweep(Q)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.json").write_text(json.dumps(rep.to_dict(), indent=2))
    if args.with_tables:
        emit_plots(None, None, out / "plots", sweep=rep)
    return _report([c.line() for c in checks], all(c.passed for c in checks))


def cmd_plots(args):
    """Rebuild plot tables from a finished run directory."""
    from .dbar import ReconstructionResult
    from .field import ComplexGrid2D
    from .forward import PotentialField
    from .io import load_container
    from .pipeline import emit_plots, phantom_from_config
    run = Path(args.run)
    cfg = RunConfig.load(run / "config.yaml")
    meta, a = load_container(run / "reconstruction.npz", "reconstruction")
    hw = meta["half_width"]
    Qh = PotentialField.from_arrays(a["Q12_hat"], a["Q21_hat"], hw, min(cfg.recon_radius, hw / 2))
    res = ReconstructionResult(ComplexGrid2D(hw, meta["n"], a["gamma_hat"]), Qh, a["z_nodes"],
                               a["residuals"], a["iterations"], a["converged"], 0.0, 0.0)
    paths = emit_plots(res, phantom_from_config(cfg), args.out or run / "plots")
    print("\n".join(str(p) for p in paths.values()))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="dbar-dirac",
                                description="Generalised d-bar reconstruction of complex conductivities")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reconstruct", help="run the full pipeline")
    _add_config_flags(r)
    r.add_argument("--target", type=float, default=None,
                   help="fail (exit 1) when the gamma relative L2 error exceeds this")
    r.set_defaults(func=cmd_reconstruct)

    c = sub.add_parser("consistency", help="run a self-consistency suite")
    c.add_argument("suite", help="suite name or 'all'")
    c.add_argument("--output", default=None, help="directory for the JSON table")
    c.set_defaults(func=cmd_consistency)

    s = sub.add_parser("scan", help="smallest singular value scan for exceptional points")
    _add_config_flags(s)
    s.add_argument("--r-min", type=float, default=0.25)
    s.add_argument("--r-max", type=float, default=4.0)
    s.add_argument("--radii", type=int, default=16)
    s.add_argument("--angles", type=int, default=16)
    s.set_defaults(func=cmd_scan)

    w = sub.add_parser("sweep", help="solvability map over the contrast scale")
    _add_config_flags(w)
    w.add_argument("--with-tables", action="store_true", help="also write solvability.txt")
    w.set_defaults(func=cmd_sweep)

    t = sub.add_parser("plots", help="write plot tables for a finished run")
    t.add_argument("run", help="run output directory")
    t.add_argument("--out", default=None)
    t.set_defaults(func=cmd_plots)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
