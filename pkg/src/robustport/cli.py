"""Command-line front end.

Subcommands: validate, solve, strategy, simulate, verify, oracle, convergence.
Exit codes: 0 success, 1 assumption/assertion failure, 2 configuration error,
3 missing prerequisite artifact.  The output directory resolves as
--out > config output_dir > $ROBUSTPORT_OUT > ./out.  `solve` caches the
surface (surface.csv + surface_meta.json keyed by a config hash) for the
downstream commands.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import csvio
from .config import (ConfigError, RunConfig, dump_config, load_config,
                     solve_config_hash)
from .model import validate_assumptions
from .pde import SolverError, residual_norm, solve_hjbi
from .simulate import AdversaryPolicy, simulate_eu, terminal_wealths, verify_saddle
from .strategy import build_policy
from .worst_case import brute_force_min, minimize_ratio

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_MISSING = 3

SURFACE_CSV = "surface.csv"
SURFACE_META = "surface_meta.json"


def _out_dir(args, cfg: RunConfig) -> Path:
    out = args.out or cfg.output_dir or os.environ.get("ROBUSTPORT_OUT") or "out"
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load_effective_config(args) -> RunConfig:
    cfg = load_config(args.config)
    n_t = n_y = None
    if getattr(args, "grid", None):
        try:
            n_t, n_y = (int(v) for v in args.grid.split(","))
        except ValueError:
            raise ConfigError(f"--grid expects 'n_t,n_y', got {args.grid!r}")
    try:
        return cfg.with_overrides(seed=getattr(args, "seed", None),
                                  n_paths=getattr(args, "paths", None),
                                  n_t=n_t, n_y=n_y)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _load_cached_surface(out: Path, cfg: RunConfig):
    meta_path = out / SURFACE_META
    csv_path = out / SURFACE_CSV
    if not meta_path.exists() or not csv_path.exists():
        print(f"error: no cached surface in {out}; run `robustport solve` first",
              file=sys.stderr)
        return None
    meta = csvio.read_surface_meta(meta_path)
    if meta.get("config_hash") != solve_config_hash(cfg):
        print(f"error: cached surface in {out} is stale (config changed); "
              "re-run `robustport solve`", file=sys.stderr)
        return None
    return csvio.read_surface(csv_path, meta)


def cmd_validate(args) -> int:
    cfg = _load_effective_config(args)
    report = validate_assumptions(cfg.model, cfg.rectangle)
    print("assumption report:", report.summary())
    return EXIT_OK if report.passed else EXIT_ASSERTION


def cmd_solve(args) -> int:
    cfg = _load_effective_config(args)
    out = _out_dir(args, cfg)
    try:
        surface = solve_hjbi(cfg.model, cfg.rectangle, cfg.utility, cfg.grid)
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    h = solve_config_hash(cfg)
    csvio.write_surface(out / SURFACE_CSV, surface, h, cfg.sim.seed)
    csvio.write_surface_meta(out / SURFACE_META, surface, h)
    d = surface.diagnostics
    print(f"solved {cfg.grid.n_t}x{cfg.grid.n_y} grid "
          f"(dt={cfg.grid.dt:.3g}, dy={cfg.grid.dy:.3g})")
    print(f"diagnostics: max|u|={d.max_abs_u:.6g} max|u_y|={d.max_abs_u_y:.6g} "
          f"residual={d.max_residual:.3g} advection_cfl={d.max_advection_cfl:.3g}")
    print(f"u(0, y0={cfg.sim.y0:g}) = {surface.interp_u(0.0, [cfg.sim.y0])[0]:.8g}")
    print(f"wrote {out / SURFACE_CSV}")
    return EXIT_OK


def cmd_strategy(args) -> int:
    cfg = _load_effective_config(args)
    out = _out_dir(args, cfg)
    surface = _load_cached_surface(out, cfg)
    if surface is None:
        return EXIT_MISSING
    pf = build_policy(surface, cfg.model, cfg.rectangle, cfg.utility)
    csvio.write_policy_csv(out / "policy.csv", pf, solve_config_hash(cfg), cfg.sim.seed)
    print(f"policy fraction at (t=0, y={cfg.sim.y0:g}): "
          f"{pf.fraction_at(0.0, np.asarray([cfg.sim.y0]))[0]:.8g}")
    print(f"wrote {out / 'policy.csv'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_effective_config(args)
    out = _out_dir(args, cfg)
    surface = _load_cached_surface(out, cfg)
    if surface is None:
        return EXIT_MISSING
    pf = build_policy(surface, cfg.model, cfg.rectangle, cfg.utility)
    est = simulate_eu(pf, AdversaryPolicy.field(pf), cfg.model, cfg.sim, q=cfg.utility)
    h = solve_config_hash(cfg)
    csvio.write_sim_report_csv(out / "sim_report.csv",
                               [("pi*", "nu*-field", est, "n/a")], h, cfg.sim.seed)
    print(f"EU(pi*, nu*) = {est.mean:.6f} +/- {est.std_error:.2e} "
          f"({est.n_paths} paths, X_T in [{est.min_terminal_wealth:.4g}, "
          f"{est.max_terminal_wealth:.4g}])")
    if args.histogram:
        w = terminal_wealths(pf, AdversaryPolicy.field(pf), cfg.model, cfg.sim)
        counts, edges = np.histogram(w, bins=60)
        csvio.write_histogram_csv(out / "wealth_histogram.csv", edges, counts,
                                  h, cfg.sim.seed)
        print(f"wrote {out / 'wealth_histogram.csv'}")
    print(f"wrote {out / 'sim_report.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load_effective_config(args)
    out = _out_dir(args, cfg)
    surface = _load_cached_surface(out, cfg)
    if surface is None:
        return EXIT_MISSING
    pf = build_policy(surface, cfg.model, cfg.rectangle, cfg.utility)
    report = verify_saddle(surface, pf, cfg.model, cfg.rectangle, cfg.utility, cfg.sim)
    csvio.write_verify_report_csv(out / "verify_report.csv", report,
                                  solve_config_hash(cfg), cfg.sim.seed)
    print(report.summary())
    print(f"wrote {out / 'verify_report.csv'}")
    return EXIT_OK if report.passed else EXIT_ASSERTION


def cmd_oracle(args) -> int:
    cfg = _load_effective_config(args)
    k = cfg.rectangle
    measure, value, branch = minimize_ratio(args.b_val, args.kappa, k)
    brute = brute_force_min(args.b_val, args.kappa, k, resolution=args.resolution)
    print(f"branch: {branch.region.value}  thresholds: "
          f"t1={branch.t1:.6g} t2={branch.t2:.6g} t3={branch.t3:.6g} t4={branch.t4:.6g}")
    atoms = "  ".join(f"((mu={mu:.6g}, sigma={sig:.6g}), w={w:.6g})"
                      for (mu, sig), w in measure.atoms)
    print(f"measure: {atoms}")
    print(f"closed-form value: {value:.8g}")
    print(f"brute-force value ({args.resolution}^2 grid): {brute.value:.8g}")
    print(f"discrepancy: {abs(value - brute.value):.3g}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = _load_effective_config(args)
    out = _out_dir(args, cfg)
    rows = []
    prev = None
    n_t, n_y = cfg.grid.n_t, cfg.grid.n_y
    for level in range(args.levels + 1):
        g_cfg = cfg.with_overrides(n_t=n_t, n_y=n_y)
        try:
            surface = solve_hjbi(g_cfg.model, g_cfg.rectangle, g_cfg.utility, g_cfg.grid)
        except SolverError as exc:
            print(f"solver error at level {level}: {exc}", file=sys.stderr)
            return EXIT_ASSERTION
        res = residual_norm(surface, g_cfg.model, g_cfg.rectangle, g_cfg.utility)
        ratio = None if prev is None else prev / res
        rows.append({"level": level, "n_t": n_t, "n_y": n_y,
                     "residual": res, "ratio": ratio})
        msg = f"level {level}: ({n_t}, {n_y}) residual = {res:.4e}"
        if ratio is not None:
            msg += f"  improvement x{ratio:.2f}"
        print(msg)
        prev = res
        n_t, n_y = 2 * (n_t - 1) + 1, 2 * (n_y - 1) + 1
    csvio.write_convergence_csv(out / "convergence.csv", rows,
                                solve_config_hash(cfg), cfg.sim.seed)
    print(f"wrote {out / 'convergence.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="robustport",
        description="Worst-case robust portfolio: HJBI solve, policy export, "
                    "Monte-Carlo verification")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sim_flags=False):
        sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--dump-config", action="store_true",
                        help="print the normalized configuration and exit")
        if sim_flags:
            sp.add_argument("--seed", type=int, default=None)
            sp.add_argument("--paths", type=int, default=None)

    sp = sub.add_parser("validate", help="check model assumptions")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("solve", help="solve the HJBI PDE and cache the surface")
    common(sp)
    sp.add_argument("--grid", default=None, metavar="N_T,N_Y",
                    help="override grid sizes")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("strategy", help="export the policy field CSV")
    common(sp)
    sp.set_defaults(func=cmd_strategy)

    sp = sub.add_parser("simulate", help="Monte-Carlo expected utility of pi* vs nu*")
    common(sp, sim_flags=True)
    sp.add_argument("--histogram", action="store_true",
                    help="also export a terminal-wealth histogram")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="Monte-Carlo saddle-point verification")
    common(sp, sim_flags=True)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("oracle", help="closed form vs brute force at one (b, kappa)")
    common(sp)
    sp.add_argument("--b-val", type=float, required=True, dest="b_val")
    sp.add_argument("--kappa", type=float, required=True)
    sp.add_argument("--resolution", type=int, default=400)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("convergence", help="self-convergence study of the solver")
    common(sp)
    sp.add_argument("--levels", type=int, default=2,
                    help="number of (dt, dy) halvings")
    sp.set_defaults(func=cmd_convergence)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.dump_config:
            cfg = _load_effective_config(args)
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AssertionError, FloatingPointError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSERTION


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
