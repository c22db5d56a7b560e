"""Command-line entry points.

Subcommands: generate (ground-truth trajectories), run (single experiment),
sweep (config grid), baseline (classical ESN), report (re-aggregate a
runs.json).  Config files are JSON or TOML; see README for the schema.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dynamics import SYSTEMS, integrate_rk4, trajectory_to_csv
from .errors import ConfigError
from .experiment import (
    ExperimentConfig,
    emit_report,
    load_config,
    load_summaries,
    load_sweep_axes,
    run_experiment,
    run_sweep,
)


def _parse_shots(value: str):
    if value.lower() in ("exact", "inf", "none"):
        return None
    return int(value)


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "shots", None) is not None:
        cfg = cfg.with_field("noise.shots", _parse_shots(args.shots))
    if getattr(args, "sigma", None) is not None:
        cfg = cfg.with_field("noise.coherent_sigma", args.sigma)
    return cfg


def _cmd_generate(args) -> int:
    factory = SYSTEMS.get(args.system)
    if factory is None:
        raise ConfigError(f"unknown system {args.system!r}; known: {sorted(SYSTEMS)}")
    system = factory() if args.dt is None else factory(dt=args.dt)
    traj = integrate_rk4(system, system.default_ic, args.steps)
    labels = ("x", "y", "z") if args.system == "lorenz63" else ("V1", "V2", "I")
    out = Path(args.out or f"{args.system}.csv")
    trajectory_to_csv(traj, out, labels=labels)
    print(f"wrote {len(traj)} points to {out}")
    return 0


def _progress(done: int, total: int, summary) -> None:
    status = f"vpt={summary.vpt:.2f}" if summary.error is None else "FAILED"
    print(f"[{done}/{total}] seed={summary.seed} {status}", flush=True)


def _cmd_run(args, mode: str | None = None) -> int:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if mode:
        cfg = cfg.with_field("mode", mode)
    cfg = _apply_overrides(cfg, args)
    seeds = [args.seed] if args.seed is not None else list(cfg.seeds)
    summaries = []
    for seed in seeds:
        model_path = None
        if args.save_model:
            stem = Path(args.save_model)
            model_path = (
                stem if len(seeds) == 1 else stem.with_stem(f"{stem.stem}_seed{seed}")
            )
        s = run_experiment(
            cfg, seed, keep_trajectories=args.save_trajectories, model_path=model_path
        )
        print(
            f"seed={seed} vpt={s.vpt:.3f}{' (censored)' if s.vpt_censored else ''} "
            f"overlap={s.overlap_fraction:.3f} wall={s.wall_clock:.1f}s"
        )
        summaries.append(s)
    if args.out:
        paths = emit_report(
            summaries, args.out, trajectories=args.save_trajectories
        )
        print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    axes, seeds = load_sweep_axes(args.config)
    if args.seeds is not None:
        seeds = list(range(args.seeds))
    cfg = _apply_overrides(cfg, args)
    cells = run_sweep(
        cfg,
        axes,
        seeds,
        workers=args.workers,
        progress=_progress if args.verbose else None,
    )
    all_summaries = [s for cell in cells for s in cell.summaries]
    for cell in cells:
        agg = cell.aggregates()
        label = ", ".join(f"{k}={v}" for k, v in cell.overrides.items()) or "base"
        if agg.get("n"):
            print(
                f"{label}: n={agg['n']} median={agg['median']:.2f} "
                f"q1={agg['q1']:.2f} q3={agg['q3']:.2f} max={agg['max']:.2f}"
            )
        else:
            print(f"{label}: all runs failed")
    if args.out:
        paths = emit_report(all_summaries, args.out)
        agg_path = Path(args.out) / "aggregates.json"
        with open(agg_path, "w") as fh:
            json.dump(
                [{"overrides": c.overrides, **c.aggregates()} for c in cells], fh, indent=2
            )
        print("wrote " + ", ".join(str(p) for p in [*paths, agg_path]))
    return 0


def _cmd_report(args) -> int:
    summaries = load_summaries(args.infile)
    by_hash: dict[str, list[float]] = {}
    for s in summaries:
        if s.error is None:
            by_hash.setdefault(s.config_hash, []).append(s.vpt)
    for h, vals in by_hash.items():
        v = np.asarray(vals)
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        print(f"{h}: n={v.size} median={med:.2f} iqr=[{q1:.2f}, {q3:.2f}] max={v.max():.2f}")
    if args.out:
        emit_report(summaries, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hqrc", description="Hybrid quantum reservoir computing experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="integrate a benchmark system to CSV")
    p.add_argument("--system", default="lorenz63", help="lorenz63 or double_scroll")
    p.add_argument("--steps", type=int, default=2701)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_generate)

    def add_run_args(p):
        p.add_argument("--config", default=None, help="JSON or TOML config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--shots", default=None, help="shot count or 'exact'")
        p.add_argument("--sigma", type=float, default=None, help="coherent noise std-dev")
        p.add_argument("--out", default=None, help="report output directory")
        p.add_argument("--save-trajectories", action="store_true")
        p.add_argument("--save-model", default=None, metavar="FILE",
                       help="save the fitted readout record as JSON")

    p = sub.add_parser("run", help="run a single experiment")
    add_run_args(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("baseline", help="run the classical ESN baseline")
    add_run_args(p)
    p.set_defaults(func=lambda a: _cmd_run(a, mode="classical-esn"))

    p = sub.add_parser("sweep", help="run a config grid")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=int, default=None, help="use seeds 0..n-1")
    p.add_argument("--shots", default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="re-aggregate a runs.json")
    p.add_argument("infile")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
