"""flexjoint <experiment> --config FILE [--out DIR] [--controller NAME]
[--dt S] [--duration S] [--jobs N]

With ``--jobs N`` and several ``--config`` files the runs go to a process
pool; each writes into ``<out>/<config stem>``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ScenarioConfig, parse_controller
from .experiments import EXPERIMENTS, RUNNERS

log = logging.getLogger("flexjoint")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flexjoint", description="Elastic-joint manipulator experiments")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", action="append", default=None,
                    help="YAML scenario file; repeat for a sweep")
    ap.add_argument("--out", default="runs", help="output directory (default: runs)")
    ap.add_argument("--controller", help="I:FF, I:FF+PD, I:FULL, II:FF, II:FF+PD, II:FF+PD+VS")
    ap.add_argument("--dt", type=float, help="integration step, s")
    ap.add_argument("--control-period", type=float, help="controller sample period, s")
    ap.add_argument("--duration", type=float, help="simulated time, s")
    ap.add_argument("--jobs", type=int, default=1, help="parallel runs for a multi-config sweep")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def overrides_from(args) -> dict:
    over: dict = {}
    sim = {k: v for k, v in (("dt", args.dt), ("control_period", args.control_period),
                             ("duration", args.duration)) if v is not None}
    if sim:
        over["simulation"] = sim
    if args.controller:
        law, variant = parse_controller(args.controller)
        over["controller"] = {"law": law, "variant": variant}
    return over


def run_one(experiment: str, config: str | None, out: str, overrides: dict) -> tuple[str, bool, dict]:
    cfg = ScenarioConfig.load(config, overrides)
    res = RUNNERS[experiment](cfg, Path(out))
    summary = {k: [float(v) for v in vals] for k, vals in res.summary.items()}
    return out, res.finite, summary


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.jobs < 1:
        print("flexjoint: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        over = overrides_from(args)
        configs = args.config or [None]
        if len(configs) == 1:
            jobs = [(args.experiment, configs[0], args.out, over)]
        else:
            jobs = [(args.experiment, c, str(Path(args.out) / Path(c).stem), over) for c in configs]
        if args.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(run_one, *zip(*jobs)))
        else:
            results = [run_one(*j) for j in jobs]
    except (KeyError, ValueError, OSError) as exc:
        print(f"flexjoint: {exc}", file=sys.stderr)
        return 2
    ok = True
    for out, finite, summary in results:
        print(f"{args.experiment} -> {out}" + ("" if finite else "  [non-finite state]"))
        for key, vals in summary.items():
            print(f"  {key}: " + ", ".join(f"{v:.6g}" for v in vals))
        ok &= finite
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
