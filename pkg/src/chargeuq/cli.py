"""Command-line entry point: ``chargeuq <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import io, pce, pipeline
from .cccv import simulate_cccv
from .cell import CellParameters
from .orthopoly import BasisSet

log = logging.getLogger("chargeuq")


def _config(args) -> io.RunConfig:
    cfg = io.load_config(args.config) if args.config else io.RunConfig()
    proto = {k: getattr(args, k) for k in ("c_rate", "v_max") if getattr(args, k, None) is not None}
    if proto:
        cfg.protocol = replace(cfg.protocol, **proto)
    return cfg


def _overrides(pairs) -> tuple[list[str], list[float]]:
    names, values = [], []
    for item in pairs or []:
        k, _, v = item.partition("=")
        if not _:
            raise SystemExit(f"--set expects name=value, got {item!r}")
        names.append(k)
        values.append(float(v))
    return names, values


def cmd_simulate(args) -> int:
    cfg = _config(args)
    names, values = _overrides(args.set)
    cell = CellParameters().with_values(names, values) if names else CellParameters()
    res = simulate_cccv(cell, cfg.protocol, cfg.solver)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res.to_csv(out / "simulation.csv")
    info = {"termination": res.termination, "switch_time": res.switch_time, "end_time": res.end_time,
            "censored": res.censored, "peak_temperature": float(res.temperature.max()),
            "min_eta_pl": float(res.eta_pl.min())}
    io.write_json(out / "simulation.json", info)
    print(json.dumps(io._jsonable(info)))
    return 0 if res.termination != "solver_failure" else 1


def cmd_campaign(args) -> int:
    cfg = _config(args)
    camp = cfg.campaign(seed=args.seed, jobs=args.jobs)
    if args.two_stage:
        _, names, result = pipeline.two_stage(camp, args.threshold)
        log.info("screened set: %s", names)
    else:
        result = pipeline.run_campaign(camp)
    viol = pipeline.violation_probability(result, cfg.protocol)
    screened = sorted(pipeline.screen_parameters(result, args.threshold))
    out = io.write_bundle(result, args.out_dir, viol, {"screened": screened})
    print(f"bundle written to {out}; max violation probability {viol.max_probability:.4f}")
    return 0


def cmd_mc(args) -> int:
    cfg = _config(args)
    camp = cfg.campaign(seed=args.seed, jobs=args.jobs)
    space = camp.subspace() if args.screened else None
    mc = pipeline.run_mc_baseline(camp, args.n_runs, space)
    io.write_mc(mc, args.out_dir)
    print(f"{mc.n_runs} runs in {mc.timing['total_s']:.1f} s")
    return 0


def cmd_sobol(args) -> int:
    """Recompute total (and first-order) Sobol series from a saved bundle."""
    bundle = Path(args.bundle)
    models = json.loads((bundle / "models.json").read_text())
    basis = BasisSet.from_json(models["basis"])
    names = tuple(models["names"])
    out = Path(args.out_dir or bundle)
    out.mkdir(parents=True, exist_ok=True)
    kind = pce.sobol_first if args.first_order else pce.sobol_total
    screened = set()
    with open(out / ("sobol_first.csv" if args.first_order else "sobol.csv"), "w") as fh:
        fh.write(",".join(["qoi", "time", *names]) + "\n")
        for q, d in models["qois"].items():
            for k, (a, excl) in enumerate(zip(d["coefficients"], d["excluded"])):
                row = [""] * len(names)
                if not excl:
                    try:
                        idx = kind(pce.PceModel(basis, np.array(a), names))
                        row = [repr(v) for v in idx.values()]
                        screened |= {n for n, v in idx.items() if v > args.threshold}
                    except pce.ZeroVariance:
                        pass
                fh.write(",".join([q, f"{10 * k:g}", *row]) + "\n")
    print("above threshold:", " ".join(n for n in names if n in screened))
    return 0


def cmd_tune(args) -> int:
    cfg = _config(args)
    camp = cfg.campaign(seed=args.seed, jobs=args.jobs)
    t = cfg.tune
    eps = args.epsilon if args.epsilon is not None else t.epsilon
    rep = pipeline.tune_protocol(cfg.protocol, eps, t.c_rates, t.v_maxes, camp,
                                 exhaustive=args.exhaustive or t.exhaustive)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"epsilon": rep.epsilon, "found": rep.found, "candidates": rep.candidates,
           "selected": asdict(rep.selected) if rep.selected else None}
    io.write_json(out / "tune.json", doc)
    for c in rep.candidates:
        print(f"{c['c_rate']:.2f}C / {c['v_max']:.3f} V  p_max={c['max_probability']:.4f}"
              f"  end={c['nominal_end_time']:.1f} s  {'ok' if c['admissible'] else 'reject'}")
    if not rep.found:
        print("no admissible protocol in grid")
        return 2
    print(f"selected {rep.selected.c_rate}C / {rep.selected.v_max} V")
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    camp = cfg.campaign(seed=args.seed, jobs=args.jobs)
    res = pipeline.run_campaign(camp)
    mc = pipeline.run_mc_baseline(camp, args.n_runs)
    rep = pipeline.compare_budget(res, mc)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "compare.json", asdict(rep))
    print(f"PCE ({rep.pce_dimension} inputs, {rep.pce_runs} runs + {rep.pce_surrogate_evals} surrogate evals):"
          f" {rep.pce_seconds:.1f} s")
    print(f"MC ({rep.mc_runs} runs): {rep.mc_seconds:.1f} s   ratio {rep.ratio:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chargeuq", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out="out"):
        sp.add_argument("--config", help="JSON or TOML config file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--jobs", type=int, default=None, help="parallel simulations")
        sp.add_argument("--out-dir", default=out)
        sp.add_argument("--c-rate", type=float, default=None)
        sp.add_argument("--v-max", type=float, default=None)

    sp = sub.add_parser("simulate", help="one nominal (or overridden) CC-CV run to CSV")
    common(sp)
    sp.add_argument("--set", action="append", metavar="NAME=VALUE", help="override a cell parameter")
    sp.set_defaults(func=cmd_simulate)

    camp = sub.add_parser("campaign", help="PCE campaigns")
    csub = camp.add_subparsers(dest="action", required=True)
    sp = csub.add_parser("run", help="config -> result bundle")
    common(sp)
    sp.add_argument("--threshold", type=float, default=0.1, help="screening threshold")
    sp.add_argument("--two-stage", action="store_true", help="p=1 pilot on every input, then refit")
    sp.set_defaults(func=cmd_campaign)

    mc = sub.add_parser("mc", help="Monte Carlo baseline")
    msub = mc.add_subparsers(dest="action", required=True)
    sp = msub.add_parser("run")
    common(sp)
    sp.add_argument("--n-runs", type=int, default=3000)
    sp.add_argument("--screened", action="store_true", help="sample only the active subset")
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("sobol", help="Sobol series CSV from a campaign bundle")
    sp.add_argument("bundle")
    sp.add_argument("--out-dir", default=None)
    sp.add_argument("--threshold", type=float, default=0.1)
    sp.add_argument("--first-order", action="store_true")
    sp.set_defaults(func=cmd_sobol)

    sp = sub.add_parser("tune", help="grid search for the fastest admissible protocol")
    common(sp)
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--exhaustive", action="store_true")
    sp.set_defaults(func=cmd_tune)

    sp = sub.add_parser("compare", help="PCE vs MC wall-clock report")
    common(sp)
    sp.add_argument("--n-runs", type=int, default=3000)
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, pipeline.CampaignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
