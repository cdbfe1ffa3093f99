"""Wall-clock of a 300-run PCE campaign against plain MC at several run counts."""
import argparse

from chargeuq.inputs import SCREENED_REFERENCE
from chargeuq.pipeline import CampaignConfig, compare_budget, run_campaign, run_mc_baseline


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mc-runs", type=int, nargs="+", default=[1000, 2000, 3000])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    cfg = CampaignConfig(active=SCREENED_REFERENCE, seed=args.seed, jobs=args.jobs)
    res = run_campaign(cfg)
    print(f"PCE: {res.timing['total_s']:.1f} s ({res.space.n} inputs, {res.timing['n_runs']} runs)")
    for n in args.mc_runs:
        # MC always samples all 24 inputs
        mc = run_mc_baseline(cfg, n)
        rep = compare_budget(res, mc)
        print(f"MC {n}: {rep.mc_seconds:.1f} s  ratio {rep.ratio:.3f}")


if __name__ == "__main__":
    main()
