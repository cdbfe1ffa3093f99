"""Grid search over C-rate and CV voltage for the fastest protocol whose
maximum violation probability stays under epsilon."""
import argparse

from chargeuq.cccv import Protocol
from chargeuq.inputs import SCREENED_REFERENCE
from chargeuq.pipeline import CampaignConfig, tune_protocol


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--epsilon", type=float, default=0.01)
    ap.add_argument("--c-rates", type=float, nargs="+", default=[2.2, 2.0])
    ap.add_argument("--v-maxes", type=float, nargs="+", default=[4.1, 4.08])
    ap.add_argument("--n-train", type=int, default=300)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--exhaustive", action="store_true")
    args = ap.parse_args()
    cfg = CampaignConfig(active=SCREENED_REFERENCE, n_train=args.n_train, seed=args.seed, jobs=args.jobs)
    rep = tune_protocol(Protocol(), args.epsilon, args.c_rates, args.v_maxes, cfg, args.exhaustive)
    for c in rep.candidates:
        print(f"{c['c_rate']:.2f}C {c['v_max']:.3f} V  p_max {c['max_probability']:.4f} "
              f"{c['by_constraint']}  end {c['nominal_end_time']:.1f} s")
    print("selected:", rep.selected)


if __name__ == "__main__":
    main()
