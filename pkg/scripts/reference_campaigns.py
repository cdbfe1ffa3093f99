"""2.2C/4.1 V and 2.0C/4.08 V campaigns on the screened inputs.

Writes one bundle per protocol under --out-dir and prints the headline
numbers: nominal times, peak temperature, CI crossings of T_max and the
maximum violation probability per constraint.
"""
import argparse
from pathlib import Path

import numpy as np

from chargeuq import io
from chargeuq.cccv import Protocol
from chargeuq.inputs import SCREENED_REFERENCE
from chargeuq.pipeline import CampaignConfig, run_campaign, screen_parameters, violation_probability

CASES = {"2.2C_4.10V": Protocol(2.2, 4.1), "2.0C_4.08V": Protocol(2.0, 4.08, v_limit=4.1)}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--n-train", type=int, default=300)
    ap.add_argument("--out-dir", default="results/reference")
    args = ap.parse_args()
    for tag, proto in CASES.items():
        cfg = CampaignConfig(protocol=proto, active=SCREENED_REFERENCE, n_train=args.n_train,
                             seed=args.seed, jobs=args.jobs)
        res = run_campaign(cfg)
        viol = violation_probability(res)
        io.write_bundle(res, Path(args.out_dir) / tag, viol,
                        {"screened": sorted(screen_parameters(res))})
        T = res.qois["temperature"]
        over = T.time[(T.ci_hi >= proto.t_max) & ~T.excluded]
        span = f"{over.min():.0f}-{over.max():.0f} s" if over.size else "never"
        print(f"{tag}: switch {res.nominal.switch_time:.1f} s, end {res.nominal.end_time:.1f} s, "
              f"peak T {np.nanmax(T.nominal):.2f} K, upper CI >= T_max {span}, "
              f"p_max {viol.max_by_constraint}, {res.timing['total_s']:.0f} s")


if __name__ == "__main__":
    main()
