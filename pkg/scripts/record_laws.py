"""Record times of the running Kendall maximum against the order-1 and order-2 limit laws.

Pair statistics have time marks whose largest coordinate is max(U1, U2), so its
law is t^2; this script shows which of the two families the data follow.

    python3 scripts/record_laws.py [reps] [p] [n]
"""

import sys

import numpy as np

from extremalpp.experiments import ExperimentConfig, run_experiment
from extremalpp.gof import ks_statistic
from extremalpp.pointproc import expected_record_count
from extremalpp.prmref import record_gap_cdf, record_last_cdf


def main(reps=1000, p=200, n=100):
    cfg = ExperimentConfig("records", "kendall", n=int(n), p=int(p), reps=int(reps), seed=42)
    res = run_experiment(cfg)
    last = res.column("last")
    gap = res.column("gap")
    gap = gap[~np.isnan(gap)]
    print(f"reps={reps} p={p} n={n}")
    for order in (1, 2):
        kl = ks_statistic(last, lambda x: record_last_cdf(np.clip(x, 1e-300, 1), order))
        kg = ks_statistic(gap, lambda x: record_gap_cdf(np.clip(x, 1e-300, 1), order))
        print(f"order {order}: KS(last) = {kl:.4f}  KS(gap) = {kg:.4f}")
    zeta = res.column("zeta")
    print(f"mean records {zeta.mean():.3f}; 1 + log(p/2) = {1 + np.log(int(p) / 2):.3f}; "
          f"1 + sum 2/j = {expected_record_count(int(p)):.3f}")


if __name__ == "__main__":
    main(*sys.argv[1:])
