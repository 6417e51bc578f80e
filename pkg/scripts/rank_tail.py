"""Exact-scale tail of Spearman's rho at the Gumbel level versus the normal tail.

Prints C(p, 2) P(rho > d sd) for random permutations next to C(p, 2) P(Z > d),
the two quantities whose ratio sets the mean exceedance count at x = 0.

    python3 scripts/rank_tail.py [n] [p] [draws]
"""

import math
import sys

import numpy as np
from scipy.stats import norm

from extremalpp.datagen import make_rng
from extremalpp.scaling import d_of, rho_variance


def main(n=200, p=100, draws=2_000_000):
    n, p, draws = int(n), int(p), int(draws)
    count = p * (p - 1) // 2
    d = d_of(count)
    thr = d * math.sqrt(rho_variance(n))
    rng = make_rng(7)
    k = 2 * np.arange(1, n + 1) - n - 1
    hits, done = 0, 0
    while done < draws:
        b = min(100_000, draws - done)
        perm = np.argsort(rng.random((b, n)), axis=1) + 1
        rho = 3.0 * ((2 * perm - n - 1) @ k) / (n * (n * n - 1))
        hits += int((rho > thr).sum())
        done += b
    q = hits / draws
    print(f"n={n} p={p} d={d:.5f}")
    print(f"rank tail   C(p,2) P(rho > d sd) = {count * q:.4f} +- {count * math.sqrt(q / draws):.4f}")
    print(f"normal tail C(p,2) P(Z > d)      = {count * norm.sf(d):.4f}")


if __name__ == "__main__":
    main(*sys.argv[1:])
