"""Distribution of the operator norm against the mass-energy and isocapacitary constants at p = 2.

    python3 scripts/sandwich_stats.py --instances 500 --seed 0
"""
import argparse

import numpy as np

from treehardy.conditions import iso_bracket, me_sb_constants
from treehardy.hardy import norm_exact_p2
from treehardy.scenarios import DISTRIBUTIONS, random_measure, random_tree, random_weights


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=300)
    ap.add_argument("--depth", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    me_r, iso_r = {d: [] for d in DISTRIBUTIONS}, {d: [] for d in DISTRIBUTIONS}
    for i in range(args.instances):
        dist = DISTRIBUTIONS[i % len(DISTRIBUTIONS)]
        t = random_tree(rng, max_depth=args.depth)
        mu = random_measure(rng, t, dist)
        pi = random_weights(rng, t)
        lam = norm_exact_p2(t, mu, pi).value
        me, _ = me_sb_constants(t, mu, pi)
        me_r[dist].append(lam / me.value)
        iso_r[dist].append(lam / iso_bracket(t, mu, pi).lower)
    print(f"{'distribution':>12} {'n':>5} {'norm/ME min':>12} {'median':>8} {'max':>8} "
          f"{'norm/ISO max':>13}")
    for d in DISTRIBUTIONS:
        a = np.array(me_r[d])
        print(f"{d:>12} {a.size:5d} {a.min():12.4f} {np.median(a):8.4f} {a.max():8.4f} "
              f"{max(iso_r[d]):13.4f}")
    print("theoretical window: 1 <= norm/ME <= 4")


if __name__ == "__main__":
    main()
