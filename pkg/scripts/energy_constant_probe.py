"""Ratio of the gradient-ascent lower bound for [mu] to the mass-energy constant on a
geometric compressed path carrying a discretised x^-p density.

    python3 scripts/energy_constant_probe.py --p 3 --growth 1.2 --levels 150
"""
import argparse

import numpy as np

from treehardy import RootedTree, cumulate
from treehardy.conditions import me_sb_constants
from treehardy.hardy import ascent


def probe(p: float, growth: float, levels: int, steps: int):
    D = np.unique(np.round(1000 * growth ** np.arange(levels)).astype(np.int64))
    n = D.size
    t = RootedTree(np.arange(-1, n - 1), np.diff(np.concatenate([[0], D])))
    nxt = np.concatenate([D[1:].astype(float), [np.inf]])
    mu = cumulate(t, (D.astype(float) ** (1 - p) - nxt ** (1 - p)) / (p - 1))
    pi = np.ones(n)
    pi[0] = 1e12  # heavy root edge: keeps the initial segment out of the sums
    me, _ = me_sb_constants(t, mu, pi, p)
    phi0 = D.astype(float) ** (-1 / p)
    phi0[0] = 0
    low, _ = ascent(t, mu, pi, p, phi0, steps=steps, rtol=1e-15)
    return low / me.value, int(D[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=3.0)
    ap.add_argument("--growth", type=float, default=1.2)
    ap.add_argument("--levels", type=int, default=150)
    ap.add_argument("--steps", type=int, default=50_000)
    args = ap.parse_args(argv)
    r, depth = probe(args.p, args.growth, args.levels, args.steps)
    p = args.p
    print(f"depth {depth}: lower/[[mu]] = {r:.4f};  p^(p*) = {p ** (p / (p - 1)):.4f};  p^p = {p ** p:.4f}")


if __name__ == "__main__":
    main()
