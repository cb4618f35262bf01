"""Sweep the truncation level K of the z/w scaffold and tabulate box vs mass-energy constants.

    python3 scripts/box_vs_energy_sweep.py --kmax 8 --csv sweep.csv
"""
import argparse
import csv
import sys
import time

from treehardy.conditions import me_sb_constants
from treehardy.scenarios import MAX_K, generate


def sweep(kmax: int):
    rows, prev, prev_inc = [], None, None
    for K in range(1, kmax + 1):
        t0 = time.perf_counter()
        sc = generate("counterexample83", {"K": K})
        me, sb = me_sb_constants(sc.tree, sc.mu, sc.pi, sc.p)
        root = float(me.table["ratio"][0])
        inc = None if prev is None else root - prev
        rows.append({"K": K, "records": sc.tree.n_edges, "unit_edges": sc.tree.n_unit_edges,
                     "sb": sb.value, "root_me_ratio": root, "increment": inc,
                     "increment_ratio": None if inc is None or prev_inc is None else inc / prev_inc,
                     "target": (K - 1) / K, "seconds": time.perf_counter() - t0})
        prev, prev_inc = root, inc
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmax", type=int, default=8, choices=range(1, MAX_K + 1))
    ap.add_argument("--csv", default=None)
    args = ap.parse_args(argv)
    rows = sweep(args.kmax)
    fmt = lambda v: "-" if v is None else (f"{v:.4f}" if isinstance(v, float) else str(v))  # noqa: E731
    keys = list(rows[0])
    print("  ".join(f"{k:>15}" for k in keys))
    for r in rows:
        print("  ".join(f"{fmt(r[k]):>15}" for k in keys))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, keys)
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    sys.exit(main())
