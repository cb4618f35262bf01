"""Trace-measure condition constants: mass-energy, simple box, isocapacitary,
s-testing, Muckenhoupt-Wheeden quantities, supermartingale diagnostics,
compactness tails and the Bessel kernel comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .measures import Exponent, TreeMeasure, as_weight, canonical_weight
from .potential import _reduce, _resistivity, capacity, single_edge_capacities
from .tree import RootedTree, TreeError


@dataclass
class ConditionReport:
    name: str
    value: float
    witness: Any = None
    lower: float | None = None
    upper: float | None = None
    table: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def _safe_div(num, den):
    out = np.zeros_like(num, dtype=float)
    np.divide(num, den, out=out, where=den > 0)
    return out


# ------------------------------------------------------------- ME and SB
def me_sb_constants(tree: RootedTree, mu: TreeMeasure, pi=None, p: float = 2.0):
    """Mass-energy constant [[mu]] and simple-box constant [[mu]]_sc.

    The ME ratio at alpha is sum_{beta in S(alpha)} sigma tent^p* / tent(alpha),
    which equals [[mu]]^(p*-1); ``value`` is reported in [[mu]] units.
    Edges with zero tent are skipped.
    """
    pe = Exponent(p)
    sigma = as_weight(tree, pi) ** (1.0 - pe.conj)
    inner = tree.suffix(tree.length * sigma * mu.tent ** pe.conj)
    ratio = _safe_div(inner, mu.tent)
    k = int(np.argmax(ratio))
    me = ConditionReport("mass-energy", float(ratio[k]) ** (p - 1.0), k,
                         table={"tent": mu.tent, "inner": inner, "ratio": ratio},
                         extra={"ratio": float(ratio[k])})
    sb_vals = mu.tent * tree.prefix(sigma) ** (p - 1.0)
    j = int(np.argmax(sb_vals))
    sb = ConditionReport("simple-box", float(sb_vals[j]), j, table={"sb": sb_vals})
    return me, sb


def me_ratio_at(tree: RootedTree, mu: TreeMeasure, pi, p: float, edge: int) -> float:
    """Direct re-evaluation of the ME ratio at one edge (witness check)."""
    pe = Exponent(p)
    sigma = as_weight(tree, pi) ** (1.0 - pe.conj)
    d = tree.descendants(edge)
    if mu.tent[edge] <= 0:
        return 0.0
    return float(np.sum(tree.length[d] * sigma[d] * mu.tent[d] ** pe.conj) / mu.tent[edge])


# ------------------------------------------------------------------- ISO
def _cap_value(tree, members, r, p) -> float:
    mask = np.zeros(tree.n_edges, dtype=bool)
    mask[list(members)] = True
    c, _ = _reduce(tree, mask, r, p)
    return float(c[0])


def _pareto_dp(tree, mu, r, p, allowed, limit):
    """Exact search over antichains through (mass, capacity) Pareto frontiers.

    For a fixed total mass a smaller capacity seen from b(alpha) is always
    better, because series and parallel composition are monotone.  Frontiers
    larger than ``limit`` are thinned, which makes the result a lower bound.
    """
    ex = -1.0 / (p - 1.0)
    fronts: dict[int, list] = {}
    truncated = False
    for g in tree.generations[::-1]:
        for i in g.tolist():
            kids = tree.children(i).tolist()
            comb = [(0.0, 0.0, ())]
            for ch in kids:
                fc = fronts.pop(ch)
                comb = _prune([(m1 + m2, c1 + c2, a1 + a2)
                               for m1, c1, a1 in comb for m2, c2, a2 in fc])
                if len(comb) > limit:
                    comb, truncated = _thin(comb, limit), True
            front = []
            for m, c, ac in comb:
                if c > 0:
                    front.append((m, (r[i] + c ** ex) ** (1.0 - p), ac))
                else:
                    front.append((m, 0.0, ac))
            if allowed[i] and mu.tent[i] > 0:
                front.append((float(mu.tent[i]), float(r[i] ** (1.0 - p)), (i,)))
            fronts[i] = _prune(front)
    root = fronts[0]
    best = max((m / c, ac) for m, c, ac in root if c > 0) if len(root) > 1 else (0.0, ())
    return best[0], best[1], truncated


def _prune(entries):
    entries.sort(key=lambda t: (-t[0], t[1]))
    out, cmin = [], math.inf
    for e in entries:
        if e[1] < cmin:
            out.append(e)
            cmin = e[1]
    return out


def _thin(entries, limit):
    idx = np.unique(np.linspace(0, len(entries) - 1, limit).round().astype(int))
    return [entries[i] for i in idx]


def _local_search(tree, mu, r, p, allowed, start, max_evals):
    cand = [i for i in range(tree.n_edges) if allowed[i] and mu.tent[i] > 0]

    def score(ac):
        return float(mu.tent[list(ac)].sum()) / _cap_value(tree, ac, r, p)

    cur = tuple(sorted(start))
    best = score(cur)
    evals = 0
    while evals < max_evals:
        moves = set()
        cs = set(cur)
        for e in cand:
            if e in cs:
                continue
            keep = [a for a in cur if not (tree.is_ancestor(a, e) or tree.is_ancestor(e, a))]
            moves.add(tuple(sorted(keep + [e])))
        for e in cur:
            rest = [a for a in cur if a != e]
            if rest:
                moves.add(tuple(rest))
            kids = [c for c in tree.children(e).tolist() if allowed[c] and mu.tent[c] > 0]
            if kids:
                moves.add(tuple(sorted(rest + kids)))
        step = None
        for mv in sorted(moves):
            evals += 1
            s = score(mv)
            if s > best * (1 + 1e-13):
                best, step = s, mv
            if evals >= max_evals:
                break
        if step is None:
            break
        cur = step
    return best, cur


def iso_bracket(tree: RootedTree, mu: TreeMeasure, pi=None, p: float = 2.0,
                budget: int = 2000, min_depth: int = 0) -> ConditionReport:
    """Bracket for the isocapacitary constant sup sum tent(alpha_i) / Cap(union of tents).

    The sup runs over antichains (pairwise disjoint tents), optionally
    restricted to edges with d(alpha) >= ``min_depth``.
    """
    pe = Exponent(p)
    if tree.is_compressed:
        raise TreeError("antichain search needs an expanded tree")
    pi = as_weight(tree, pi)
    allowed = tree.depth >= min_depth
    if not np.any(allowed & (mu.tent > 0)):
        return ConditionReport("isocapacitary", 0.0, (), 0.0, 0.0, extra={"exact": True})
    single = np.where(allowed, mu.tent / single_edge_capacities(tree, pi, p), 0.0)
    k = int(np.argmax(single))
    lower, witness, method = float(single[k]), (k,), "single edge"

    r = _resistivity(tree, pi, p)
    val, ac, truncated = _pareto_dp(tree, mu, r, p, allowed, budget)
    if val > lower:
        lower, witness, method = val, ac, "pareto enumeration"
    if truncated:
        val, ac = _local_search(tree, mu, r, p, allowed, witness, budget * 10)
        if val > lower:
            lower, witness, method = val, ac, "local search"
    witness = tuple(sorted(witness))
    me, _ = me_sb_constants(tree, mu, pi, p)
    upper = lower if not truncated else max(lower, pe.p ** pe.p * me.value)
    lower, upper = float(lower), float(upper)
    return ConditionReport("isocapacitary", lower, witness, lower, upper,
                           extra={"exact": not truncated, "method": method,
                                  "single_edge": float(single[k])})


def iso_ratio(tree, mu, pi, p, antichain) -> float:
    return float(mu.tent[list(antichain)].sum()) / capacity(tree, antichain, pi, p).value


# ------------------------------------------------------------- s-testing
def s_testing(tree: RootedTree, mu: TreeMeasure, s: float) -> ConditionReport:
    """[[mu]]_s at p = 2, pi = 1.

    Inside S(alpha) the confluent depth is counted from alpha, so at s = 1
    the value is exactly the ME ratio.
    """
    if s < 1:
        raise ValueError("s-testing needs s >= 1")
    P = tree.prefix(mu.tent)
    vals = np.zeros(tree.n_edges)
    for a in np.flatnonzero(mu.tent > 0):
        d = tree.descendants(a)
        g = P[d] - (P[a] - tree.length[a] * mu.tent[a])
        vals[a] = np.sum(mu.mass[d] * g ** s) / mu.tent[a]
    k = int(np.argmax(vals))
    return ConditionReport(f"s-testing(s={s:g})", float(vals[k]), k, table={"value": vals})


def localized_potential(tree: RootedTree, mu: TreeMeasure, edge: int) -> np.ndarray:
    """y -> integral over S(alpha) of the confluent depth counted from alpha, on S(alpha)."""
    P = tree.prefix(mu.tent)
    d = tree.descendants(edge)
    out = np.zeros(tree.n_edges)
    out[d] = P[d] - (P[edge] - tree.length[edge] * mu.tent[edge])
    return out


# ------------------------------------------------------ MW and Bessel
def _require_leaf_measure(tree, mu, homogeneous=True):
    if homogeneous:
        tree._require_homogeneous()
    interior = np.setdiff1d(np.arange(tree.n_edges), tree.leaves)
    if np.any(mu.mass[interior] > 0):
        raise ValueError("measure must be supported on leaves")


@dataclass
class MWReport:
    L: float
    M: float
    M_energy: float
    R: float
    pointwise_ok: bool
    per_leaf: dict = field(default_factory=dict)

    @property
    def chain_ok(self) -> bool:
        return self.pointwise_ok and self.R <= self.M * (1 + 1e-12) and self.M <= self.L * (1 + 1e-12)


def mw_quantities(tree: RootedTree, mu: TreeMeasure, s: float, p: float) -> MWReport:
    pe = Exponent(p)
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    _require_leaf_measure(tree, mu)
    w = canonical_weight(tree).values
    t = mu.tent / w ** s
    lv = tree.leaves
    dx = w[lv]
    sum_then_pow = tree.prefix(t)[lv] ** pe.conj
    pow_then_sum = tree.prefix(t ** pe.conj)[lv]
    sup_then_pow = tree.prefix_max(t)[lv] ** pe.conj
    tol = 1e-12
    ok = bool(np.all(sup_then_pow <= pow_then_sum * (1 + tol))
              and np.all(pow_then_sum <= sum_then_pow * (1 + tol)))
    energy = float(np.sum(mu.tent ** pe.conj * w ** (1.0 - s * pe.conj)))
    return MWReport(float(dx @ sum_then_pow), float(dx @ pow_then_sum), energy,
                    float(dx @ sup_then_pow), ok,
                    {"L": sum_then_pow, "M": pow_then_sum, "R": sup_then_pow})


@dataclass
class BesselReport:
    direct: np.ndarray
    identity: np.ndarray
    tent_sum: np.ndarray
    max_abs_diff: float
    bounds_ok: bool
    energy_bessel: float
    energy_pi: float

    @property
    def energy_ratio(self) -> float:
        return self.energy_bessel / self.energy_pi if self.energy_pi > 0 else float("nan")


def bessel_check(tree: RootedTree, mu: TreeMeasure, s: float, p: float) -> BesselReport:
    """G*_s mu at the leaves by kernel summation and by the tent-sum identity."""
    pe = Exponent(p)
    if not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    _require_leaf_measure(tree, mu)
    q = tree.branching
    w = canonical_weight(tree).values
    lv = tree.leaves
    lca = tree.lca_matrix(lv)
    direct = (w[lca] ** -s) @ mu.mass[lv]
    tsum = tree.prefix(mu.tent / w ** s)[lv]
    identity = mu.total + (1.0 - q ** -s) * (tsum - mu.total)
    tol = 1e-12 * max(1.0, float(np.max(tsum, initial=0.0)))
    ok = bool(np.all((1.0 - q ** -s) * tsum <= direct + tol) and np.all(direct <= tsum + tol))
    e_b = float(w[lv] @ direct ** pe.conj)
    e_pi = float(np.sum(mu.tent ** pe.conj * w ** (1.0 - s * pe.conj)))
    return BesselReport(direct, identity, tsum, float(np.max(np.abs(direct - identity))),
                        ok, e_b, e_pi)


# ------------------------------------------------- supermartingale checks
@dataclass
class SupermartingaleReport:
    drift_ok: bool
    jump_ok: bool
    worst_drift: float  # max of mean-log-child minus (log parent - drift)
    worst_jump: float   # max of child / (2^s parent)
    growth: np.ndarray  # max_alpha |B(alpha,k)| / 2^(k/2), k = 0..
    edges_tested: int


def supermartingale_diag(tree: RootedTree, mu: TreeMeasure, s: float,
                         r: float = 0.25) -> SupermartingaleReport:
    tree._require_homogeneous(2)
    w = canonical_weight(tree).values
    phi = mu.tent / w ** s
    with np.errstate(divide="ignore"):
        lphi = np.log(phi)
    drift = (1.0 - s) * math.log(2.0)
    worst_d, worst_j, tested = -math.inf, 0.0, 0
    for a in range(tree.n_edges):
        kids = tree.children(a)
        if kids.size != 2 or phi[a] <= 0:
            continue
        tested += 1
        worst_d = max(worst_d, 0.5 * (lphi[kids[0]] + lphi[kids[1]]) - (lphi[a] - drift))
        worst_j = max(worst_j, float(phi[kids].max() / (2.0 ** s * phi[a])))
    kmax = tree.max_depth
    growth = np.zeros(kmax + 1)
    for a in np.flatnonzero(phi > 0):
        d = tree.descendants(a)
        k = tree.depth[d] - tree.depth[a]
        hit = phi[d] >= phi[a] * (1.0 - r) ** k * (1 - 1e-12)
        counts = np.bincount(k[hit], minlength=kmax + 1)
        growth = np.maximum(growth, counts / 2.0 ** (np.arange(kmax + 1) / 2.0))
    scale = max(1.0, abs(drift))
    return SupermartingaleReport(worst_d <= 1e-12 * scale, worst_j <= 1 + 1e-12,
                                 float(worst_d), float(worst_j), growth, tested)


# ----------------------------------------------------------------- tails
@dataclass
class TailsReport:
    me: np.ndarray
    capacitary: np.ndarray | None

    @property
    def nonincreasing(self) -> bool:
        ok = bool(np.all(np.diff(self.me) <= 1e-12 * max(1.0, self.me.max(initial=0.0))))
        if self.capacitary is not None:
            c = self.capacitary
            ok = ok and bool(np.all(np.diff(c) <= 1e-12 * max(1.0, c.max(initial=0.0))))
        return ok


def compact_tails(tree: RootedTree, mu: TreeMeasure, pi=None, p: float = 2.0,
                  capacitary: bool = True, budget: int = 500) -> TailsReport:
    """n -> max of the ME ratio over unit edges with d(alpha) >= n, n = 0..depth+1.

    Along a compressed chain the ratio decreases with depth, so each record
    contributes its top value for n <= d and a linear profile inside the chain.
    """
    pe = Exponent(p)
    sigma = as_weight(tree, pi) ** (1.0 - pe.conj)
    me, _ = me_sb_constants(tree, mu, pi, p)
    inner, tent = me.table["inner"], mu.tent
    D = tree.max_depth
    top = np.zeros(D + 2)
    np.maximum.at(top, tree.depth, me.table["ratio"])
    tail = np.maximum.accumulate(top[::-1])[::-1]
    for i in np.flatnonzero((tree.length > 1) & (tent > 0)):
        d0, L = int(tree.depth[i]), int(tree.length[i])
        j = np.arange(1, L)
        prof = (inner[i] - j * sigma[i] * tent[i] ** pe.conj) / tent[i]
        seg = slice(d0 + 1, d0 + L)
        tail[seg] = np.maximum(tail[seg], prof)
    tail = np.maximum.accumulate(tail[::-1])[::-1]
    cap = None
    if capacitary and not tree.is_compressed:
        cap = np.array([iso_bracket(tree, mu, pi, p, budget=budget, min_depth=n).lower
                        for n in range(D + 2)])
        cap = np.maximum.accumulate(cap[::-1])[::-1]
    return TailsReport(tail, cap)
