"""Wolff potentials, nonlinear capacity on trees, the strong capacitary inequality
and condenser capacity."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .hardy import hardy_apply
from .measures import Exponent, TreeMeasure, as_weight
from .tree import RootedTree, TreeError


def wolff_energy(tree: RootedTree, mu: TreeMeasure, pi=None, p: float = 2.0):
    """Wolff potential V(x) = sum_[o*,x] sigma tent^(p*-1) and the energy sum tent^p* sigma."""
    pe = Exponent(p)
    sigma = as_weight(tree, pi) ** (1.0 - pe.conj)
    v = tree.prefix(sigma * mu.tent ** (pe.conj - 1.0))
    energy = float(np.sum(tree.length * sigma * mu.tent ** pe.conj))
    return v, energy


# ----------------------------------------------------------------- antichains
def minimal_antichain(tree: RootedTree, edges: Iterable[int]) -> tuple[int, ...]:
    """Drop every edge that has an ancestor in the set; sorted output."""
    chosen = set(int(e) for e in edges)
    out = []
    for e in sorted(chosen):
        a = int(tree.parent[e])
        while a >= 0 and a not in chosen:
            a = int(tree.parent[a])
        if a < 0:
            out.append(e)
    return tuple(out)


def check_antichain(tree: RootedTree, edges: Sequence[int]) -> tuple[int, ...]:
    edges = tuple(sorted(int(e) for e in edges))
    if not edges:
        raise ValueError("empty target set")
    if len(set(edges)) != len(edges):
        raise ValueError("repeated target edge")
    for e in edges:
        if not 0 <= e < tree.n_edges:
            raise TreeError(f"unknown edge {e}")
    if minimal_antichain(tree, edges) != edges:
        raise ValueError("targets contain a comparable pair")
    return edges


@dataclass
class CapacityResult:
    value: float
    equilibrium: np.ndarray
    targets: tuple[int, ...]
    residual: dict = field(default_factory=dict)


def _resistivity(tree: RootedTree, pi: np.ndarray, p: float) -> np.ndarray:
    return tree.length * pi ** (-1.0 / (p - 1.0))


def _reduce(tree: RootedTree, target: np.ndarray, r: np.ndarray, p: float):
    """Bottom-up series-parallel pass.

    Returns the capacity c seen from b(alpha) of each subnetwork and the
    resistivity of what hangs below each edge (inf where nothing does).
    """
    n = tree.n_edges
    c = np.zeros(n)
    below = np.zeros(n)  # summed capacities of the children
    with np.errstate(divide="ignore"):
        for g in tree.generations[::-1]:
            rb = below[g] ** (-1.0 / (p - 1.0))  # inf where nothing hangs below
            tot = np.where(target[g], r[g], r[g] + rb)
            c[g] = tot ** (1.0 - p)
            if g[0] != 0:
                np.add.at(below, tree.parent[g], c[g])
        rbelow = below ** (-1.0 / (p - 1.0))
    rbelow[target] = 0.0
    return c, rbelow


def capacity(tree: RootedTree, targets: Sequence[int], pi=None, p: float = 2.0,
             check: bool = True) -> CapacityResult:
    """Cap_{p,pi} of the union of the target tents, with its equilibrium function.

    The equilibrium is per unit edge: on a compressed chain every unit edge
    carries the same value.
    """
    Exponent(p)
    targets = check_antichain(tree, targets)
    pi = as_weight(tree, pi)
    r = _resistivity(tree, pi, p)
    target = np.zeros(tree.n_edges, dtype=bool)
    target[list(targets)] = True
    c, rbelow = _reduce(tree, target, r, p)

    # top-down: split the potential drop available at b(alpha)
    drop = np.zeros(tree.n_edges)
    drop[0] = 1.0
    phi = np.zeros(tree.n_edges)
    for g in tree.generations:
        if g[0] != 0:
            par = tree.parent[g]
            drop[g] = np.where(target[par], 0.0, drop[par] - phi[par] * tree.length[par])
        live = c[g] > 0
        frac = np.where(np.isfinite(rbelow[g]), r[g] / (r[g] + rbelow[g]), 1.0)
        phi[g] = np.where(live, drop[g] * frac / tree.length[g], 0.0)
    value = float(c[0])
    res = CapacityResult(value, phi, targets)
    if check:
        _check_equilibrium(tree, res, pi, p)
    return res


def _check_equilibrium(tree, res: CapacityResult, pi, p):
    hit = hardy_apply(tree, res.equilibrium)[list(res.targets)]
    norm = float(np.sum(tree.length * pi * res.equilibrium ** p))
    res.residual = {"potential": float(np.max(np.abs(hit - 1.0))),
                    "norm": abs(norm - res.value) / max(res.value, 1e-300)}
    if res.residual["potential"] > 1e-8 or res.residual["norm"] > 1e-8:
        raise ArithmeticError(f"equilibrium reconstruction failed: {res.residual}")


def single_edge_capacities(tree: RootedTree, pi=None, p: float = 2.0) -> np.ndarray:
    """Cap(S(alpha)) = d_pi(e(alpha))^(1-p) for every edge at once."""
    pi = as_weight(tree, pi)
    d = tree.prefix(pi ** (1.0 - Exponent(p).conj))
    return d ** (1.0 - p)


# ----------------------------------------------------------- SCI audit
@dataclass
class SCIReport:
    lhs: float
    norm: float
    ratio: float
    bound: float
    levels: list = field(default_factory=list)  # (k, antichain, capacity)
    proven_bound: float = math.inf

    @property
    def ok(self) -> bool:
        """Against 2^p/(2^p-1); this constant can fail, see ``proven_ok``."""
        return self.ratio <= self.bound * (1 + 1e-12)

    @property
    def proven_ok(self) -> bool:
        return self.ratio <= self.proven_bound * (1 + 1e-12)


def level_set_antichain(tree: RootedTree, f: np.ndarray, t: float) -> tuple[int, ...]:
    """Minimal edges alpha with f(e(alpha)) > t >= f(b(alpha)), f(o*) = 0."""
    above = f > t
    par = np.concatenate([[False], above[tree.parent[1:]]])
    if t < 0:
        par[0] = True  # f(o*) = 0 > t: the whole tree is in the level set
    return tuple(np.flatnonzero(above & ~par).tolist())


def sci_audit(tree: RootedTree, phi, pi=None, p: float = 2.0) -> SCIReport:
    """Sum_k 2^(pk) Cap({I phi > 2^k}) against (2^p/(2^p-1)) ||phi||^p."""
    Exponent(p)
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0):
        raise ValueError("phi must be nonnegative")
    if not np.any(phi > 0):
        raise ValueError("phi must not vanish identically")
    if tree.is_compressed:
        raise TreeError("level sets may cut compressed chains; expand first")
    pi = as_weight(tree, pi)
    f = hardy_apply(tree, phi)
    norm = float(np.sum(pi * phi ** p))
    pos = f[f > 0]
    # every 2^k below min(pos) gives the same level set {f > 0}
    k_low = math.ceil(math.log2(pos.min())) - 1
    while 2.0 ** (k_low + 1) < pos.min():
        k_low += 1
    while 2.0 ** k_low >= pos.min():
        k_low -= 1
    levels = []
    base = capacity(tree, level_set_antichain(tree, f, 0.0), pi, p).value
    lhs = base * 2.0 ** (p * k_low) / (1.0 - 2.0 ** (-p))
    levels.append((k_low, level_set_antichain(tree, f, 0.0), base))
    k = k_low + 1
    while 2.0 ** k < f.max():
        ac = level_set_antichain(tree, f, 2.0 ** k)
        cap = capacity(tree, ac, pi, p).value
        lhs += 2.0 ** (p * k) * cap
        levels.append((k, ac, cap))
        k += 1
    bound = 2.0 ** p / (2.0 ** p - 1.0)
    # test 2^(1-k) phi on the edges from the entry into Omega_{k-1} up to the entry into
    # Omega_k, or 2^(k-1) on an edge that jumps a whole level: each edge is used at full
    # weight for at most two k, plus a geometric tail
    proven = 2.0 ** p * (2.0 + bound)
    return SCIReport(lhs, norm, lhs / norm, bound, levels, proven)


# ---------------------------------------------------------- condensers
def condenser_capacity(adjacency: Sequence[Sequence[int]], A: Iterable[int], B: Iterable[int],
                       return_potential: bool = False):
    """Dirichlet energy of the harmonic F with F = 1 on A, F = 0 on B (unit conductances).

    ``adjacency`` must describe a tree.  Elimination runs leaf-to-root: each
    free subtree is summarised by an affine current law ``a V - b`` seen from
    its parent, which is exact on trees (no fill-in).
    """
    A, B = set(int(a) for a in A), set(int(b) for b in B)
    if not A or not B:
        raise ValueError("both plates must be nonempty")
    if A & B:
        raise ValueError("plates intersect")
    n = len(adjacency)
    fixed = np.full(n, np.nan)
    fixed[list(A)] = 1.0
    fixed[list(B)] = 0.0

    root = next(iter(A))
    order, parent = [root], np.full(n, -1)
    seen = np.zeros(n, dtype=bool)
    seen[root] = True
    for u in order:  # BFS; the list grows while iterating
        for v in adjacency[u]:
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                order.append(v)
    if len(order) != n:
        raise TreeError("adjacency is not connected")
    a = np.zeros(n)
    b = np.zeros(n)
    for v in reversed(order[1:]):
        u = parent[v]
        if not np.isnan(fixed[v]):
            a[u] += 1.0
            b[u] += fixed[v]
        else:
            a[u] += a[v] / (1.0 + a[v])
            b[u] += b[v] / (1.0 + a[v])
    pot = np.zeros(n)
    pot[root] = fixed[root]
    for v in order[1:]:
        pot[v] = fixed[v] if not np.isnan(fixed[v]) else (pot[parent[v]] + b[v]) / (1.0 + a[v])
    energy = float(sum((pot[v] - pot[parent[v]]) ** 2 for v in order[1:]))
    return (energy, pot) if return_potential else energy


def three_arc_capacity(c1: float, c2: float, c3: float) -> float:
    """Cap(A1, A2 u A3) from the rooted capacities of three branches at o."""
    return c1 * (c2 + c3) / (c1 + c2 + c3)
