"""Scenario generators for the worked examples and randomized instance factories."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .measures import TreeMeasure, cumulate, weight_from_rule
from .tree import RootedTree, TreeError, build_homogeneous

MAX_K = 10


@dataclass(eq=False)
class Scenario:
    name: str
    params: dict
    seed: int
    tree: RootedTree
    pi: np.ndarray
    mu: TreeMeasure
    p: float = 2.0
    claim: str = ""
    expected: str = ""
    extra: dict = field(default_factory=dict)

    def weight_doc(self) -> dict:
        return {str(lab): float(w) for lab, w in zip(self.tree.labels, self.pi)}

    def measure_doc(self) -> dict:
        return {str(self.tree.labels[i]): float(self.mu.mass[i]) for i in self.mu.support}


# ---------------------------------------------------------------- factories
def random_tree(rng, max_depth: int = 5, max_children: int = 3, max_edges: int | None = None,
                leaf_prob: float = 0.3) -> RootedTree:
    """Random plain tree grown generation by generation; depth d(alpha) stays <= max_depth."""
    parent = [-1]
    frontier = [0]
    for _ in range(max_depth):
        nxt = []
        for v in frontier:
            if v != 0 and rng.random() < leaf_prob:
                continue
            for _ in range(int(rng.integers(1, max_children + 1))):
                if max_edges is not None and len(parent) >= max_edges:
                    break
                parent.append(v)
                nxt.append(len(parent) - 1)
        frontier = nxt
        if not frontier:
            break
    return RootedTree(parent)


def random_weights(rng, tree: RootedTree, spread: float = 4.0) -> np.ndarray:
    """Log-uniform edge weights in [1/spread, spread]."""
    return np.exp(rng.uniform(-np.log(spread), np.log(spread), tree.n_edges))


DISTRIBUTIONS = ("uniform", "dirichlet", "pareto", "sparse", "point")


def random_masses(rng, size: int, distribution: str = "uniform") -> np.ndarray:
    if distribution == "uniform":
        m = rng.random(size)
    elif distribution == "dirichlet":
        m = rng.dirichlet(np.full(size, 0.5))
    elif distribution == "pareto":
        m = rng.pareto(1.5, size)
    elif distribution == "sparse":
        m = rng.random(size) * (rng.random(size) < 0.3)
        if not m.any():
            m[rng.integers(size)] = 1.0
    elif distribution == "point":
        m = np.zeros(size)
        m[rng.integers(size)] = 1.0
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    return m


def random_measure(rng, tree: RootedTree, distribution: str = "uniform",
                   leaves_only: bool = False) -> TreeMeasure:
    mass = np.zeros(tree.n_edges)
    where = tree.leaves if leaves_only else np.arange(tree.n_edges)
    mass[where] = random_masses(rng, where.size, distribution)
    if not mass.any():
        mass[where[0]] = 1.0
    return cumulate(tree, mass)


# ------------------------------------------------------- worked examples
def _n(k: int) -> int:
    return 2 ** k * k


def _m(k: int) -> int:
    return 2 ** k * k * k


def counterexample_tree(K: int):
    """Compressed z/x/w/y scaffold with pi = 1, p = 2 and atoms 1/M_k at the w's.

    Returns the tree, the masses and the record indices of the z vertices per level.
    Only branches that carry mass are kept.
    """
    if not 1 <= K <= MAX_K:
        raise ValueError(f"K must lie in [1, {MAX_K}] (size guard), got {K}")
    parent, length, labels, mass = [-1], [1], ["z0_1"], [0.0]
    zs = {0: [0]}

    def add(par, ln, lab, m=0.0):
        parent.append(par)
        length.append(ln)
        labels.append(lab)
        mass.append(m)
        return len(parent) - 1

    for k in range(0, K + 1):
        nxt = []
        for n, z in enumerate(zs[k], start=1):
            if k >= 1:
                x = add(z, 1, f"x{k}_{n}")
                w_level = max(_m(k), _n(k) + 1)
                if w_level > _n(k) + 1:
                    add(x, w_level - _n(k) - 1, f"w{k}_{n}", 1.0 / _m(k))
                else:
                    mass[x] = 1.0 / _m(k)
                    labels[x] = f"w{k}_{n}"
            if k < K:
                y = add(z, 1, f"y{k}_{n}")
                for c in (2 * n - 1, 2 * n):
                    nxt.append(add(y, _n(k + 1) - _n(k) - 1, f"z{k + 1}_{c}"))
        if k < K:
            zs[k + 1] = nxt
    tree = RootedTree(parent, length, labels=labels)
    return tree, np.array(mass), zs


def counterexample_tent(k: int, K: int) -> float:
    """Closed form for mu(S(z^k)) on the truncation at K."""
    start = 1 if k == 0 else 0
    return float(sum(2.0 ** j / _m(k + j) for j in range(start, K - k + 1)))


def nullcap_tree(N: int) -> RootedTree:
    """Dyadic tree whose leaf edges sit at level N - 1, so the root-to-leaf chains have N edges."""
    if N < 1:
        raise ValueError("N must be positive")
    return build_homogeneous(2, N - 1)


# ---------------------------------------------------------------- generate
def generate(name: str, params: dict | None = None, seed: int = 0) -> Scenario:
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    if name == "counterexample83":
        K = int(params.get("K", 3))
        tree, mass, zs = counterexample_tree(K)
        return Scenario(name, {"K": K}, seed, tree, np.ones(tree.n_edges), cumulate(tree, mass),
                        2.0, "simple box condition holds but mass-energy fails",
                        "SB bounded in K, root ME sum grows like a harmonic series",
                        {"z": {k: v for k, v in zs.items()}})
    if name == "nullcap":
        N = int(params.get("N", 10))
        tree = nullcap_tree(N)
        pi = weight_from_rule(tree, "exp:-1").values
        mass = np.zeros(tree.n_edges)
        mass[tree.leaves] = 2.0 ** -(N - 1)
        return Scenario(name, {"N": N}, seed, tree, pi, cumulate(tree, mass), 2.0,
                        "boundary capacity tends to zero", "capacity of all leaves = 1/N")
    if name == "bounded_boundary":
        lam = float(params.get("lam", params.get("lambda", 1.0)))
        depth = int(params.get("depth", 5))
        p = float(params.get("p", 2.0))
        if lam <= 0:
            raise ValueError("lambda must be positive")
        tree = build_homogeneous(2, depth)
        pi = weight_from_rule(tree, f"exp:{lam * (p - 1.0)}", p).values
        mass = np.zeros(tree.n_edges)
        mass[tree.leaves] = random_masses(rng, tree.leaves.size, "uniform")
        return Scenario(name, {"lam": lam, "depth": depth, "p": p}, seed, tree, pi,
                        cumulate(tree, mass), p, "every boundary point has positive capacity",
                        "point capacities bounded below, bounded measures pass ME")
    if name == "random":
        depth = int(params.get("depth", 4))
        dist = str(params.get("distribution", "uniform"))
        p = float(params.get("p", 2.0))
        tree = build_homogeneous(2, depth)
        mass = np.zeros(tree.n_edges)
        mass[tree.leaves] = random_masses(rng, tree.leaves.size, dist)
        return Scenario(name, {"depth": depth, "distribution": dist, "p": p}, seed, tree,
                        np.ones(tree.n_edges), cumulate(tree, mass), p,
                        "random leaf measure", "bracket and conditions consistent")
    if name == "dyadic_besov":
        a = float(params.get("a", 0.25))
        p = float(params.get("p", 2.0))
        depth = int(params.get("depth", 5))
        tree = build_homogeneous(2, depth)
        pi = weight_from_rule(tree, f"besov:{a}", p).values
        mass = np.zeros(tree.n_edges)
        mass[tree.leaves] = 2.0 ** -depth
        return Scenario(name, {"a": a, "p": p, "depth": depth}, seed, tree, pi,
                        cumulate(tree, mass), p, "dyadic interval model with Besov weight",
                        "Lebesgue measure on the leaves")
    raise ValueError(f"unknown scenario {name!r}")


SCENARIOS = ("counterexample83", "nullcap", "bounded_boundary", "random", "dyadic_besov")


def parse_params(items) -> dict[str, Any]:
    """``key=value`` strings to a dict; numbers are converted when they parse."""
    out: dict[str, Any] = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"parameter {item!r} is not key=value")
        try:
            out[key] = int(val)
        except ValueError:
            try:
                out[key] = float(val)
            except ValueError:
                out[key] = val
    return out


__all__ = ["Scenario", "generate", "random_tree", "random_weights", "random_measure",
           "random_masses", "counterexample_tree", "counterexample_tent", "nullcap_tree",
           "SCENARIOS", "DISTRIBUTIONS", "parse_params", "TreeError"]
