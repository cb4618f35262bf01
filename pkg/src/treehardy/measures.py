"""Edge weights, exponents and tree measures."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import RootedTree, TreeError

PRIMAL, DUAL, CANONICAL = "primal", "dual", "canonical"


@dataclass(frozen=True)
class Exponent:
    p: float

    def __post_init__(self):
        if not 1.0 < float(self.p) < np.inf:
            raise ValueError(f"exponent must lie in (1, inf), got {self.p}")

    @property
    def conj(self) -> float:
        return self.p / (self.p - 1.0)


def conj(p: float) -> float:
    return Exponent(p).conj


@dataclass(frozen=True, eq=False)
class EdgeWeight:
    """Positive weight per edge record with a role tag (primal, dual, canonical)."""

    values: np.ndarray
    role: str = PRIMAL

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("edge weights must be finite and strictly positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.role not in (PRIMAL, DUAL, CANONICAL):
            raise ValueError(f"unknown weight role {self.role!r}")

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.values.size


def as_weight(tree: RootedTree, w) -> np.ndarray:
    """Accept an EdgeWeight, an array, a scalar or None (meaning 1)."""
    if w is None:
        return np.ones(tree.n_edges)
    arr = np.asarray(w, dtype=float)
    if arr.ndim == 0:
        arr = np.full(tree.n_edges, float(arr))
    if arr.shape != (tree.n_edges,):
        raise ValueError("weight length does not match the tree")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("edge weights must be finite and strictly positive")
    return arr


def pi_sigma_convert(w: EdgeWeight, p, direction: str | None = None) -> EdgeWeight:
    """sigma = pi^(1-p*) and back, pi = sigma^(1-p)."""
    p = p if isinstance(p, Exponent) else Exponent(p)
    if direction is None:
        direction = "to_dual" if w.role != DUAL else "to_primal"
    if direction == "to_dual":
        return EdgeWeight(w.values ** (1.0 - p.conj), DUAL)
    if direction == "to_primal":
        return EdgeWeight(w.values ** (1.0 - p.p), PRIMAL)
    raise ValueError(f"unknown direction {direction!r}")


def canonical_weight(tree: RootedTree) -> EdgeWeight:
    """|omega| = 1 and each edge splits its weight equally among its children."""
    w = np.ones(tree.n_edges)
    for g in tree.generations[1:]:
        par = tree.parent[g]
        w[g] = w[par] / tree.n_children[par]
    return EdgeWeight(w, CANONICAL)


def besov_weight(tree: RootedTree, a: float, p) -> EdgeWeight:
    """pi(alpha) = 2^(-a n) with n the dyadic level of e(alpha); needs 0 <= a p < 1."""
    p = p if isinstance(p, Exponent) else Exponent(p)
    if not 0.0 <= a * p.p < 1.0:
        raise ValueError(f"need 0 <= a*p < 1, got a*p = {a * p.p}")
    _no_depth_varying_chains(tree)
    return EdgeWeight(np.exp(-a * tree.depth * np.log(2.0)), PRIMAL)


def _no_depth_varying_chains(tree: RootedTree):
    if tree.is_compressed:
        raise TreeError("depth-dependent weights vary along compressed chains; expand first")


def weight_from_rule(tree: RootedTree, rule: str, p=2.0) -> EdgeWeight:
    """Named rules: canonical, besov:a, const:c, exp:lam (pi = 2^(lam d))."""
    name, _, arg = rule.partition(":")
    if name == "canonical":
        return canonical_weight(tree)
    if name == "besov":
        return besov_weight(tree, float(arg), p)
    if name == "const":
        return EdgeWeight(np.full(tree.n_edges, float(arg or 1.0)), PRIMAL)
    if name == "exp":
        lam = float(arg)
        if lam != 0.0:
            _no_depth_varying_chains(tree)
        return EdgeWeight(np.exp2(lam * tree.depth.astype(float)), PRIMAL)
    raise ValueError(f"unknown weight rule {rule!r}")


@dataclass(frozen=True, eq=False)
class TreeMeasure:
    """Nonnegative mass per vertex plus the tent table mu(S(alpha))."""

    tree: RootedTree
    mass: np.ndarray
    tent: np.ndarray

    @property
    def total(self) -> float:
        return float(self.tent[0])

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.mass > 0)

    def scaled(self, t: float) -> "TreeMeasure":
        return cumulate(self.tree, t * self.mass)

    def __add__(self, other: "TreeMeasure") -> "TreeMeasure":
        if other.tree is not self.tree:
            raise ValueError("measures live on different trees")
        return cumulate(self.tree, self.mass + other.mass)

    def normalized(self) -> "TreeMeasure":
        return self.scaled(1.0 / self.total) if self.total > 0 else self


def cumulate(tree: RootedTree, mass) -> TreeMeasure:
    mass = np.array(mass, dtype=float)
    if mass.shape != (tree.n_edges,):
        raise ValueError("one mass per vertex required")
    if not np.all(np.isfinite(mass)) or np.any(mass < 0):
        raise ValueError("masses must be finite and nonnegative")
    tent = tree.suffix(mass)
    mass.setflags(write=False)
    tent.setflags(write=False)
    return TreeMeasure(tree, mass, tent)


def zero_measure(tree: RootedTree) -> TreeMeasure:
    return cumulate(tree, np.zeros(tree.n_edges))


def point_mass(tree: RootedTree, vertex: int, m: float = 1.0) -> TreeMeasure:
    mass = np.zeros(tree.n_edges)
    mass[vertex] = m
    return cumulate(tree, mass)


def leaf_measure(tree: RootedTree, leaf_masses) -> TreeMeasure:
    """Masses given in the order of ``tree.leaves``."""
    mass = np.zeros(tree.n_edges)
    mass[tree.leaves] = leaf_masses
    return cumulate(tree, mass)


def lebesgue(tree: RootedTree) -> TreeMeasure:
    """Each leaf carries the canonical weight of its leaf edge."""
    w = canonical_weight(tree).values
    mass = np.zeros(tree.n_edges)
    mass[tree.leaves] = w[tree.leaves]
    return cumulate(tree, mass)
