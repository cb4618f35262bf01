"""Root-free Hardy constant on 3-regular truncations, condenser ratios and the
reproducing-kernel toolkit for D(pi)."""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from .conditions import ConditionReport
from .hardy import norm_exact_p2
from .measures import as_weight, cumulate
from .potential import capacity, condenser_capacity
from .tree import RootedTree, TreeError, build_from_parent_list


# ------------------------------------------------------------ truncations
@dataclass(frozen=True, eq=False)
class UnrootedTruncation:
    """Finite tree whose interior vertices all have degree 3; leaves stand for the boundary."""

    adjacency: tuple[tuple[int, ...], ...]
    center: int = 0

    def __post_init__(self):
        adj = tuple(tuple(int(v) for v in nb) for nb in self.adjacency)
        object.__setattr__(self, "adjacency", adj)
        n = len(adj)
        if n < 4:
            raise TreeError("a truncation needs at least one interior vertex")
        n_edges = 0
        for u, nb in enumerate(adj):
            if len(nb) not in (1, 3):
                raise TreeError(f"vertex {u} has degree {len(nb)}; expected 1 or 3")
            for v in nb:
                if not 0 <= v < n or v == u or u not in adj[v]:
                    raise TreeError(f"bad adjacency entry {u} -> {v}")
            n_edges += len(nb)
        if n_edges // 2 != n - 1:
            raise TreeError("adjacency is not a tree")
        if len(adj[self.center]) != 3:
            raise TreeError("center must be interior")
        if len(self._bfs(self.center)[0]) != n:
            raise TreeError("adjacency is not connected")

    @property
    def n_vertices(self) -> int:
        return len(self.adjacency)

    @cached_property
    def leaves(self) -> np.ndarray:
        return np.array([u for u, nb in enumerate(self.adjacency) if len(nb) == 1])

    @cached_property
    def interior(self) -> np.ndarray:
        return np.array([u for u, nb in enumerate(self.adjacency) if len(nb) == 3])

    @cached_property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nb in enumerate(self.adjacency) for v in nb if u < v]

    def _bfs(self, root: int):
        order, parent = [root], {root: None}
        q = deque([root])
        while q:
            u = q.popleft()
            for v in self.adjacency[u]:
                if v not in parent:
                    parent[v] = u
                    order.append(v)
                    q.append(v)
        return order, parent

    def distance(self, u: int, v: int) -> int:
        order, parent = self._bfs(u)
        d = 0
        while v != u:
            v = parent[v]
            d += 1
        return d

    def rooted_at(self, o: int) -> tuple[RootedTree, np.ndarray]:
        """Rooted tree with pre-root attached to ``o`` and the map vertex -> edge record."""
        if not 0 <= o < self.n_vertices or len(self.adjacency[o]) != 3:
            raise TreeError(f"root candidate {o} is not an interior vertex")
        order, parent = self._bfs(o)
        tree = build_from_parent_list([(v, parent[v]) for v in order])
        where = np.empty(self.n_vertices, dtype=np.int64)
        where[np.asarray(tree.labels, dtype=np.int64)] = np.arange(tree.n_edges)
        return tree, where

    def arc(self, u: int, v: int) -> frozenset:
        """Leaves on the v side of the edge {u, v}."""
        if v not in self.adjacency[u]:
            raise TreeError(f"{u} and {v} are not adjacent")
        seen, stack, out = {u, v}, [v], []
        while stack:
            w = stack.pop()
            if len(self.adjacency[w]) == 1:
                out.append(w)
            for z in self.adjacency[w]:
                if z not in seen:
                    seen.add(z)
                    stack.append(z)
        return frozenset(out)

    @cached_property
    def arcs(self) -> list[tuple[tuple[int, int], frozenset]]:
        """Every distinct arc with the directed edge it hangs from; the full boundary is excluded."""
        out, seen = [], set()
        for u, v in self.edges:
            for a, b in ((u, v), (v, u)):
                s = self.arc(a, b)
                if s not in seen and len(s) < self.leaves.size:
                    seen.add(s)
                    out.append(((a, b), s))
        return out

    def laplacian(self) -> np.ndarray:
        n = self.n_vertices
        L = np.zeros((n, n))
        for u, v in self.edges:
            L[u, u] += 1
            L[v, v] += 1
            L[u, v] -= 1
            L[v, u] -= 1
        return L


def build_truncation(radius: int) -> UnrootedTruncation:
    """Ball of the given radius around a center in the 3-regular tree, in BFS order."""
    if radius < 1:
        raise ValueError("radius must be at least 1")
    if radius > 14:
        raise ValueError("radius too large for dense conformal computations")
    adj: list[list[int]] = [[]]
    frontier = [0]
    for r in range(radius):
        nxt = []
        for u in frontier:
            for _ in range(3 if r == 0 else 2):
                v = len(adj)
                adj.append([u])
                adj[u].append(v)
                nxt.append(v)
        frontier = nxt
    return UnrootedTruncation(tuple(tuple(nb) for nb in adj), 0)


def _leaf_vector(tr: UnrootedTruncation, mu) -> np.ndarray:
    m = np.asarray(mu, dtype=float)
    if m.shape != (tr.n_vertices,):
        raise ValueError("one mass per vertex of the truncation required")
    if np.any(m < 0) or not np.all(np.isfinite(m)):
        raise ValueError("masses must be finite and nonnegative")
    if np.any(m[tr.interior] != 0):
        raise ValueError("the measure must live on the leaves")
    if m.sum() <= 0:
        raise ValueError("zero measure")
    return m / m.sum()


def leaf_masses(tr: UnrootedTruncation, values) -> np.ndarray:
    """Vertex mass vector from masses listed in ``tr.leaves`` order."""
    m = np.zeros(tr.n_vertices)
    m[tr.leaves] = values
    return m


# ----------------------------------------------------------- root profile
def rooted_norm(tr: UnrootedTruncation, mu, o: int, tol: float = 1e-12) -> float:
    """[mu]_o at p = 2, pi = 1, with |F(o)|^2 carried by the root edge."""
    m = _leaf_vector(tr, mu)
    tree, where = tr.rooted_at(o)
    mass = np.zeros(tree.n_edges)
    mass[where] = m
    return norm_exact_p2(tree, cumulate(tree, mass), tol=tol).upper


def rooted_norm_profile(tr: UnrootedTruncation, mu, roots: Sequence[int] | None = None):
    """Map o -> [mu]_o over the candidate roots (all interior vertices by default) and its minimum."""
    roots = tr.interior.tolist() if roots is None else [int(o) for o in roots]
    for o in roots:
        if not 0 <= o < tr.n_vertices or len(tr.adjacency[o]) != 3:
            raise TreeError(f"root candidate {o} is not an interior vertex")
    profile = {o: rooted_norm(tr, mu, o) for o in roots}
    return profile, min(profile.values())


def ch_constant(tr: UnrootedTruncation, mu) -> float:
    """Best constant in  int |F - mu(F)|^2 dmu <= C sum |grad F|^2.

    Both forms kill constants, so grounding the center leaves a definite
    Laplacian and the constant is the top generalized eigenvalue.
    """
    m = _leaf_vector(tr, mu)
    Q = np.diag(m) - np.outer(m, m)
    keep = np.arange(tr.n_vertices) != tr.center
    L = tr.laplacian()[np.ix_(keep, keep)]
    Q = Q[np.ix_(keep, keep)]
    top = scipy.linalg.eigh(Q, L, eigvals_only=True, subset_by_index=[Q.shape[0] - 1] * 2)
    return max(float(top[0]), 0.0)


def inv_constant_estimate(tr: UnrootedTruncation, mu, pair_budget: int = 20_000,
                          rng=None) -> ConditionReport:
    """sup over disjoint arc pairs of mu(A) mu(B) / Cap(A, B), with the direct constant alongside.

    Pairs are enumerated exhaustively when there are at most ``pair_budget``
    of them and sampled otherwise.
    """
    m = _leaf_vector(tr, mu)
    ch = ch_constant(tr, m)
    support = np.flatnonzero(m > 0)
    if support.size == 1:
        return ConditionReport("conformal", 0.0, None, 0.0, 0.0,
                               extra={"ch_constant": ch, "boundary_dirac": True, "exhaustive": True})
    arcs = tr.arcs
    mass = [float(m[list(s)].sum()) for _, s in arcs]
    pairs = [(i, j) for i, j in itertools.combinations(range(len(arcs)), 2)
             if mass[i] > 0 and mass[j] > 0 and not (arcs[i][1] & arcs[j][1])]
    exhaustive = len(pairs) <= pair_budget
    if not exhaustive:
        rng = np.random.default_rng(0) if rng is None else rng
        pick = rng.choice(len(pairs), size=pair_budget, replace=False)
        pairs = [pairs[k] for k in sorted(pick)]
    best, witness = 0.0, None
    for i, j in pairs:
        cap = condenser_capacity(tr.adjacency, arcs[i][1], arcs[j][1])
        r = mass[i] * mass[j] / cap
        if r > best:
            best, witness = r, (arcs[i][0], arcs[j][0])
    return ConditionReport("conformal", best, witness, best, ch,
                           extra={"ch_constant": ch, "boundary_dirac": False,
                                  "exhaustive": exhaustive, "pairs": len(pairs)})


def halving_arc(tr: UnrootedTruncation, mu):
    """Directed edge whose arc carries mass in [1/3, 2/3]; its flip gives the complement.

    Walks from the center into the heaviest arc until the mass drops to 2/3.
    Fails when a single leaf holds more than 2/3.
    """
    m = _leaf_vector(tr, mu)
    arc_mass = lambda u, v: float(m[list(tr.arc(u, v))].sum())  # noqa: E731
    u = tr.center
    v = max(tr.adjacency[u], key=lambda w: arc_mass(u, w))
    while arc_mass(u, v) > 2.0 / 3.0:
        nxt = [w for w in tr.adjacency[v] if w != u]
        if not nxt:
            raise ValueError("a single leaf carries more than 2/3 of the mass")
        u, v = v, max(nxt, key=lambda w: arc_mass(v, w))
    return (u, v), arc_mass(u, v)


def random_automorphism(tr: UnrootedTruncation, rng) -> np.ndarray:
    """Random graph automorphism of a ball truncation fixing the center, as a vertex permutation."""
    perm = np.full(tr.n_vertices, -1, dtype=np.int64)
    perm[tr.center] = tr.center
    stack = [(tr.center, None, tr.center, None)]
    while stack:
        u, pu, img, pimg = stack.pop()
        kids = [w for w in tr.adjacency[u] if w != pu]
        targets = [w for w in tr.adjacency[img] if w != pimg]
        if len(kids) != len(targets):
            raise TreeError("truncation is not symmetric about its center")
        targets = [targets[k] for k in rng.permutation(len(targets))]
        for a, b in zip(kids, targets):
            perm[a] = b
            stack.append((a, u, b, img))
    for u, v in tr.edges:
        if perm[v] not in tr.adjacency[perm[u]]:
            raise TreeError("truncation is not symmetric about its center")
    return perm


def push_forward(perm: np.ndarray, mu) -> np.ndarray:
    out = np.zeros_like(np.asarray(mu, dtype=float))
    out[perm] = mu
    return out


def branch_capacity(tr: UnrootedTruncation, o: int, first: int, arc: Sequence[int]) -> float:
    """Cap_o of a leaf set inside the branch through the edge (o, first), with F(o) = 0."""
    order, parent = [first], {first: o}
    q = deque([first])
    while q:
        u = q.popleft()
        for v in tr.adjacency[u]:
            if v not in parent:
                parent[v] = u
                order.append(v)
                q.append(v)
    tree = build_from_parent_list([(v, None if v == first else parent[v]) for v in order])
    index = {lab: i for i, lab in enumerate(tree.labels)}
    targets = [index[a] for a in arc]
    return capacity(tree, targets).value


# ---------------------------------------------------------- kernel tools
def kernel(tree: RootedTree, x: int, y: int, pi=None) -> float:
    """K_x(y) = d_pi(x ^ y): sum of pi^-1 over [o*, x ^ y]."""
    d = tree.prefix(1.0 / as_weight(tree, pi))
    return float(d[tree.confluent(x, y)[0]])


def gram(tree: RootedTree, points: Sequence[int], pi=None) -> np.ndarray:
    d = tree.prefix(1.0 / as_weight(tree, pi))
    return d[tree.lca_matrix(points)]


@dataclass
class KernelReport:
    min_eigenvalue: float
    reproducing_error: float
    sign_rule_error: float
    quadruples: int = 0
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.min_eigenvalue >= -1e-10 and self.reproducing_error <= 1e-10 \
            and self.sign_rule_error <= 1e-10


def reproducing_pairing(tree: RootedTree, phi, x: int, pi=None) -> float:
    """<I phi, K_x>_{D(pi)} = sum pi(alpha) phi(alpha) grad K_x(alpha), with grad taken from K_x itself."""
    w = as_weight(tree, pi)
    d = tree.prefix(1.0 / w)
    kx = d[tree.lca_matrix([x], np.arange(tree.n_edges))[0]]
    above = np.concatenate([[0.0], kx[tree.parent[1:]]])
    grad = (kx - above) / tree.length  # per unit edge along chains
    return float(np.sum(tree.length * w * np.asarray(phi, dtype=float) * grad))


def difference_kernel(tree: RootedTree, a: int, b: int, x: int, y: int, pi=None) -> float:
    """kappa((a,b),(x,y)) = K(x,a) - K(y,a) - K(x,b) + K(y,b)."""
    G = gram(tree, [a, b, x, y], pi)
    return float(G[2, 0] - G[3, 0] - G[2, 1] + G[3, 1])


def _segment(tree: RootedTree, u: int, v: int) -> set[int]:
    return set(tree.path(u)) ^ set(tree.path(v))


def sign_rule(tree: RootedTree, a: int, b: int, x: int, y: int, pi=None) -> float:
    """Geometric prediction: +-d_pi of [a,b] cap [x,y], plus when x sits on a's side."""
    w = as_weight(tree, pi)
    cost = tree.length / w
    common = _segment(tree, a, b) & _segment(tree, x, y)
    if not common:
        return 0.0
    dist = lambda u, v: float(sum(cost[e] for e in _segment(tree, u, v)))  # noqa: E731
    ends = {int(e) for e in common} | {int(tree.parent[e]) for e in common}
    # endpoints of the shared segment: vertices touching exactly one common edge
    touch = {v: sum((e == v) + (int(tree.parent[e]) == v) for e in common) for v in ends}
    p_end, q_end = sorted((v for v, k in touch.items() if k == 1), key=lambda v: dist(a, v))
    length = float(sum(cost[e] for e in common))
    return length if dist(x, p_end) < dist(x, q_end) else -length


def kernel_check(tree: RootedTree, pi=None, points: int = 5, quadruples: int = 200,
                 rng=None) -> KernelReport:
    """Gram positivity, the reproducing identity and the difference-kernel sign rule on samples."""
    rng = np.random.default_rng(0) if rng is None else rng
    n = tree.n_edges
    pts = rng.choice(n, size=min(points, n), replace=False)
    eig = float(np.linalg.eigvalsh(gram(tree, pts, pi)).min())
    rep = 0.0
    for x in pts:
        phi = rng.random(n)
        target = float(tree.prefix(phi)[x])
        rep = max(rep, abs(reproducing_pairing(tree, phi, int(x), pi) - target) / max(target, 1.0))
    sign = 0.0
    for _ in range(quadruples):
        a, b, x, y = (int(v) for v in rng.integers(0, n, size=4))
        got = difference_kernel(tree, a, b, x, y, pi)
        sign = max(sign, abs(got - sign_rule(tree, a, b, x, y, pi)) / max(abs(got), 1.0))
    return KernelReport(eig, rep, sign, quadruples)
