"""Finite rooted trees with a pre-root.

Indexing convention used throughout the package: edges are numbered
``0 .. n-1`` in breadth-first construction order, edge ``0`` is the root
edge ``omega = (o*, o)``, and a vertex is named by the edge that ends at it,
so vertex ``i`` means ``e(alpha_i)``.  The pre-root ``o*`` is ``PREROOT``
(-1) and never carries values.  Vertex functions are therefore arrays of the
same length as edge functions.

An edge record may stand for a unary chain of ``length[i]`` unit edges that
share one weight and carry no mass on their inner vertices; ``d(alpha)`` of
such a record is the depth of its top unit edge.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Hashable, Iterable, Sequence

import numpy as np

PREROOT = -1
MAX_EDGES = 20_000_000


class TreeError(ValueError):
    """Raised for malformed tree input."""


@dataclass(frozen=True)
class DyadicAddress:
    """Dyadic interval I_{n,j} = [(j-1)/2^n, j/2^n), 1 <= j <= 2^n."""

    level: int
    index: int

    def __post_init__(self):
        if self.level < 0 or not 1 <= self.index <= 2 ** self.level:
            raise ValueError(f"invalid dyadic address ({self.level}, {self.index})")

    @property
    def bits(self) -> str:
        if self.level == 0:
            return ""
        return format(self.index - 1, f"0{self.level}b")

    @classmethod
    def from_bits(cls, bits: str) -> "DyadicAddress":
        return cls(len(bits), (int(bits, 2) if bits else 0) + 1)

    def child(self, bit: int) -> "DyadicAddress":
        return DyadicAddress.from_bits(self.bits + str(int(bit)))

    @property
    def interval(self) -> tuple[Fraction, Fraction]:
        n = 2 ** self.level
        return Fraction(self.index - 1, n), Fraction(self.index, n)


class RootedTree:
    """Immutable rooted tree; see the module docstring for indexing."""

    def __init__(self, parent, length=None, labels=None, branching=None):
        parent = np.asarray(parent, dtype=np.int64)
        n = parent.size
        if n == 0:
            raise TreeError("a tree needs at least the root edge")
        if parent[0] != PREROOT or np.any(parent[1:] < 0):
            raise TreeError("edge 0 must be the only edge hanging from the pre-root")
        if np.any(parent[1:] >= np.arange(1, n)):
            raise TreeError("edges must be listed parents-first")
        self.parent = parent
        self.length = (np.ones(n, dtype=np.int64) if length is None
                       else np.asarray(length, dtype=np.int64))
        if self.length.shape != (n,) or np.any(self.length < 1):
            raise TreeError("chain lengths must be positive integers")
        self.labels = tuple(range(n)) if labels is None else tuple(labels)
        self.branching = branching  # set by build_homogeneous
        for a in (self.parent, self.length):
            a.setflags(write=False)

        gen = np.zeros(n, dtype=np.int64)
        depth = np.zeros(n, dtype=np.int64)
        for i in range(1, n):  # parents precede children
            p = parent[i]
            gen[i] = gen[p] + 1
            depth[i] = depth[p] + self.length[p]
        self.gen = gen
        self.depth = depth
        order = np.argsort(gen, kind="stable")
        bounds = np.searchsorted(gen[order], np.arange(gen.max() + 2))
        self._gens = [order[bounds[g]:bounds[g + 1]] for g in range(gen.max() + 1)]

        counts = np.bincount(parent[1:], minlength=n)
        self.child_ptr = np.concatenate([[0], np.cumsum(counts)])
        self.child_idx = np.argsort(parent[1:], kind="stable") + 1
        self.n_children = counts

    # ------------------------------------------------------------------ basics
    @property
    def n_edges(self) -> int:
        return self.parent.size

    def __len__(self):
        return self.n_edges

    def __repr__(self):
        return f"RootedTree(edges={self.n_edges}, unit_edges={self.n_unit_edges}, leaves={self.leaves.size})"

    @property
    def is_compressed(self) -> bool:
        return bool(np.any(self.length > 1))

    @cached_property
    def n_unit_edges(self) -> int:
        return int(self.length.sum())

    def children(self, i: int) -> np.ndarray:
        return self.child_idx[self.child_ptr[i]:self.child_ptr[i + 1]]

    @cached_property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.n_children == 0)

    @cached_property
    def vertex_depth(self) -> np.ndarray:
        """Edge count of [o*, e(alpha)], so the root vertex o has 1."""
        return self.depth + self.length

    @property
    def max_depth(self) -> int:
        """Largest d(alpha) over unit edges."""
        return int((self.vertex_depth - 1).max())

    def _check_vertex(self, x: int) -> int:
        x = int(x)
        if not (x == PREROOT or 0 <= x < self.n_edges):
            raise TreeError(f"unknown vertex {x}")
        return x

    def path(self, x: int) -> list[int]:
        """Edges of [o*, x], top-down."""
        x = self._check_vertex(x)
        out = []
        while x != PREROOT:
            out.append(x)
            x = int(self.parent[x])
        return out[::-1]

    def is_ancestor(self, a: int, b: int) -> bool:
        """True when alpha_b is contained in alpha_a's tent (a == b allowed)."""
        return self.pos[a] <= self.pos[b] < self.pos[a] + self.size[a]

    def confluent(self, x: int, y: int) -> tuple[int, int]:
        """Deepest common vertex x^y and the unit-edge distance d(x, y)."""
        x, y = self._check_vertex(x), self._check_vertex(y)
        a, b = x, y
        while a != b:
            if self.gen_of(a) >= self.gen_of(b):
                a = int(self.parent[a]) if a != PREROOT else a
            else:
                b = int(self.parent[b])
        return a, self._vdepth(x) + self._vdepth(y) - 2 * self._vdepth(a)

    def _vdepth(self, v: int) -> int:
        return 0 if v == PREROOT else int(self.vertex_depth[v])

    def gen_of(self, v: int) -> int:
        return -1 if v == PREROOT else int(self.gen[v])

    def lca_matrix(self, xs: Sequence[int], ys: Sequence[int] | None = None) -> np.ndarray:
        """Pairwise confluents, vectorised by walking the deeper side up."""
        xs = np.asarray(xs, dtype=np.int64)
        ys = xs if ys is None else np.asarray(ys, dtype=np.int64)
        a = np.repeat(xs[:, None], ys.size, axis=1)
        b = np.repeat(ys[None, :], xs.size, axis=0)
        while True:
            diff = a != b
            if not diff.any():
                return a
            ga, gb = self.gen[a], self.gen[b]
            up_a = diff & (ga >= gb)
            up_b = diff & (gb > ga)
            a = np.where(up_a, self.parent[a], a)
            b = np.where(up_b, self.parent[b], b)

    # ------------------------------------------------------- traversal tables
    @cached_property
    def preorder(self) -> np.ndarray:
        order = np.empty(self.n_edges, dtype=np.int64)
        stack = [0]
        k = 0
        while stack:
            i = stack.pop()
            order[k] = i
            k += 1
            stack.extend(self.children(i)[::-1].tolist())
        return order

    @cached_property
    def pos(self) -> np.ndarray:
        pos = np.empty(self.n_edges, dtype=np.int64)
        pos[self.preorder] = np.arange(self.n_edges)
        return pos

    @cached_property
    def size(self) -> np.ndarray:
        """Number of records in each tent (the edge itself included)."""
        return self.suffix(np.ones(self.n_edges, dtype=np.int64))

    def descendants(self, i: int) -> np.ndarray:
        """Records beta with beta contained in alpha_i, in preorder (alpha_i first)."""
        s = self.pos[i]
        return self.preorder[s:s + self.size[i]]

    def prefix(self, values, weighted: bool = True) -> np.ndarray:
        """Sums over [o*, e(alpha)]; chain records count ``length`` times."""
        values = np.asarray(values)
        out = values * self.length if weighted else values.copy()
        for g in self._gens[1:]:
            out[g] += out[self.parent[g]]
        return out

    def prefix_max(self, values) -> np.ndarray:
        out = np.array(values, dtype=float)
        for g in self._gens[1:]:
            out[g] = np.maximum(out[g], out[self.parent[g]])
        return out

    def suffix(self, values) -> np.ndarray:
        """Sums over the tent: out[i] = values[i] + sum of out over children."""
        out = np.array(values, copy=True)
        for g in self._gens[:0:-1]:
            np.add.at(out, self.parent[g], out[g])
        return out

    @property
    def generations(self) -> list[np.ndarray]:
        return self._gens

    # ---------------------------------------------------------- compression
    def expand(self) -> tuple["RootedTree", np.ndarray]:
        """Unit-edge tree plus the record each unit edge came from."""
        if self.n_unit_edges > MAX_EDGES:
            raise TreeError("expanded tree too large")
        parents, origin, bottom = [], [], np.empty(self.n_edges, dtype=np.int64)
        for i in range(self.n_edges):  # parents-first order is preserved
            up = PREROOT if i == 0 else int(bottom[self.parent[i]])
            for _ in range(int(self.length[i])):
                parents.append(up)
                origin.append(i)
                up = len(parents) - 1
            bottom[i] = up
        return RootedTree(parents), np.asarray(origin, dtype=np.int64)

    def bottom_of_expansion(self) -> np.ndarray:
        """Unit-edge index (in ``expand()`` numbering) of each record's bottom edge."""
        return np.cumsum(self.length) - 1

    # ------------------------------------------------------------- dyadic map
    def _require_homogeneous(self, q=None):
        if self.branching is None or (q is not None and self.branching != q):
            raise TreeError("operation needs a tree from build_homogeneous"
                            + (f" with q={q}" if q else ""))

    def dyadic_vertex(self, address: DyadicAddress) -> int:
        self._require_homogeneous(2)
        if address.level > self.max_depth:
            raise TreeError("address level exceeds truncation depth")
        return (2 ** address.level - 1) + (address.index - 1)

    def dyadic_address(self, v: int) -> DyadicAddress:
        self._require_homogeneous(2)
        v = self._check_vertex(v)
        if v == PREROOT:
            raise TreeError("the pre-root has no dyadic address")
        n = int(self.depth[v])
        return DyadicAddress(n, v - (2 ** n - 1) + 1)

    # -------------------------------------------------------------- export
    def to_dict(self) -> dict:
        edges = []
        for i in range(self.n_edges):
            par = None if i == 0 else self.labels[self.parent[i]]
            if self.length[i] > 1:
                edges.append({"chain": {"from": par, "to": self.labels[i],
                                        "length": int(self.length[i])}})
            else:
                edges.append({"child": self.labels[i], "parent": par})
        return {"vertices": list(self.labels), "edges": edges, "root": self.labels[0]}

    @classmethod
    def from_dict(cls, doc: dict) -> "RootedTree":
        try:
            pairs, lengths = [], []
            for e in doc["edges"]:
                if "chain" in e:
                    c = e["chain"]
                    pairs.append((c["to"], c["from"]))
                    lengths.append(int(c["length"]))
                else:
                    pairs.append((e["child"], e["parent"]))
                    lengths.append(int(e.get("length", 1)))
        except (KeyError, TypeError) as exc:
            raise TreeError(f"malformed tree document: {exc}") from exc
        tree = build_from_parent_list(pairs, lengths)
        if "root" in doc and tree.labels[0] != doc["root"]:
            raise TreeError("declared root does not hang from the pre-root")
        return tree


def build_homogeneous(q: int, depth: int) -> RootedTree:
    """Root edge plus q^k edges at depth k, 1 <= k <= depth."""
    if q < 1 or depth < 0:
        raise TreeError("need q >= 1 and depth >= 0")
    n = sum(q ** k for k in range(depth + 1))
    if n > MAX_EDGES:
        raise TreeError(f"{n} edges exceeds the size guard")
    parent = np.empty(n, dtype=np.int64)
    parent[0] = PREROOT
    start, prev = 1, 0
    for k in range(1, depth + 1):
        cnt = q ** k
        parent[start:start + cnt] = prev + np.arange(cnt) // q
        prev, start = start, start + cnt
    return RootedTree(parent, branching=q)


def _is_preroot(label) -> bool:
    return label is None or label == "o*"


def build_from_parent_list(pairs: Iterable[tuple[Hashable, Hashable]],
                           lengths: Sequence[int] | None = None) -> RootedTree:
    """Tree from (child, parent) pairs; the root's parent is ``None`` or ``"o*"``.

    Vertices are relabelled in breadth-first order from the root, children in
    input order, so the result is deterministic.
    """
    pairs = list(pairs)
    lengths = [1] * len(pairs) if lengths is None else list(lengths)
    if len(lengths) != len(pairs):
        raise TreeError("one length per edge required")
    parent_of, length_of, kids = {}, {}, {}
    roots = []
    for (child, par), ln in zip(pairs, lengths):
        if _is_preroot(child):
            raise TreeError("the pre-root cannot be a child")
        if child in parent_of:
            raise TreeError(f"duplicate parent assignment for {child!r}")
        parent_of[child] = par
        length_of[child] = ln
        if _is_preroot(par):
            roots.append(child)
        else:
            kids.setdefault(par, []).append(child)
    unknown = [p for p in kids if p not in parent_of]
    if unknown:
        raise TreeError(f"disconnected vertex {unknown[0]!r} (no parent edge)")
    if len(roots) != 1:
        # a cycle leaves no root at all; otherwise the input has several roots
        if not roots and parent_of:
            raise TreeError("cycle detected")
        raise TreeError(f"expected exactly one root edge, found {len(roots)}")

    order = [roots[0]]
    index = {roots[0]: 0}
    parent = [PREROOT]
    queue = deque([roots[0]])
    while queue:
        v = queue.popleft()
        for c in kids.get(v, ()):
            index[c] = len(order)
            order.append(c)
            parent.append(index[v])
            queue.append(c)
    if len(order) != len(parent_of):
        stray = next(v for v in parent_of if v not in index)
        seen, v = set(), stray
        while v in parent_of and v not in seen and v not in index:
            seen.add(v)
            v = parent_of[v]
        if v in seen:
            raise TreeError("cycle detected")
        raise TreeError(f"disconnected vertex {stray!r}")
    return RootedTree(parent, [length_of[v] for v in order], labels=order)


def path_tree(n: int, lengths=None) -> RootedTree:
    """A single geodesic of n records."""
    return RootedTree(np.arange(-1, n - 1), lengths)


def star_tree(k: int) -> RootedTree:
    """Root edge with k leaf children."""
    return RootedTree([PREROOT] + [0] * k)
