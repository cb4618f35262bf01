import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import laplace_capacity_p2, oracle_capacity
from treehardy import build_homogeneous, cumulate, leaf_measure, path_tree, star_tree
from treehardy.hardy import hardy_apply
from treehardy.potential import (capacity, check_antichain, condenser_capacity, level_set_antichain,
                                 minimal_antichain, sci_audit, single_edge_capacities,
                                 three_arc_capacity, wolff_energy)
from treehardy.scenarios import nullcap_tree, random_tree, random_weights
from treehardy.measures import weight_from_rule
from treehardy.tree import RootedTree, TreeError


def test_full_boundary_depth2():
    t = build_homogeneous(2, 2)
    assert abs(capacity(t, t.leaves).value - 4 / 7) < 1e-12
    assert abs(laplace_capacity_p2(t, t.leaves) - 4 / 7) < 1e-12


def level_quotient(N, p=2.0):
    """Path carrying the level-symmetric reduction of the weighted dyadic tree.

    The 2^d parallel edges at level d with weight 2^-d act as one edge with
    weight 2^d * 2^-d at equal potential drop.
    """
    d = np.arange(N)
    return path_tree(N), 2.0 ** d * 2.0 ** -d


@pytest.mark.parametrize("N", [2, 5, 10, 50])
def test_nullcap(N):
    t, pi = level_quotient(N)
    assert abs(capacity(t, [N - 1], pi).value - 1 / N) <= 1e-10 / N
    if N <= 12:
        full = nullcap_tree(N)
        w = weight_from_rule(full, "exp:-1").values
        assert abs(capacity(full, full.leaves, w).value - 1 / N) <= 1e-10 / N


def test_level_quotient_general_p():
    for p in (1.5, 3.0):
        full = nullcap_tree(8)
        w = weight_from_rule(full, "exp:-1").values
        t, pi = level_quotient(8, p)
        assert np.isclose(capacity(full, full.leaves, w, p).value, capacity(t, [7], pi, p).value)


def test_single_point_capacity(rng):
    for p in (1.5, 2.0, 3.0):
        for _ in range(20):
            n = int(rng.integers(1, 12))
            t = path_tree(n)
            pi = random_weights(rng, t)
            d = np.sum(pi ** (1 - p / (p - 1)))
            assert np.isclose(capacity(t, [n - 1], pi, p).value, d ** (1 - p), rtol=1e-12)
            assert np.isclose(single_edge_capacities(t, pi, p)[-1], d ** (1 - p), rtol=1e-12)


def test_against_laplace_p2(rng):
    for _ in range(50):
        t = random_tree(rng, max_depth=5)
        pi = random_weights(rng, t)
        k = int(rng.integers(1, t.n_edges + 1))
        targets = minimal_antichain(t, rng.choice(t.n_edges, size=k, replace=False))
        ref = laplace_capacity_p2(t, targets, pi)
        assert abs(capacity(t, targets, pi).value - ref) <= 1e-10 * ref


def test_against_convex_oracle(rng):
    for _ in range(30):
        t = random_tree(rng, max_depth=3, max_edges=12)
        pi = random_weights(rng, t)
        p = float(rng.choice([1.5, 2.0, 3.0]))
        targets = minimal_antichain(t, rng.choice(t.n_edges, size=3))
        ref = oracle_capacity(t, targets, pi, p)
        assert abs(capacity(t, targets, pi, p).value - ref) <= 1e-7 * ref


def test_compressed_matches_expanded(rng):
    t = RootedTree([-1, 0, 0, 1, 1], [2, 3, 1, 4, 1])
    plain, origin = t.expand()
    pi = random_weights(rng, t)
    bottoms = t.bottom_of_expansion()
    for p in (1.5, 2.0, 3.0):
        a = capacity(t, [2, 3, 4], pi, p)
        b = capacity(plain, bottoms[[2, 3, 4]], pi[origin], p)
        assert np.isclose(a.value, b.value, rtol=1e-12)
        assert np.allclose(a.equilibrium[origin], b.equilibrium)


def test_equilibrium_properties(rng):
    t = random_tree(rng, max_depth=4)
    targets = tuple(t.leaves.tolist())
    res = capacity(t, targets, None, 2.0)
    f = hardy_apply(t, res.equilibrium)
    assert np.allclose(f[list(targets)], 1)
    assert np.all(res.equilibrium >= 0)
    assert res.residual["potential"] < 1e-12


def test_antichain_errors():
    t = build_homogeneous(2, 2)
    with pytest.raises(ValueError, match="empty"):
        capacity(t, [])
    with pytest.raises(ValueError, match="comparable"):
        capacity(t, [0, 1])
    with pytest.raises(ValueError, match="repeated"):
        check_antichain(t, [1, 1])
    with pytest.raises(TreeError):
        check_antichain(t, [99])
    assert minimal_antichain(t, [1, 3, 4, 2]) == (1, 2)


def test_wolff_energy_fixture():
    t = path_tree(3)
    mu = cumulate(t, [0, 0, 1.0])
    V, E = wolff_energy(t, mu)
    assert V.tolist() == [1, 2, 3] and E == 3
    t2 = build_homogeneous(2, 1)
    V, E = wolff_energy(t2, leaf_measure(t2, [0.5, 0.5]))
    assert E == 1.5


def test_level_sets():
    t = path_tree(3)
    f = np.array([1.0, 2.0, 3.0])
    assert level_set_antichain(t, f, 1.5) == (1,)
    assert level_set_antichain(t, f, 0.0) == (0,)
    assert level_set_antichain(t, f, 3.0) == ()


def test_sci_random(rng):
    for _ in range(60):
        t = random_tree(rng, max_depth=5)
        pi = random_weights(rng, t)
        p = float(rng.choice([1.5, 2.0, 3.0]))
        phi = rng.random(t.n_edges) ** 3 * (rng.random(t.n_edges) < 0.6)
        phi[0] += 1e-3
        rep = sci_audit(t, phi, pi, p)
        assert rep.proven_ok, rep
        assert rep.lhs > 0


def test_sci_two_edge_path_exceeds_geometric_constant():
    """Points of Omega_k outside Omega_(k+1) can escape the level-k test function.

    Path of two edges, p = 1.5: the dyadic level sum is 1.557 ||phi||^p while
    2^p/(2^p-1) = 1.547.  Every capacity here is a one-line series formula.
    """
    p = 1.5
    t = path_tree(2)
    pi = np.array([0.68295018, 0.38243344])
    phi = np.array([0.1, 0.16341126])
    c0 = pi[0]
    c1 = np.sum(pi ** (1 - p / (p - 1))) ** (1 - p)
    # I phi = (0.1, 0.263): levels k <= -4 see {v0}; k = -3, -2 see {v1}
    lhs = c0 * 2 ** (-4 * p) / (1 - 2 ** -p) + c1 * (2 ** (-3 * p) + 2 ** (-2 * p))
    rep = sci_audit(t, phi, pi, p)
    assert np.isclose(rep.lhs, lhs, rtol=1e-12)
    assert np.isclose(rep.norm, np.sum(pi * phi ** p))
    assert not rep.ok and rep.proven_ok
    assert rep.ratio > 1.005 * rep.bound


def test_sci_errors():
    t = path_tree(2)
    with pytest.raises(ValueError):
        sci_audit(t, [-1.0, 1.0])
    with pytest.raises(ValueError):
        sci_audit(t, [0.0, 0.0])
    with pytest.raises(TreeError):
        sci_audit(RootedTree([-1, 0], [1, 2]), [1.0, 1.0])


def test_condenser_path_and_lemma():
    adj = [[1], [0, 2], [1, 3], [2]]
    assert np.isclose(condenser_capacity(adj, [0], [3]), 1 / 3)
    # radius-1 star: every branch has rooted capacity 1
    star = [[1, 2, 3], [0], [0], [0]]
    assert np.isclose(condenser_capacity(star, [1], [2, 3]), three_arc_capacity(1, 1, 1))
    assert np.isclose(three_arc_capacity(1, 1, 1), 2 / 3)
    with pytest.raises(ValueError):
        condenser_capacity(adj, [0], [0])


def test_condenser_against_laplacian(rng):
    for _ in range(20):
        t = random_tree(rng, max_depth=4)
        n = t.n_edges
        adj = [[] for _ in range(n)]
        for i in range(1, n):
            adj[i].append(int(t.parent[i]))
            adj[int(t.parent[i])].append(i)
        A = [int(t.leaves[0])]
        B = [int(v) for v in t.leaves[1:]] or [0]
        if set(A) & set(B):
            continue
        L = np.zeros((n, n))
        for i in range(1, n):
            a, b = i, int(t.parent[i])
            L[a, a] += 1; L[b, b] += 1; L[a, b] -= 1; L[b, a] -= 1
        fixed = np.zeros(n, bool)
        fixed[A + B] = True
        val = np.zeros(n)
        val[A] = 1
        fr = ~fixed
        F = val.copy()
        if fr.any():
            F[fr] = np.linalg.solve(L[np.ix_(fr, fr)], -L[np.ix_(fr, fixed)] @ val[fixed])
        assert np.isclose(condenser_capacity(adj, A, B), F @ L @ F, rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.5, 2.0, 3.0]))
def test_capacity_monotone_and_subadditive(seed, p):
    r = np.random.default_rng(seed)
    t = random_tree(r, max_depth=4)
    pi = random_weights(r, t)
    leaves = t.leaves.tolist()
    a = leaves[: max(1, len(leaves) // 2)]
    b = leaves[len(a):]
    ca = capacity(t, a, pi, p).value
    call = capacity(t, leaves, pi, p).value
    assert ca <= call * (1 + 1e-12)
    if b:
        cb = capacity(t, b, pi, p).value
        assert call <= (ca + cb) * (1 + 1e-12)
    assert call <= single_edge_capacities(t, pi, p)[0] * (1 + 1e-12)
