import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import dense_norm_p2, path_matrix, random_measure_on
from treehardy import build_homogeneous, cumulate, leaf_measure, path_tree, point_mass, zero_measure
from treehardy.conditions import me_sb_constants
from treehardy.hardy import (NormBracket, ascent, hardy_apply, hardy_dual_apply, maximal,
                             maximal_inequalities, norm_bracket, norm_exact_p2, rayleigh_p, t_mu_apply)
from treehardy.scenarios import random_tree, random_weights
from treehardy.tree import RootedTree


def test_hardy_examples():
    t = path_tree(2)
    assert hardy_apply(t, [1, 2]).tolist() == [1, 3]
    assert np.all(hardy_apply(t, [0, 0]) == 0)
    mu = point_mass(t, 1, 5.0)
    assert hardy_dual_apply(t, mu, np.ones(2)).tolist() == [5, 5]


def test_dual_dyadic_example():
    t = build_homogeneous(2, 1)
    mu = leaf_measure(t, [0.5, 0.5])
    psi = np.array([0.0, 2.0, 0.0])
    assert hardy_dual_apply(t, mu, psi).tolist() == [1.0, 1.0, 0.0]


def test_t_mu_examples():
    t = build_homogeneous(2, 1)
    mu = leaf_measure(t, [0.5, 0.5])
    out = t_mu_apply(t, mu)
    assert np.allclose(out[t.leaves], 1.5)
    t1 = path_tree(1)
    assert t_mu_apply(t1, point_mass(t1, 0, 3.0))[0] == 3.0
    assert np.all(t_mu_apply(t, zero_measure(t)) == 0)


def test_t_mu_is_confluent_kernel(rng):
    t = random_tree(rng, max_depth=4)
    mu = random_measure_on(rng, t)
    psi = rng.random(t.n_edges)
    d = (t.vertex_depth)[t.lca_matrix(np.arange(t.n_edges))]
    assert np.allclose(t_mu_apply(t, mu, None, 2, psi), d @ (psi * mu.mass))


def test_duality_identity(rng):
    for _ in range(20):
        t = random_tree(rng, max_depth=5)
        mu = random_measure_on(rng, t)
        phi, psi = rng.normal(size=t.n_edges), rng.normal(size=t.n_edges)
        lhs = np.sum(hardy_apply(t, phi) * psi * mu.mass)
        rhs = np.sum(phi * hardy_dual_apply(t, mu, psi))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_maximal_examples():
    t = build_homogeneous(2, 1)
    mu = leaf_measure(t, [0.5, 0.5])
    M = maximal(t, mu, mu, np.array([0.0, 2.0, 0.0]))
    assert M[1] == 2.0 and M[2] == 1.0
    assert np.allclose(maximal(t, mu, mu, np.full(3, -3.0))[t.leaves], 3.0)
    assert np.all(maximal(t, mu, mu, np.zeros(3)) == 0)


def test_maximal_flags_zero_tents():
    t = build_homogeneous(2, 1)
    mu = point_mass(t, 1)
    M, flags = maximal(t, mu, mu, np.ones(3), return_flags=True)
    assert not flags.any()
    M, flags = maximal(t, zero_measure(t), mu, np.ones(3), return_flags=True)
    assert flags.all() and np.all(M == 0)


def test_maximal_brute(rng):
    t = random_tree(rng, max_depth=4)
    mu, sg = random_measure_on(rng, t), random_measure_on(rng, t)
    f = rng.normal(size=t.n_edges)
    M = maximal(t, mu, sg, f)
    for x in range(t.n_edges):
        cands = [np.sum(np.abs(f[t.descendants(a)]) * sg.mass[t.descendants(a)]) / mu.tent[a]
                 for a in t.path(x) if mu.tent[a] > 0]
        assert np.isclose(M[x], max(cands) if cands else 0.0)


def test_maximal_inequalities_against_scan(rng):
    for _ in range(40):
        t = random_tree(rng, max_depth=4)
        mu, sg = random_measure_on(rng, t), random_measure_on(rng, t)
        psi = rng.random(t.n_edges) ** 2
        p = float(rng.choice([1.5, 2.0, 3.0]))
        rep = maximal_inequalities(t, mu, sg, psi, p)
        M = maximal(t, mu, mu, psi)
        Ms = maximal(t, mu, sg, np.ones(t.n_edges))
        # weak side: any t below a level value v sees sigma(M >= v)
        scan = max(v * sg.mass[M >= v].sum() for v in M) / np.sum(psi * Ms * mu.mass)
        assert np.isclose(rep.weak_ratio, scan)
        assert rep.ok(p)


def test_maximal_weak_bound_is_attained():
    t = build_homogeneous(2, 1)
    mu = leaf_measure(t, [0.5, 0.5])
    rep = maximal_inequalities(t, mu, mu, np.array([0.0, 1.0, 0.0]))
    assert np.isclose(rep.weak_ratio, 1.0)


def test_norm_p2_fixtures():
    t1 = path_tree(1)
    assert np.isclose(norm_exact_p2(t1, point_mass(t1, 0, 2.5)).value, 2.5)
    t = build_homogeneous(2, 1)
    mu = leaf_measure(t, [0.5, 0.5])
    br = norm_exact_p2(t, mu)
    assert abs(br.value - 1.5) < 1e-10 and br.lower == br.upper
    assert abs(norm_exact_p2(t, mu.scaled(7)).value - 10.5) < 1e-9
    assert norm_exact_p2(t, zero_measure(t)).value == 0


def test_norm_p2_dense_oracle(rng):
    for _ in range(40):
        t = random_tree(rng, max_depth=4, max_edges=50)
        mu = random_measure_on(rng, t)
        pi = random_weights(rng, t)
        ref = dense_norm_p2(t, mu, pi)
        assert abs(norm_exact_p2(t, mu, pi).value - ref) <= 1e-9 * ref


def test_norm_p2_compressed_dense_oracle(rng):
    t = RootedTree([-1, 0, 0, 1, 1, 2], [2, 1, 3, 1, 2, 4])
    mu = cumulate(t, rng.random(t.n_edges))
    pi = random_weights(rng, t)
    ref = dense_norm_p2(t, mu, pi)
    assert abs(norm_exact_p2(t, mu, pi).value - ref) <= 1e-9 * ref


def test_sublinearity_p2(rng):
    for _ in range(20):
        t = random_tree(rng, max_depth=4)
        a, b = random_measure_on(rng, t), random_measure_on(rng, t)
        assert norm_exact_p2(t, a + b).value <= (norm_exact_p2(t, a).value
                                                 + norm_exact_p2(t, b).value) * (1 + 1e-9)


def test_bracket_contains_exact_p2(rng):
    for _ in range(15):
        t = random_tree(rng, max_depth=4)
        mu = random_measure_on(rng, t)
        pi = random_weights(rng, t)
        br = norm_bracket(t, mu, pi, 2.0, rng=rng)
        assert br.contains(dense_norm_p2(t, mu, pi), 1e-8)


def test_bracket_single_edge_p3():
    t = path_tree(1)
    br = norm_bracket(t, point_mass(t, 0, 0.7), None, 3.0)
    assert np.isclose(br.lower, 0.7) and np.isclose(br.upper, 0.7)


def test_bracket_zero_measure():
    t = build_homogeneous(2, 2)
    br = norm_bracket(t, zero_measure(t), None, 1.5)
    assert br.lower == br.upper == 0


def test_bracket_general_p_consistent(rng):
    for p in (1.5, 3.0):
        for _ in range(8):
            t = random_tree(rng, max_depth=4)
            mu = random_measure_on(rng, t)
            br = norm_bracket(t, mu, None, p, rng=rng)
            me, _ = me_sb_constants(t, mu, None, p)
            assert me.value <= br.upper * (1 + 1e-9)
            assert br.lower <= br.upper
            # any admissible test function stays below the upper bound
            for _ in range(20):
                phi = rng.random(t.n_edges)
                assert rayleigh_p(t, mu, None, p, phi) <= br.upper * (1 + 1e-9)


def test_bracket_rejects_inversion():
    with pytest.raises(ValueError):
        NormBracket(2.0, 1.0)


def test_mass_energy_ratio_passes_p_to_the_conjugate():
    """At p = 3 the ratio [mu]/[[mu]] passes 3^(3/2) but stays below 3^3.

    Geometric compressed path carrying a discretised x^-p density; a heavy
    root weight removes the initial segment from the mass-energy sums.
    """
    p = 3.0
    D = np.unique(np.round(1000 * 1.2 ** np.arange(150)).astype(np.int64))
    n = D.size
    t = RootedTree(np.arange(-1, n - 1), np.diff(np.concatenate([[0], D])))
    nxt = np.concatenate([D[1:].astype(float), [np.inf]])
    mu = cumulate(t, (D.astype(float) ** (1 - p) - nxt ** (1 - p)) / (p - 1))
    pi = np.ones(n)
    pi[0] = 1e12
    me, _ = me_sb_constants(t, mu, pi, p)
    phi0 = D.astype(float) ** (-1 / p)
    phi0[0] = 0
    low, _ = ascent(t, mu, pi, p, phi0, steps=50_000, rtol=1e-15)
    assert low / me.value > p ** (p / (p - 1))
    assert low / me.value <= p ** p


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.5, 2.0, 3.0]))
def test_ascent_lower_below_upper(seed, p):
    r = np.random.default_rng(seed)
    t = random_tree(r, max_depth=3)
    mu = random_measure_on(r, t)
    val, phi = ascent(t, mu, None, p, r.random(t.n_edges) + 0.01)
    me, _ = me_sb_constants(t, mu, None, p)
    assert val <= p ** p * me.value * (1 + 1e-9)
    assert np.isclose(val, rayleigh_p(t, mu, None, p, phi))


def test_path_matrix_consistency(rng):
    t = random_tree(rng, max_depth=3)
    phi = rng.random(t.n_edges)
    assert np.allclose(path_matrix(t) @ phi, hardy_apply(t, phi))
