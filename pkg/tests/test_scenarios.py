import numpy as np
import pytest

from treehardy.conditions import me_sb_constants
from treehardy.potential import capacity, single_edge_capacities
from treehardy.scenarios import (DISTRIBUTIONS, SCENARIOS, counterexample_tent, counterexample_tree,
                                 generate, parse_params, random_measure, random_tree)


def test_counterexample_tents_closed_form():
    K = 3
    tree, mass, zs = counterexample_tree(K)
    tent = tree.suffix(mass)
    for k, nodes in zs.items():
        for z in nodes:
            assert np.isclose(tent[z], counterexample_tent(k, K), rtol=1e-13)
    # atoms 1/M_k, 2^k of them at level k
    assert np.isclose(mass.sum(), sum(2 ** k / (2 ** k * k * k) for k in range(1, K + 1)))


def test_counterexample_levels():
    tree, mass, zs = counterexample_tree(4)
    for k, nodes in zs.items():
        assert len(nodes) == 2 ** k
        if k:
            # levels count from o, one below the pre-root
            assert all(tree.vertex_depth[z] == 2 ** k * k + 1 for z in nodes)
    atoms = np.flatnonzero(mass)
    depths = sorted(set(tree.vertex_depth[atoms].tolist()))
    assert depths == sorted({max(2 ** k * k * k, 2 ** k * k + 1) + 1 for k in range(1, 5)})


def test_counterexample_guard():
    with pytest.raises(ValueError):
        counterexample_tree(11)
    with pytest.raises(ValueError):
        generate("counterexample83", {"K": 0})


def test_unknown_scenario():
    with pytest.raises(ValueError, match="unknown"):
        generate("nope")


def test_nullcap_capacity():
    sc = generate("nullcap", {"N": 10})
    assert abs(capacity(sc.tree, sc.tree.leaves, sc.pi, sc.p).value - 0.1) <= 1e-11
    assert np.isclose(sc.mu.total, 1.0)


def test_bounded_boundary_point_capacities():
    lows = []
    for depth in (3, 5, 7, 9):
        sc = generate("bounded_boundary", {"lam": 1.0, "depth": depth})
        caps = single_edge_capacities(sc.tree, sc.pi, sc.p)[sc.tree.leaves]
        lows.append(caps.min())
    assert min(lows) > 0.4
    assert np.all(np.diff(lows) <= 1e-15)
    sc = generate("bounded_boundary", {"lam": 1.0, "depth": 7})
    me, _ = me_sb_constants(sc.tree, sc.mu, sc.pi, sc.p)
    assert me.value <= sc.mu.total / min(lows)


def test_generation_is_bit_identical():
    for name in SCENARIOS:
        a, b = generate(name, seed=11), generate(name, seed=11)
        assert a.tree.parent.tobytes() == b.tree.parent.tobytes()
        assert a.pi.tobytes() == b.pi.tobytes()
        assert a.mu.mass.tobytes() == b.mu.mass.tobytes()
    assert not np.array_equal(generate("random", seed=1).mu.mass, generate("random", seed=2).mu.mass)


def test_random_factories(rng):
    for dist in DISTRIBUTIONS:
        t = random_tree(rng, max_depth=4)
        mu = random_measure(rng, t, dist)
        assert mu.total > 0 and np.all(mu.mass >= 0)
    t = random_tree(rng, max_depth=3, max_edges=12)
    assert t.n_edges <= 12 and t.max_depth <= 3


def test_parse_params():
    assert parse_params(["K=3", "lam=0.5", "distribution=pareto"]) == {
        "K": 3, "lam": 0.5, "distribution": "pareto"}
    with pytest.raises(ValueError):
        parse_params(["oops"])
