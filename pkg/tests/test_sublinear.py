import math
import random

import pytest

from dynmatch.graph import DynamicGraph, Matching
from dynmatch import oracles
from dynmatch.oracles import RankFunction
from dynmatch.sublinear import (AdjacencyOracle, BudgetExceeded,
                                ImplicitSupergraph, IndexOutOfClassRange,
                                QueryBudget, _GraphListHost, _LocalGMM,
                                _materialized_h_gmm, estimate_pair_matched,
                                exact_pair_matched_count, gmm_vertex_status,
                                mm_size_estimate, n_too_small,
                                pair_matched_sample_count)


def build(n, edges):
    g = DynamicGraph(n)
    for e in edges:
        g.insert(*e)
    return g


BIG = QueryBudget(max_probes=None)


def test_probe_counter_increments():
    g = build(3, [(0, 1)])
    o = AdjacencyOracle(g)
    assert o.edge_exists(0, 1) and o.probes == 1
    assert not o.edge_exists(0, 2) and o.probes == 2


def test_local_status_examples():
    g = build(3, [(0, 1), (1, 2)])
    for seed in range(30):
        r = RankFunction(seed)
        host = _GraphListHost(g)
        gm = oracles.greedy_maximal_matching(g, r)
        for v in range(3):
            st = gmm_vertex_status(host, v, r, BIG)
            assert (st == "Matched") == gm.is_matched(v)
    iso = build(2, [])
    assert gmm_vertex_status(_GraphListHost(iso), 0, RankFunction(0), BIG) \
        == "Unmatched"
    pm = build(8, [(i, i + 4) for i in range(4)])
    for v in range(8):
        assert gmm_vertex_status(_GraphListHost(pm), v, RankFunction(1),
                                 BIG) == "Matched"


def test_local_matches_global_on_random_graphs():
    rng = random.Random(0)
    for trial in range(30):
        n = rng.randrange(3, 25)
        g = DynamicGraph(n)
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < 0.3:
                    g.insert(u, v)
        r = RankFunction(trial + 100)
        gm = oracles.greedy_maximal_matching(g, r)
        host = _GraphListHost(g)
        for v in range(n):
            st = gmm_vertex_status(host, v, r, BIG)
            assert (st == "Matched") == gm.is_matched(v)


def test_budget_breach_restarts_then_aborts():
    g = DynamicGraph(30)
    for u in range(30):
        for v in range(u + 1, 30):
            g.insert(u, v)
    o = AdjacencyOracle(g)
    h = ImplicitSupergraph(o, 0.5)
    tight = QueryBudget(max_probes=1, restarts=0)
    sim = _LocalGMM(h, RankFunction(0), tight, o)
    sim.begin_query()
    with pytest.raises(BudgetExceeded):
        sim.vertex_matched(("v", 0))


def test_supergraph_sizes_and_rules():
    g = build(5, [(0, 1), (1, 2), (3, 4)])
    o = AdjacencyOracle(g)
    h = ImplicitSupergraph(o, 0.7)
    assert h.s == math.ceil(10 * 5 / 0.7)
    assert h.num_vertices == 2 * 5 + 25 + 5 * h.s
    # base vertex: j-th neighbor is the real j-th vertex iff adjacent
    assert h.list_query(("v", 0), 2) == ("v", 1)
    assert h.list_query(("v", 0), 3) == ("vs", 2)
    # shadow vertex: pendant index range needs no probe on the base graph
    before = o.probes
    assert h.list_query(("vs", 2), 5 + 3) == ("u", 2, 3)
    assert o.probes == before
    # pendant of a non-edge is isolated
    assert h.list_query(("w", 0, 3), 1) is None
    assert h.list_query(("w", 1, 2), 1) == ("vs", 1)
    with pytest.raises(IndexOutOfClassRange):
        h.list_query(("v", 0), 6)
    with pytest.raises(IndexOutOfClassRange):
        h.list_query(("u", 0, 1), 2)


def test_supergraph_one_probe_per_list_query():
    g = build(4, [(0, 1)])
    o = AdjacencyOracle(g)
    h = ImplicitSupergraph(o, 0.9)
    for x in [("v", 2), ("vs", 3)]:
        for j in range(1, 5):
            before = o.probes
            h.list_query(x, j)
            assert o.probes - before <= 1


def test_materialize_agrees_with_implicit():
    rng = random.Random(5)
    g = DynamicGraph(7)
    for u in range(7):
        for v in range(u + 1, 7):
            if rng.random() < 0.4:
                g.insert(u, v)
    h = ImplicitSupergraph(AdjacencyOracle(g), 0.9)
    verts, edges = h.materialize()
    assert len(verts) == h.num_vertices
    adj = {}
    for (a, b) in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    for x in verts:
        assert set(h.neighbors_of(x)) == adj.get(x, set())
        assert h.degree(x) >= len(adj.get(x, set()))


def test_occupancy_of_shadow_vertices():
    # nearly all shadow vertices end up matched into their pendant classes
    rng = random.Random(2)
    ok = 0
    trials = 30
    for t in range(trials):
        n = 12
        g = DynamicGraph(n)
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < 0.3:
                    g.insert(u, v)
        delta = 0.4
        h = ImplicitSupergraph(AdjacencyOracle(g), delta)
        matched, chosen = _materialized_h_gmm(h, RankFunction(t * 3 + 1))
        into_pendant = sum(1 for (a, b) in chosen
                           if {a[0], b[0]} & {"w", "u"} and "vs" in (a[0], b[0]))
        if into_pendant >= (1 - delta) * n:
            ok += 1
    assert ok >= 0.9 * trials


def test_n_too_small_threshold():
    assert n_too_small(200, 0.1)
    assert not n_too_small(10**7, 0.3)


def test_mm_size_estimate_examples():
    assert mm_size_estimate(build(5, []), 0.1, seed=1) == 0.0
    k = 8
    g = build(2 * k, [(i, k + i) for i in range(k)])
    nu = mm_size_estimate(g, 0.1, seed=2)
    assert k - 0.1 * 2 * k - 1e-9 <= nu <= k
    k20 = DynamicGraph(20)
    for u in range(20):
        for v in range(u + 1, 20):
            k20.insert(u, v)
    nu = mm_size_estimate(k20, 0.1, seed=3)
    assert 8 - 1e-9 <= nu <= 10


def test_mm_size_estimate_sampling_path_window():
    # force the sampling machinery on a small instance; the additive window
    # is eps*n below the seed-determined maximal matching
    g = build(12, [(i, 6 + i) for i in range(6)])
    eps = 0.4
    nu = mm_size_estimate(g, eps, seed=5, budget=BIG, force_sampling=True)
    assert 0.0 <= nu <= 6.0
    assert nu >= 6 - eps * 12 - 1e-9


def test_pair_matched_sample_count_formula():
    assert pair_matched_sample_count(100, 0.5) == \
        math.ceil(1e5 * math.log(100) / 0.5**5)


def test_estimate_pair_matched_small_mstar_returns_zero():
    g = build(100, [(0, 1)])
    assert estimate_pair_matched(g, Matching([(0, 1)]), 0.2, seed=1) == 0.0


def test_estimate_pair_matched_exact_fallback_window():
    n, k = 100, 50
    g = build(n, [(i, k + i) for i in range(k)])
    mstar = Matching([(i, k + i) for i in range(k)])
    kappa = estimate_pair_matched(g, mstar, 0.2, seed=7)
    assert 48 - 1e-9 <= kappa <= 50 + 1e-9


def test_estimate_pair_matched_edgeless_clamps_to_zero():
    g = build(50, [])
    mstar = Matching([(i, 25 + i) for i in range(25)])
    assert estimate_pair_matched(g, mstar, 0.2, seed=3) == 0.0


def test_sampling_path_agrees_with_materialized_reference():
    n, k = 10, 5
    eps = 0.5
    g = build(n, [(i, k + i) for i in range(k)])
    mstar = Matching([(i, k + i) for i in range(k)])
    for seed in range(5):
        exact = exact_pair_matched_count(g, mstar, eps, seed)
        kappa = estimate_pair_matched(g, mstar, eps, seed, sample_constant=50,
                                      budget=BIG, force_sampling=True)
        assert kappa <= exact + 1e-9
        assert kappa >= exact - eps**2 * n - 1e-9
