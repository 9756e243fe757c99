import math
import random

import pytest

from dynmatch.graph import DynamicGraph, Matching, UpdateEvent, validate
from dynmatch import oracles
from dynmatch.estimator import (AlphaOutOfRange, ContractedMember,
                                ContractionFamily, Estimator, EstimatorConfig,
                                bipartite_query, combine_amm_and_alpha,
                                general_query)
from dynmatch.streaming import SecondPassConfig


def build(n, edges):
    g = DynamicGraph(n)
    for e in edges:
        g.insert(*e)
    return g


def test_config_derived_constants():
    cfg = EstimatorConfig(mode="bipartite", eps=0.2)
    assert cfg.spc.b == pytest.approx(1 + math.sqrt(2))
    cfg = EstimatorConfig(mode="general", eps=0.2)
    assert cfg.b_general == 9
    t = EstimatorConfig(mode="tradeoff", eps=0.05, alpha=2.0)
    assert t.b_star == 16
    assert t.gain == pytest.approx(9 / 2312)
    t = EstimatorConfig(mode="tradeoff", eps=0.05, alpha=1.8)
    assert t.b_star == 27
    for bad in (1.4, 2.1, 1.501):
        with pytest.raises(AlphaOutOfRange):
            EstimatorConfig(mode="tradeoff", eps=0.05, alpha=bad)
    with pytest.raises(ValueError):
        EstimatorConfig(mode="nope", eps=0.1)


def test_contracted_member_self_pair_suppressed():
    mem = ContractedMember(scale=1, buckets=1, seed=0)
    mem.apply(UpdateEvent("i", 0, 1))
    assert mem.cg.m == 0 and mem.pre == {}


def test_contracted_member_preimage_multiplicity():
    mem = ContractedMember(scale=2, buckets=2, seed=0)
    # find two vertex pairs mapping to the same (distinct) bucket pair
    pairs = [(u, v) for u in range(20) for v in range(u + 1, 20)
             if mem.bucket(u) != mem.bucket(v)]
    key = {}
    first = second = None
    for (u, v) in pairs:
        bk = tuple(sorted((mem.bucket(u), mem.bucket(v))))
        if bk in key and not set(key[bk]) & {u, v}:
            first, second = key[bk], (u, v)
            break
        key.setdefault(bk, (u, v))
    assert first is not None
    mem.apply(UpdateEvent("i", *first))
    mem.apply(UpdateEvent("i", *second))
    assert mem.cg.m == 1
    mem.apply(UpdateEvent("d", *first))
    assert mem.cg.m == 1  # multiplicity 2 -> 1 keeps the contracted edge
    mem.apply(UpdateEvent("d", *second))
    assert mem.cg.m == 0


def test_contraction_retains_matching_at_matching_scale():
    # hashing 400 vertices into k/eps_b buckets keeps nearly all of a
    # 200-edge planted matching, over most seeds
    n, k = 400, 200
    eps_b = 1 / 16
    buckets = math.ceil(k / eps_b)
    good = 0
    for seed in range(100):
        mem = ContractedMember(scale=k, buckets=buckets, seed=seed)
        for i in range(k):
            mem.apply(UpdateEvent("i", i, k + i))
        mu_c = oracles.max_matching_size(mem.cg)
        if mu_c >= (1 - 12 * eps_b) * k:
            good += 1
    assert good >= 95


def test_family_routing_and_audit():
    g = DynamicGraph(50)
    fam = ContractionFamily(50, 0.2, seed=1)
    g.register(fam)
    rng = random.Random(0)
    live = set()
    for _ in range(300):
        u, v = rng.randrange(50), rng.randrange(50)
        e = (min(u, v), max(u, v))
        if u == v:
            continue
        if e in live:
            live.discard(e)
            g.delete(*e)
        else:
            live.add(e)
            g.insert(*e)
    assert fam.audit(g)
    for mem in fam.members:
        assert validate(mem.cg, mem.matcher.m)["ok"]


def test_bipartite_query_examples():
    spc = SecondPassConfig.bipartite(0.2)
    b = spc.b
    g = build(8, [(i, i + 4) for i in range(4)])
    m1 = Matching([(i, i + 4) for i in range(4)])
    nu, psi = bipartite_query(g, m1, spc)
    assert psi == 0 and nu == pytest.approx((1 - 1 / b) * 4)
    path = build(4, [(0, 1), (1, 2), (2, 3)])
    nu, _ = bipartite_query(path, Matching([(1, 2)]), spc)
    assert nu == pytest.approx(1 + spc.delta)
    # non-2-colorable input degrades to the matching size
    tri = build(3, [(0, 1), (1, 2), (0, 2)])
    nu, _ = bipartite_query(tri, Matching([(0, 1)]), spc)
    assert nu == 1.0


def test_general_query_examples():
    g = build(8, [(i, i + 4) for i in range(4)])
    m1 = Matching([(i, i + 4) for i in range(4)])
    for seed in range(5):
        nu, kappa = general_query(g, m1, 9, seed)
        assert kappa == 0 and nu == 4.0
    tri = build(3, [(0, 1), (1, 2), (0, 2)])
    for seed in range(8):
        nu, _ = general_query(tri, Matching([(0, 1)]), 9, seed)
        assert nu == 1.0
    c6 = build(6, [(i, (i + 1) % 6) for i in range(6)])
    m1 = Matching([(0, 1), (2, 3), (4, 5)])
    nu, _ = general_query(c6, m1, 9, 0)
    assert nu == 3.0


def test_general_query_lower_bound_certificate():
    rng = random.Random(3)
    for trial in range(25):
        n = 24
        g = DynamicGraph(n)
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < 0.2:
                    g.insert(u, v)
        m1 = oracles.greedy_maximal_matching(g, oracles.RankFunction(trial))
        mu = oracles.max_matching_size(g)
        for seed in range(4):
            nu, _ = general_query(g, m1, 9, seed)
            assert len(m1) <= nu <= mu + 1e-9


def test_combiner_examples():
    m = Matching([(0, 1), (2, 3)])
    out = combine_amm_and_alpha(m, Matching([(0, 1), (2, 3)]))
    assert sorted(out.edges()) == sorted(m.edges())
    mp = Matching([(1, 2)])
    ms = Matching([(0, 1), (2, 3)])
    out = combine_amm_and_alpha(mp, ms)
    assert sorted(out.edges()) == [(0, 1), (2, 3)]
    assert out.is_matched(1) and out.is_matched(2)
    # two components, each favoring a different side
    mp = Matching([(1, 2), (10, 11)])
    ms = Matching([(0, 1), (2, 3), (10, 11)])
    out = combine_amm_and_alpha(mp, ms)
    assert (10, 11) in out and (0, 1) in out and (2, 3) in out


def test_combiner_properties_random():
    rng = random.Random(4)
    for trial in range(40):
        n = 20
        g = DynamicGraph(n)
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < 0.3:
                    g.insert(u, v)
        m1 = oracles.greedy_maximal_matching(g, oracles.RankFunction(trial))
        m2 = oracles.greedy_maximal_matching(g, oracles.RankFunction(trial + 999))
        out = combine_amm_and_alpha(m1, m2)
        assert validate(g, out)["ok"]
        assert len(out) >= len(m2)
        for v in m1.vertices():
            assert out.is_matched(v)


def test_estimator_empty_graph_and_simple_fill():
    est = Estimator(40, EstimatorConfig(mode="bipartite", eps=0.2, seed=1))
    assert est.estimate().nu == 0.0
    for i in range(20):
        est.insert(i, 20 + i)
    se = est.estimate()
    mu = 20
    assert se.nu <= mu and mu <= 1.907 * se.nu
    est.delete(0, 20)
    se = est.estimate()
    assert se.nu <= 19


def test_estimator_reports_are_deterministic():
    def run():
        est = Estimator(30, EstimatorConfig(mode="general", eps=0.3, seed=5,
                                            reps=7))
        rng = random.Random(1)
        out = []
        for _ in range(200):
            u, v = rng.randrange(30), rng.randrange(30)
            if u != v and not est.g.edge_exists(u, v):
                est.insert(u, v)
                out.append(est.estimate().nu)
        return out

    assert run() == run()


def test_refresh_on_read_timestamps():
    est = Estimator(40, EstimatorConfig(mode="bipartite", eps=0.2, seed=2))
    for i in range(20):
        est.insert(i, 20 + i)
    se = est.estimate()
    for mem in est.family.served_members():
        assert mem.last_served_at == se.timestamp
