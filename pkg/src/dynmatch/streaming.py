"""Two-pass streaming estimators over insert-only edge streams.

Pass one builds a greedy maximal matching M1. Pass two (a re-scan of the same
stream) builds a maximal b-matching M2 on the edges between V(M1) and the free
vertices, from which the size estimate / augmented matching follows. The same
second-pass logic doubles as the query-time computation of the dynamic
estimators, which replay the live edge set instead of a stream.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .graph import BMatching, DynamicGraph, Edge, Matching, norm_edge
from . import oracles
from .oracles import TooLarge

B_BIPARTITE = 1.0 + math.sqrt(2.0)
B_GENERAL = 9


class NonBipartiteInput(Exception):
    pass


@dataclass(frozen=True)
class SecondPassConfig:
    """Capacity parameters of the second pass: caps k on matched vertices and
    floor(k*b) on free vertices; the estimate mixes with delta = 1/b."""

    b: float
    k: int
    delta: float
    eps_prime: float

    @staticmethod
    def bipartite(eps: float) -> "SecondPassConfig":
        # the derived precision is eps/16 (stricter of the two candidate
        # wirings); k >= 8/(eps' * b)
        eps_prime = eps / 16.0
        b = B_BIPARTITE
        k = math.ceil(8.0 / (eps_prime * b))
        return SecondPassConfig(b=b, k=k, delta=1.0 / b, eps_prime=eps_prime)


def first_pass_matching(edges: Iterable[Edge], eps: float = 0.0) -> Matching:
    """Greedy maximal matching in stream order (maximal, hence valid for any
    approximate-maximality requirement eps >= 0)."""
    m = Matching()
    for (u, v) in edges:
        if u != v and not m.is_matched(u) and not m.is_matched(v):
            m.add(u, v)
    return m


def bulk_maximal_b_matching(edges: Sequence[Edge], caps: Dict[int, int]) -> BMatching:
    """Maximal b-matching in one saturating pass.

    Each edge receives min(residual(u), residual(v)) copies at its turn;
    residuals never grow, so no earlier edge can become addable again.
    Maximality over `edges` is asserted before returning.
    """
    bm = BMatching(caps)
    for (u, v) in edges:
        t = min(bm.residual(u), bm.residual(v))
        if t > 0:
            bm.add(u, v, t)
    for (u, v) in edges:
        assert bm.residual(u) == 0 or bm.residual(v) == 0, \
            f"b-matching not maximal at ({u},{v})"
    return bm


def _vertex_range(edges: Sequence[Edge], n: Optional[int]) -> int:
    if n is not None:
        return n
    return 1 + max((max(e) for e in edges), default=-1)


def _check_bipartite(edges: Sequence[Edge], n: int) -> None:
    g = DynamicGraph(n)
    for (u, v) in edges:
        if not g.edge_exists(u, v):
            g.insert(u, v)
    if oracles.bipartition(g) is None:
        raise NonBipartiteInput("stream contains an odd cycle")


def second_pass_bipartite(edges: Sequence[Edge], M1: Matching,
                          cfg: SecondPassConfig, n: Optional[int] = None
                          ) -> Tuple[float, BMatching]:
    """Maximal b-matching on edges between V(M1) and free vertices, plus the
    combined estimate (1-delta)|M1| + (delta/k)|M2|."""
    n = _vertex_range(edges, n)
    caps = {v: (cfg.k if M1.is_matched(v) else int(cfg.k * cfg.b))
            for v in range(n)}
    e2 = [e for e in edges if M1.is_matched(e[0]) != M1.is_matched(e[1])]
    m2 = bulk_maximal_b_matching(e2, caps)
    nu = (1.0 - cfg.delta) * len(M1) + (cfg.delta / cfg.k) * m2.size
    return nu, m2


def bipartite_two_pass(edges: Sequence[Edge], eps: float,
                       n: Optional[int] = None
                       ) -> Tuple[float, Matching, BMatching]:
    """Two-pass size estimate for bipartite inputs.

    Guarantees nu <= mu(G) <= (1 + 1/sqrt(2) + eps) * nu. The lower side is
    deterministic: placing value 1-delta on M1 edges and delta/k on M2
    multi-edges is a feasible fractional matching of the (bipartite) subgraph
    M1 union M2, of value nu.
    """
    edges = list(edges)
    n = _vertex_range(edges, n)
    _check_bipartite(edges, n)
    cfg = SecondPassConfig.bipartite(eps)
    m1 = first_pass_matching(edges, eps / 8.0)
    nu, m2 = second_pass_bipartite(edges, m1, cfg, n)
    return nu, m1, m2


# -- general graphs --------------------------------------------------------


@dataclass
class Bipartition:
    """Vertex side labels: each M1 edge split deterministically (lower id
    left), free vertices by independent fair coins from the seed."""

    side: Dict[int, str] = field(default_factory=dict)
    provenance: Dict[int, str] = field(default_factory=dict)

    def crosses(self, u: int, v: int) -> bool:
        return self.side[u] != self.side[v]


def random_bipartition(M1: Matching, n: int, seed: int) -> Bipartition:
    part = Bipartition()
    rng = random.Random(seed)
    for v in range(n):
        if M1.is_matched(v):
            u = M1.partner[v]
            part.side[v] = "l" if v < u else "r"
            part.provenance[v] = "matching-edge"
        else:
            part.side[v] = "l" if rng.getrandbits(1) == 0 else "r"
            part.provenance[v] = "random"
    return part


def second_pass_general(edges: Sequence[Edge], M1: Matching, part: Bipartition,
                        b: int, n: Optional[int] = None
                        ) -> Tuple[BMatching, List[Edge]]:
    """Maximal b-matching M2 (caps 1 matched / b free) on the edges crossing
    the bipartition between V(M1) and free vertices, plus M1_hat: the M1 edges
    with both endpoints matched in M2."""
    n = _vertex_range(edges, n)
    caps = {v: (1 if M1.is_matched(v) else b) for v in range(n)}
    e2 = [e for e in edges
          if M1.is_matched(e[0]) != M1.is_matched(e[1]) and part.crosses(*e)]
    m2 = bulk_maximal_b_matching(e2, caps)
    m1_hat = [e for e in M1.edges()
              if m2.load.get(e[0], 0) >= 1 and m2.load.get(e[1], 0) >= 1]
    return m2, m1_hat


def disjoint_augmenting_paths(M1_hat: Sequence[Edge], M1: Matching,
                              m2: BMatching) -> List[Tuple[int, int, int, int]]:
    """Vertex-disjoint 3-augmenting paths u'-u-v-v' from M1_hat.

    Contract each candidate path to the edge (u', v') between its free
    endpoints; that contracted graph is bipartite with max degree <= b, so its
    maximum matching has size >= |M1_hat|/b, and each matched contracted edge
    lifts back to a path (the V(M1) middles are distinct by construction).
    """
    partner_in_m2: Dict[int, int] = {}
    for (a, c), mult in m2.mult.items():
        if mult <= 0:
            continue
        for v in (a, c):
            if v not in partner_in_m2:
                partner_in_m2[v] = c if v == a else a
    paths: Dict[Edge, Tuple[int, int, int, int]] = {}
    contracted: Dict[Edge, None] = {}
    free_ids: Dict[int, None] = {}
    for (u, v) in M1_hat:
        up = partner_in_m2[u]
        vp = partner_in_m2[v]
        ce = norm_edge(up, vp)
        if ce not in contracted:
            contracted[ce] = None
            paths[ce] = (up, u, v, vp)
        free_ids[up] = None
        free_ids[vp] = None
    # maximum matching of the contracted graph via the exact oracle
    remap = {v: i for i, v in enumerate(free_ids)}
    cg = DynamicGraph(len(remap))
    for (a, c) in contracted:
        cg.insert(remap[a], remap[c])
    _, mm = oracles.max_matching_exact(cg)
    inv = {i: v for v, i in remap.items()}
    out = []
    for (a, c) in mm.edges():
        out.append(paths[norm_edge(inv[a], inv[c])])
    return out


@dataclass
class GeneralTwoPassResult:
    value: int
    M1: Matching
    M2: BMatching
    M1_hat: List[Edge]
    part: Bipartition


def general_two_pass(edges: Sequence[Edge], eps: float, b: int = B_GENERAL,
                     seed: int = 0, n: Optional[int] = None
                     ) -> GeneralTwoPassResult:
    """Two-pass matching computation for general graphs.

    Returns mu(G[M1 union M2]) (exact on the sparse union subgraph; falls back
    to |M1| + #disjoint augmenting paths if the union exceeds the exact
    oracle's cap), together with M1, M2 and M1_hat. In expectation over the
    bipartition seed the value is >= (1/2 + 1/144 - eps) * mu(G) at b = 9.
    """
    edges = list(edges)
    n = _vertex_range(edges, n)
    m1 = first_pass_matching(edges, eps / 4.0)
    part = random_bipartition(m1, n, seed)
    m2, m1_hat = second_pass_general(edges, m1, part, b, n)
    union = DynamicGraph(n)
    for (u, v) in m1.edges():
        union.insert(u, v)
    for (u, v) in m2.mult:
        if not union.edge_exists(u, v):
            union.insert(u, v)
    try:
        value, _ = oracles.max_matching_exact(union)
    except TooLarge:
        value = len(m1) + len(disjoint_augmenting_paths(m1_hat, m1, m2))
    return GeneralTwoPassResult(value=value, M1=m1, M2=m2, M1_hat=m1_hat,
                                part=part)
