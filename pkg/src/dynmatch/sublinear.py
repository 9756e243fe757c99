"""Local access to random greedy maximal matching and the sampling estimators.

The centerpiece is an implicit supergraph H of the base graph G that supports
ordered adjacency-list queries at a cost of at most one membership probe to G
each, such that the random greedy maximal matching (GMM) of H restricted to G
is near-maximal w.h.p. Status queries resolve a vertex's matched status under
GMM locally via rank-based pruning, without materializing anything.

Vertex naming in H: ('v', i) for base vertices, ('vs', i) for their shadow
copies, ('w', i, j) and ('u', i, j) for the degree-<=1 pendant classes.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .graph import DynamicGraph, Matching
from .oracles import RankFunction, greedy_maximal_matching


class BudgetExceeded(Exception):
    pass


class IndexOutOfClassRange(Exception):
    pass


class AdjacencyOracle:
    """Matrix-query access to a dynamic graph with probe accounting."""

    def __init__(self, g: DynamicGraph):
        self.g = g
        self.n = g.n
        self.probes = 0

    def edge_exists(self, u: int, v: int) -> bool:
        self.probes += 1
        return self.g.edge_exists(u, v)


@dataclass
class QueryBudget:
    """Probe cap per status query; on breach: restart once with fresh
    randomness, then abort."""

    max_probes: Optional[int] = None
    restarts: int = 1

    @staticmethod
    def standard(n: int, edge_density: float = 1.0) -> "QueryBudget":
        cap = int(50 * max(edge_density, 1.0) * math.log(n + 2) ** 2)
        return QueryBudget(max_probes=cap, restarts=1)


def n_too_small(n: int, eps: float) -> bool:
    """Below this threshold the concentration arguments behind the samplers
    are vacuous; callers fall back to exact computation."""
    return n * eps**4 < 64.0 * math.log(max(n, 2))


class ImplicitSupergraph:
    """The supergraph H = (V u V* u W u U, E_H) over a matrix oracle for G.

    Degrees: class V exactly n, class V* exactly n+s, classes W/U at most 1,
    with s = ceil(10n/delta); |V_H| = 2n + n^2 + n*s. Each list query spends
    at most one matrix probe on G (only for V/V* queries with index <= n).
    """

    def __init__(self, oracle: AdjacencyOracle, delta: float):
        if not (0 < delta < 1):
            raise ValueError("delta must be in (0,1)")
        self.oracle = oracle
        self.n = oracle.n
        self.delta = delta
        self.s = math.ceil(10 * self.n / delta)

    @property
    def num_vertices(self) -> int:
        return 2 * self.n + self.n**2 + self.n * self.s

    def degree(self, x) -> int:
        kind = x[0]
        if kind == "v":
            return self.n
        if kind == "vs":
            return self.n + self.s
        if kind == "w":
            _, i, j = x
            return 1 if (i != j and self.oracle.edge_exists(i, j)) else 0
        if kind == "u":
            return 1
        raise ValueError(f"unknown vertex class {x!r}")

    def list_query(self, x, j: int):
        """j-th neighbor (1-indexed) of H-vertex x, or None for an isolated
        pendant; follows the four class rules verbatim."""
        kind = x[0]
        if kind == "v":
            i = x[1]
            if not (1 <= j <= self.n):
                raise IndexOutOfClassRange(f"index {j} for class V")
            other = j - 1
            if other != i and self.oracle.edge_exists(i, other):
                return ("v", other)
            return ("vs", other)
        if kind == "vs":
            i = x[1]
            if 1 <= j <= self.n:
                other = j - 1
                if other != i and self.oracle.edge_exists(i, other):
                    return ("w", i, other)
                return ("v", other)
            if self.n < j <= self.n + self.s:
                return ("u", i, j - self.n)
            raise IndexOutOfClassRange(f"index {j} for class V*")
        if kind == "w":
            _, i, other = x
            if j != 1:
                raise IndexOutOfClassRange(f"index {j} for class W")
            if i != other and self.oracle.edge_exists(i, other):
                return ("vs", i)
            return None
        if kind == "u":
            _, i, idx = x
            if j != 1:
                raise IndexOutOfClassRange(f"index {j} for class U")
            return ("vs", i)
        raise ValueError(f"unknown vertex class {x!r}")

    def neighbors_of(self, x) -> List[Tuple]:
        out = []
        for j in range(1, self.degree(x) + 1):
            y = self.list_query(x, j)
            if y is not None:
                out.append(y)
        return out

    def materialize(self) -> Tuple[List[Tuple], List[Tuple[Tuple, Tuple]]]:
        """Explicit (vertices, edges) of H for small-n cross-checks."""
        verts: List[Tuple] = []
        for i in range(self.n):
            verts.append(("v", i))
            verts.append(("vs", i))
            for j in range(self.n):
                verts.append(("w", i, j))
            for j in range(1, self.s + 1):
                verts.append(("u", i, j))
        edges = set()
        for i in range(self.n):
            for j in range(1, self.n + 1):
                y = self.list_query(("v", i), j)
                edges.add(_canon_h(("v", i), y))
            for j in range(1, self.n + self.s + 1):
                y = self.list_query(("vs", i), j)
                edges.add(_canon_h(("vs", i), y))
        return verts, sorted(edges)


def _canon_h(a, b):
    return (a, b) if repr(a) <= repr(b) else (b, a)


# -- local GMM status ------------------------------------------------------


class _LocalGMM:
    """Memoized rank-based local simulation of GMM over a list-query host.

    An edge is in the greedy matching iff every strictly-lower-rank edge
    sharing an endpoint is not. Exploration visits incident edges in
    increasing rank and recurses only downward, so answers agree exactly with
    the global greedy matching under the same ranks.
    """

    def __init__(self, host, ranks: RankFunction,
                 budget: Optional[QueryBudget] = None,
                 probe_source: Optional[AdjacencyOracle] = None):
        self.host = host
        self.ranks = ranks
        self.budget = budget
        self.probe_source = probe_source
        self.edge_memo: Dict[Tuple, bool] = {}
        self._probe_floor = 0

    def _check_budget(self) -> None:
        if (self.budget and self.budget.max_probes is not None
                and self.probe_source is not None):
            spent = self.probe_source.probes - self._probe_floor
            if spent > self.budget.max_probes:
                raise BudgetExceeded(f"{spent} probes > cap "
                                     f"{self.budget.max_probes}")

    def _sorted_incident(self, x) -> List[Tuple]:
        neigh = self.host.neighbors_of(x)
        return sorted(((x, y) for y in neigh),
                      key=lambda e: self.ranks.sort_key(*e))

    def edge_in_matching(self, e: Tuple) -> bool:
        key = self.ranks._canon(*e)
        memo = self.edge_memo
        if key in memo:
            return memo[key]
        # explicit stack of (edge, merged lower-rank neighbor list, cursor)
        stack = [self._frame(e)]
        while stack:
            edge, lower, idx = stack[-1]
            k = self.ranks._canon(*edge)
            if k in memo:
                stack.pop()
                continue
            verdict = None
            while idx[0] < len(lower):
                f = lower[idx[0]]
                fk = self.ranks._canon(*f)
                if fk in memo:
                    if memo[fk]:
                        verdict = False
                        break
                    idx[0] += 1
                else:
                    stack.append(self._frame(f))
                    break
            else:
                verdict = True
            if verdict is not None:
                memo[k] = verdict
                stack.pop()
        return memo[key]

    def _frame(self, e: Tuple):
        self._check_budget()
        my_key = self.ranks.sort_key(*e)
        lower = [f for x in e for f in self._sorted_incident(x)
                 if self.ranks.sort_key(*f) < my_key]
        lower.sort(key=lambda f: self.ranks.sort_key(*f))
        return (e, lower, [0])

    def vertex_matched(self, x) -> bool:
        for e in self._sorted_incident(x):
            if self.edge_in_matching(e):
                return True
        return False

    def begin_query(self) -> None:
        if self.probe_source is not None:
            self._probe_floor = self.probe_source.probes


class _GraphListHost:
    """List-query host over a plain DynamicGraph (adjacency order)."""

    def __init__(self, g: DynamicGraph):
        self.g = g

    def neighbors_of(self, x: int) -> List[int]:
        return list(self.g.neighbors(x))


def gmm_vertex_status(host, v, ranks: RankFunction,
                      budget: Optional[QueryBudget] = None,
                      probe_source: Optional[AdjacencyOracle] = None) -> str:
    """Matched status of one vertex under the greedy matching of the host's
    full edge set, resolved locally. host: ImplicitSupergraph, _GraphListHost,
    or any object with incident_edges(x)."""
    sim = _LocalGMM(host, ranks, budget, probe_source)
    sim.begin_query()
    try:
        return "Matched" if sim.vertex_matched(v) else "Unmatched"
    except BudgetExceeded:
        if budget and budget.restarts > 0:
            sim2 = _LocalGMM(host, RankFunction(ranks.seed ^ 0x9E3779B9),
                             QueryBudget(budget.max_probes, 0), probe_source)
            sim2.begin_query()
            return "Matched" if sim2.vertex_matched(v) else "Unmatched"
        raise


# -- estimators ------------------------------------------------------------


def mm_size_estimate(g: DynamicGraph, eps: float, seed: int,
                     budget: Optional[QueryBudget] = None,
                     force_sampling: bool = False) -> float:
    """Estimate of the size of a (seed-determined) maximal matching mu~ with
    mu~ >= nu >= mu~ - eps*n w.h.p.

    When n is below the concentration-validity threshold, computes mu~ exactly
    as the global greedy matching under the seeded ranks (the estimate is then
    exact, which only tightens the window).
    """
    if not (0 < eps < 0.5):
        raise ValueError("eps must be in (0, 1/2)")
    n = g.n
    ranks = RankFunction(seed)
    if n == 0 or g.m == 0:
        return 0.0
    if n_too_small(n, eps) and not force_sampling:
        return float(len(greedy_maximal_matching(g, ranks)))
    delta = eps / 4.0
    oracle = AdjacencyOracle(g)
    h = ImplicitSupergraph(oracle, delta)
    if budget is None:
        budget = QueryBudget.standard(n)
    samples = math.ceil(64.0 * math.log(n + 2) / eps**2)
    rng = random.Random(seed ^ 0x5EED)
    sim = _LocalGMM(h, ranks, budget, oracle)
    matched = 0
    for _ in range(samples):
        v = ("v", rng.randrange(n))
        sim.begin_query()
        try:
            hit = sim.vertex_matched(v)
        except BudgetExceeded:
            if budget.restarts <= 0:
                raise
            v = ("v", rng.randrange(n))
            sim.begin_query()
            hit = sim.vertex_matched(v)
        if hit:
            matched += 1
    frac = matched / samples
    nu = (frac - eps / 4.0 - delta) * n / 2.0
    return max(0.0, nu)


def _materialized_h_gmm(h: ImplicitSupergraph, ranks: RankFunction):
    """Global GMM over an explicitly materialized H (small n only)."""
    _, edges = h.materialize()
    order = sorted(edges, key=lambda e: ranks.sort_key(*e))
    matched: Dict[Tuple, Tuple] = {}
    chosen = []
    for (a, b) in order:
        if a not in matched and b not in matched:
            matched[a] = b
            matched[b] = a
            chosen.append((a, b))
    return matched, chosen


def exact_pair_matched_count(g: DynamicGraph, m_star: Matching, eps: float,
                             seed: int) -> int:
    """Exact |{e in M*: both endpoints matched by GMM(H, ranks)}| via a
    materialized H; the reference the sampling path is checked against."""
    oracle = AdjacencyOracle(g)
    h = ImplicitSupergraph(oracle, eps**2 / 8.0)
    matched, _ = _materialized_h_gmm(h, RankFunction(seed))
    count = 0
    for (u, v) in m_star.edges():
        if ("v", u) in matched and ("v", v) in matched:
            count += 1
    return count


def pair_matched_sample_count(n: int, eps: float,
                              sample_constant: float = 1e5) -> int:
    """L = ceil(constant * ln(n) / eps^5); the printed constant is 1e5."""
    return math.ceil(sample_constant * math.log(max(n, 2)) / eps**5)


def estimate_pair_matched(g: DynamicGraph, m_star: Matching, eps: float,
                          seed: int, sample_constant: float = 1e5,
                          budget: Optional[QueryBudget] = None,
                          force_sampling: bool = False) -> float:
    """Estimate kappa of the number of M* edges with both endpoints matched
    in a (seed-determined) near-maximal matching of g.

    Returns 0 outright when |M*| <= eps^2 * n. Otherwise samples
    L = ceil(sample_constant * ln(n) / eps^5) edges of M* with replacement,
    resolves both endpoints' status under GMM of the implicit supergraph
    (delta = eps^2/8), and returns X*|M*|/L - n*eps^2/2, clamped at 0. Falls
    back to the exact materialized count below the validity threshold.
    """
    n = g.n
    size = len(m_star)
    if size <= eps**2 * n:
        return 0.0
    if n_too_small(n, eps) and not force_sampling:
        # exact count against the seed-determined maximal matching of the
        # base graph; the supergraph mechanism is only needed when sampling
        m_prime = greedy_maximal_matching(g, RankFunction(seed))
        return float(sum(1 for (u, v) in m_star.edges()
                         if m_prime.is_matched(u) and m_prime.is_matched(v)))
    oracle = AdjacencyOracle(g)
    h = ImplicitSupergraph(oracle, eps**2 / 8.0)
    ranks = RankFunction(seed)
    if budget is None:
        budget = QueryBudget.standard(n)
    L = pair_matched_sample_count(n, eps, sample_constant)
    rng = random.Random(seed ^ 0xA55)
    edges = m_star.edges()
    sim = _LocalGMM(h, ranks, budget, oracle)
    hits = 0
    for _ in range(L):
        (u, v) = edges[rng.randrange(size)]
        sim.begin_query()
        try:
            hit = (sim.vertex_matched(("v", u))
                   and sim.vertex_matched(("v", v)))
        except BudgetExceeded:
            if budget.restarts <= 0:
                raise
            (u, v) = edges[rng.randrange(size)]
            sim.begin_query()
            hit = (sim.vertex_matched(("v", u))
                   and sim.vertex_matched(("v", v)))
        if hit:
            hits += 1
    kappa = hits * size / L - n * eps**2 / 2.0
    return max(0.0, kappa)
