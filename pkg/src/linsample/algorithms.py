"""Solvers for sampled graphs and end-to-end sparsify-and-solve pipelines.

A solution found on the sampled graph H transfers back to the original
instance: with the scale chosen per problem, any phi-approximate solution
on H is a (phi - 2*eps)-approximate solution on the instance with
probability at least 1 - 1/n (given H was built successfully).  Solution
values on H are computed with the sampled weights; re-evaluating a
returned structure on the instance costs fresh oracle queries, which are
charged to a separate evaluation ledger so the algorithmic budget stays
honest.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace

import numpy as np

from .oracle import MetricInstance, QueryLedger, weight_query_batch
from .pairs import all_pairs, ensure_rng
from .sampler import SampledGraph, SamplerConfig, build_h_beta, estimate_average_from_h

PROBLEMS = ("avg", "densest", "maxcut", "hypermatching")


@dataclass
class SubgraphSelection:
    """A vertex set and its density in the graph it was evaluated on."""

    vertices: np.ndarray
    density: float

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.int64)


@dataclass
class CutAssignment:
    """Per-vertex side labels and the crossing weight."""

    side: np.ndarray
    value: float

    def __post_init__(self):
        self.side = np.asarray(self.side, dtype=bool)


@dataclass
class HypermatchingPartition:
    """Disjoint size-k groups covering all vertices, and their inner weight."""

    groups: list[np.ndarray]
    value: float

    def __post_init__(self):
        self.groups = [np.asarray(g, dtype=np.int64) for g in self.groups]


@dataclass
class PipelineResult:
    problem: str
    solution: object
    value_in_h: float
    value_in_g: float | None
    beta: float
    epsilon: float
    queries_algorithm: int
    queries_evaluation: int
    k: int | None = None


def complete_edge_graph(instance: MetricInstance) -> SampledGraph:
    """Full edge list of an instance, off-ledger; for tests and tiny inputs."""
    us, vs = all_pairs(instance.n)
    return SampledGraph(
        n=instance.n,
        us=us,
        vs=vs,
        weights=instance.pair_weights(us, vs),
        alpha=None,
    )


def _adjacency(graph: SampledGraph):
    n = graph.n
    src = np.concatenate([graph.us, graph.vs])
    dst = np.concatenate([graph.vs, graph.us])
    w = np.concatenate([graph.weights, graph.weights])
    order = np.argsort(src, kind="stable")
    dst, w = dst[order], w[order]
    counts = np.bincount(src, minlength=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets, dst, w


def greedy_densest(graph: SampledGraph) -> SubgraphSelection:
    """Peel the minimum-weighted-degree vertex; keep the densest prefix.

    Ties break toward the smallest vertex id, so the result is a pure
    function of the edge list.  The returned density is measured in the
    input graph and is at least half the optimum there (and at least
    total/n, since the full vertex set is the first prefix).
    """
    if graph.edge_count == 0:
        raise ValueError("no edges")
    n = graph.n
    offsets, nbr, nw = _adjacency(graph)
    wdeg = np.bincount(graph.us, weights=graph.weights, minlength=n) + np.bincount(
        graph.vs, weights=graph.weights, minlength=n
    )
    total = float(graph.weights.sum())
    removed = np.zeros(n, dtype=bool)
    heap = [(float(wdeg[v]), v) for v in range(n)]
    heapq.heapify(heap)

    best_density = total / n
    best_prefix = 0
    order = []
    alive = n
    while alive > 2:
        d, v = heapq.heappop(heap)
        if removed[v] or d != wdeg[v]:
            continue
        removed[v] = True
        order.append(v)
        alive -= 1
        for idx in range(offsets[v], offsets[v + 1]):
            u = nbr[idx]
            if not removed[u]:
                wdeg[u] -= nw[idx]
                total -= nw[idx]
                heapq.heappush(heap, (float(wdeg[u]), u))
        density = total / alive
        if density > best_density:
            best_density = density
            best_prefix = len(order)
    survivors = np.setdiff1d(
        np.arange(n, dtype=np.int64), np.asarray(order[:best_prefix], dtype=np.int64)
    )
    return SubgraphSelection(vertices=survivors, density=float(best_density))


def local_search_maxcut(graph: SampledGraph, rng=None, restarts: int = 5) -> CutAssignment:
    """Single-vertex-move local search from random starts.

    At a local optimum no flip strictly increases the crossing weight,
    which already certifies half the optimal cut; restarts only help the
    constant in practice.
    """
    n = graph.n
    if n < 2:
        raise ValueError("need at least two vertices")
    if restarts < 1:
        raise ValueError("need at least one restart")
    rng = ensure_rng(rng)
    offsets, nbr, nw = _adjacency(graph)
    best_side, best_value = None, -1.0
    for _ in range(restarts):
        side = rng.random(n) < 0.5
        improved = True
        while improved:
            improved = False
            for v in range(n):
                lo, hi = offsets[v], offsets[v + 1]
                if lo == hi:
                    continue
                same_mask = side[nbr[lo:hi]] == side[v]
                w = nw[lo:hi]
                gain = float(w[same_mask].sum()) - float(w[~same_mask].sum())
                if gain > 0.0:
                    side[v] = not side[v]
                    improved = True
        value = float(graph.weights[side[graph.us] != side[graph.vs]].sum())
        if value > best_value:
            best_value = value
            best_side = side.copy()
    if best_side.all() or not best_side.any():
        # all weights incident to every vertex are zero here; any split works
        best_side[0] = not best_side[0]
    return CutAssignment(side=best_side, value=float(best_value))


def _dense_weights(graph: SampledGraph) -> np.ndarray:
    if graph.n > 4096:
        raise ValueError("dense solver limited to n <= 4096")
    w = np.zeros((graph.n, graph.n), dtype=np.float64)
    w[graph.us, graph.vs] = graph.weights
    w[graph.vs, graph.us] = graph.weights
    return w


def greedy_hypermatching(graph: SampledGraph, k: int, rng=None) -> HypermatchingPartition:
    """Partition into n/k groups of size k with large inner weight.

    Seeds each group with the heaviest available edge, grows it by
    maximum marginal weight, then improves with randomized pairwise swaps
    until n consecutive attempts fail.  Heuristic only: no approximation
    factor is claimed.
    """
    n = graph.n
    if k < 2:
        raise ValueError("group size must be at least 2")
    if n % k != 0:
        raise ValueError(f"group size {k} must divide n={n}")
    rng = ensure_rng(rng)
    w = _dense_weights(graph)

    order = np.lexsort((graph.vs, graph.us, -graph.weights))
    edges = list(zip(graph.us[order], graph.vs[order]))
    assigned = np.zeros(n, dtype=bool)
    gid = np.full(n, -1, dtype=np.int64)
    groups: list[list[int]] = []
    ptr = 0
    while not assigned.all():
        while ptr < len(edges) and (assigned[edges[ptr][0]] or assigned[edges[ptr][1]]):
            ptr += 1
        if ptr < len(edges):
            u, v = int(edges[ptr][0]), int(edges[ptr][1])
        else:
            free = np.flatnonzero(~assigned)
            u, v = int(free[0]), int(free[1])
        group = [u, v]
        assigned[[u, v]] = True
        while len(group) < k:
            free = np.flatnonzero(~assigned)
            marginal = w[np.ix_(free, group)].sum(axis=1)
            pick = int(free[int(np.argmax(marginal))])
            group.append(pick)
            assigned[pick] = True
        gid[group] = len(groups)
        groups.append(group)

    if len(groups) > 1:
        group_arr = [np.asarray(g, dtype=np.int64) for g in groups]
        failures = 0
        while failures < n:
            u = int(rng.integers(n))
            v = int(rng.integers(n))
            gu, gv = int(gid[u]), int(gid[v])
            if gu == gv:
                failures += 1
                continue
            a, b = group_arr[gu], group_arr[gv]
            delta = (
                w[v, a].sum() - w[v, u] + w[u, b].sum() - w[u, v]
                - w[u, a].sum() - w[v, b].sum()
            )
            if delta > 0.0:
                a[a == u] = v
                b[b == v] = u
                gid[u], gid[v] = gv, gu
                failures = 0
            else:
                failures += 1
        groups = [sorted(int(x) for x in g) for g in group_arr]

    value = 0.0
    out = []
    for g in groups:
        arr = np.asarray(sorted(g), dtype=np.int64)
        value += float(w[np.ix_(arr, arr)].sum()) / 2.0
        out.append(arr)
    return HypermatchingPartition(groups=out, value=value)


def beta_for_problem(problem: str, n: int, epsilon: float, k: int | None = None) -> float:
    """Expected sampled weight sufficient for each downstream problem."""
    if problem == "avg":
        return 3.0 * math.log(2 * n) / epsilon**2
    if problem == "densest":
        return 9.0 * math.log(n) * n / epsilon**2
    if problem == "maxcut":
        return 18.0 * math.log(n) * n / epsilon**2
    if problem == "hypermatching":
        if k is None or k < 2:
            raise ValueError("hypermatching needs a group size k >= 2")
        return 6.0 * math.log(n) * n**2 / ((k - 1) * epsilon**2)
    raise ValueError(f"unknown problem {problem!r}; expected one of {PROBLEMS}")


def evaluate_density(instance, vertices, ledger) -> float:
    """Density of a vertex set on the instance; queries charged to ledger."""
    if len(vertices) < 2:
        return 0.0
    i, j = all_pairs(len(vertices))
    w = weight_query_batch(instance, vertices[i], vertices[j], ledger)
    return float(w.sum()) / len(vertices)


def evaluate_cut(instance, side, ledger) -> float:
    """Crossing weight of a side assignment on the instance."""
    left = np.flatnonzero(side)
    right = np.flatnonzero(~side)
    if len(left) == 0 or len(right) == 0:
        return 0.0
    us = np.repeat(left, len(right))
    vs = np.tile(right, len(left))
    return float(weight_query_batch(instance, us, vs, ledger).sum())


def evaluate_partition(instance, groups, ledger) -> float:
    """Total inner weight of a group partition on the instance."""
    value = 0.0
    for g in groups:
        if len(g) >= 2:
            i, j = all_pairs(len(g))
            value += float(weight_query_batch(instance, g[i], g[j], ledger).sum())
    return value


def sparsify_and_solve(
    instance: MetricInstance,
    problem: str,
    epsilon: float,
    config: SamplerConfig | None = None,
    rng=None,
    ledger: QueryLedger | None = None,
    *,
    k: int | None = None,
    restarts: int = 5,
) -> PipelineResult:
    """Build the sampled graph at the problem's scale and solve on it.

    Returns the solution structure, its value under the sampled weights,
    and its value re-evaluated on the instance (charged separately).
    For ``avg`` the solution is the estimate itself and nothing needs
    re-evaluation.
    """
    if problem not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}; expected one of {PROBLEMS}")
    if not (0.0 < epsilon <= 1.0):
        raise ValueError("epsilon must lie in (0, 1]")
    if ledger is None:
        ledger = QueryLedger()
    rng = ensure_rng(rng)
    config = config or SamplerConfig()
    beta = beta_for_problem(problem, instance.n, epsilon, k)
    start = ledger.count
    h = build_h_beta(instance, replace(config, beta=beta), rng, ledger)
    queries_algorithm = ledger.count - start
    eval_ledger = QueryLedger()

    if problem == "avg":
        estimate = estimate_average_from_h(h)
        return PipelineResult(
            problem=problem,
            solution=estimate,
            value_in_h=estimate,
            value_in_g=None,
            beta=beta,
            epsilon=epsilon,
            queries_algorithm=queries_algorithm,
            queries_evaluation=0,
        )

    if problem == "densest":
        solution = greedy_densest(h)
        value_in_h = solution.density
        value_in_g = evaluate_density(instance, solution.vertices, eval_ledger)
    elif problem == "maxcut":
        solution = local_search_maxcut(h, rng.spawn(1)[0], restarts=restarts)
        value_in_h = solution.value
        value_in_g = evaluate_cut(instance, solution.side, eval_ledger)
    else:
        solution = greedy_hypermatching(h, k, rng.spawn(1)[0])
        value_in_h = solution.value
        value_in_g = evaluate_partition(instance, solution.groups, eval_ledger)

    return PipelineResult(
        problem=problem,
        solution=solution,
        value_in_h=value_in_h,
        value_in_g=value_in_g,
        beta=beta,
        epsilon=epsilon,
        queries_algorithm=queries_algorithm,
        queries_evaluation=eval_ledger.count,
        k=k,
    )
