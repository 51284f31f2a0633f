"""Exact brute-force reference solvers for small instances.

These are test oracles, not products: plain enumeration, deterministic
tie-breaking (first optimum in canonical order wins), no cleverness.
They read weights directly and never touch an experiment ledger.  Size
caps keep each call under a few seconds; raising a cap is the caller's
explicit choice.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .algorithms import CutAssignment, HypermatchingPartition, SubgraphSelection
from .oracle import MetricInstance
from .pairs import pair_count
from .sampler import SampledGraph


def _weight_matrix(obj) -> np.ndarray:
    if isinstance(obj, MetricInstance):
        return obj.full_matrix()
    if isinstance(obj, SampledGraph):
        w = np.zeros((obj.n, obj.n), dtype=np.float64)
        w[obj.us, obj.vs] = obj.weights
        w[obj.vs, obj.us] = obj.weights
        return w
    raise TypeError(f"expected an instance or sampled graph, got {type(obj).__name__}")


def exact_average(instance: MetricInstance, chunk: int = 512) -> float:
    """Average edge weight by full summation over all pairs."""
    n = instance.n
    if n < 2:
        raise ValueError("need at least two vertices")
    total = 0.0
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        block_us, block_vs = [], []
        for u in range(lo, hi):
            vs = np.arange(u + 1, n, dtype=np.int64)
            block_us.append(np.full(len(vs), u, dtype=np.int64))
            block_vs.append(vs)
        us = np.concatenate(block_us)
        if len(us) == 0:
            continue
        total += float(instance.pair_weights(us, np.concatenate(block_vs)).sum())
    return total / pair_count(n)


def _subset_weights(w: np.ndarray) -> np.ndarray:
    """Total inner weight of every vertex subset, indexed by bitmask.

    Masks with highest bit h occupy [2^h, 2^{h+1}); peeling that bit gives
    the recurrence total[m] = total[m - 2^h] + (weight from h into the
    rest of m), which vectorizes per bit.
    """
    n = w.shape[0]
    totals = np.zeros(1 << n, dtype=np.float64)
    for h in range(1, n):
        size = 1 << h
        into_rest = np.zeros(size, dtype=np.float64)
        sub = np.arange(size)
        for u in range(h):
            into_rest += w[u, h] * ((sub >> u) & 1)
        totals[size : 2 * size] = totals[:size] + into_rest
    return totals


def _popcounts(n_bits: int) -> np.ndarray:
    idx = np.arange(1 << n_bits, dtype=np.uint32)
    counts = np.zeros(1 << n_bits, dtype=np.int64)
    for b in range(n_bits):
        counts += (idx >> b) & 1
    return counts


def exact_densest(obj, cap: int = 20) -> SubgraphSelection:
    """Optimal density over all vertex subsets of size at least 2."""
    w = _weight_matrix(obj)
    n = w.shape[0]
    if n > cap:
        raise ValueError(f"n={n} exceeds exact-densest cap {cap}; raise cap explicitly")
    if n < 2:
        raise ValueError("need at least two vertices")
    totals = _subset_weights(w)
    sizes = _popcounts(n)
    density = np.full(len(totals), -np.inf)
    valid = sizes >= 2
    density[valid] = totals[valid] / sizes[valid]
    best = int(np.argmax(density))  # first optimum = smallest bitmask
    vertices = np.flatnonzero([(best >> v) & 1 for v in range(n)]).astype(np.int64)
    return SubgraphSelection(vertices=vertices, density=float(density[best]))


def exact_maxcut(obj, cap: int = 22) -> CutAssignment:
    """Optimal cut by enumerating the 2^(n-1) splits with vertex n-1 fixed."""
    w = _weight_matrix(obj)
    n = w.shape[0]
    if n > cap:
        raise ValueError(f"n={n} exceeds exact-maxcut cap {cap}; raise cap explicitly")
    if n < 2:
        raise ValueError("need at least two vertices")
    m = n - 1  # vertex n-1 stays on the False side
    total_deg = w.sum(axis=0)
    cuts = np.zeros(1 << m, dtype=np.float64)
    for h in range(m):
        size = 1 << h
        into_sub = np.zeros(size, dtype=np.float64)
        sub = np.arange(size)
        for u in range(h):
            into_sub += w[u, h] * ((sub >> u) & 1)
        cuts[size : 2 * size] = cuts[:size] + total_deg[h] - 2.0 * into_sub
    best = int(np.argmax(cuts))
    side = np.array([(best >> v) & 1 for v in range(m)] + [0], dtype=bool)
    if not side.any():
        side[0] = True  # zero-weight graph; return a nontrivial split anyway
    return CutAssignment(side=side, value=float(cuts[best]))


def exact_hypermatching(obj, k: int, cap: int = 12) -> HypermatchingPartition:
    """Optimal partition into n/k groups of size k, by recursive enumeration."""
    w = _weight_matrix(obj)
    n = w.shape[0]
    if n > cap:
        raise ValueError(f"n={n} exceeds exact-hypermatching cap {cap}; raise cap explicitly")
    if k < 2:
        raise ValueError("group size must be at least 2")
    if n % k != 0:
        raise ValueError(f"group size {k} must divide n={n}")

    best_value = -math.inf
    best_groups: list[tuple[int, ...]] | None = None

    def inner_weight(group: tuple[int, ...]) -> float:
        idx = np.asarray(group)
        return float(w[np.ix_(idx, idx)].sum()) / 2.0

    def recurse(free: tuple[int, ...], acc: list[tuple[int, ...]], value: float) -> None:
        nonlocal best_value, best_groups
        if not free:
            if value > best_value:
                best_value = value
                best_groups = list(acc)
            return
        head, rest = free[0], free[1:]
        for partners in combinations(rest, k - 1):
            group = (head,) + partners
            remaining = tuple(x for x in rest if x not in partners)
            acc.append(group)
            recurse(remaining, acc, value + inner_weight(group))
            acc.pop()

    recurse(tuple(range(n)), [], 0.0)
    groups = [np.asarray(g, dtype=np.int64) for g in best_groups]
    return HypermatchingPartition(groups=groups, value=float(best_value))
