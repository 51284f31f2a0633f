"""Canonical pair indexing and Bernoulli index sampling.

Unordered vertex pairs are enumerated in a fixed lexicographic order so a
randomized scan can walk the implicit index space with geometric gaps
instead of materializing all pairs.  Work is then proportional to the
number of sampled pairs, not to the number of candidate pairs.
"""

from __future__ import annotations

import math

import numpy as np


def ensure_rng(rng) -> np.random.Generator:
    """Accept a Generator, a seed, or None and return a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def pair_count(m: int) -> int:
    """Number of unordered pairs over m items."""
    return m * (m - 1) // 2


def _row_starts(m: int) -> np.ndarray:
    # start index of row i in lexicographic pair order: pairs (i, j), j > i
    i = np.arange(m, dtype=np.int64)
    return i * m - (i * (i + 1)) // 2


def unrank_pairs(m: int, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map pair indices 0..C(m,2)-1 to position pairs (i, j) with i < j."""
    idx = np.asarray(idx, dtype=np.int64)
    starts = _row_starts(m)
    i = np.searchsorted(starts, idx, side="right") - 1
    j = idx - starts[i] + i + 1
    return i.astype(np.int64), j.astype(np.int64)


def rank_pairs(m: int, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Inverse of :func:`unrank_pairs`; i < j is not required."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    return lo * m - (lo * (lo + 1)) // 2 + (hi - lo - 1)


def all_pairs(m: int) -> tuple[np.ndarray, np.ndarray]:
    """All position pairs (i, j), i < j, in canonical order."""
    i, j = np.triu_indices(m, k=1)
    return i.astype(np.int64), j.astype(np.int64)


def incident_pair_count(n_core: int, n_rest: int) -> int:
    """Pairs touching a core set: core x rest plus pairs inside the core."""
    return n_core * n_rest + pair_count(n_core)


def unrank_incident_pairs(
    core: np.ndarray, rest: np.ndarray, idx: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Map indices over the incident-pair space to vertex pairs.

    The space enumerates cross pairs (core-major) first, then pairs inside
    the core in canonical order.  ``core`` and ``rest`` are disjoint vertex
    arrays.
    """
    idx = np.asarray(idx, dtype=np.int64)
    a, b = len(core), len(rest)
    n_cross = a * b
    us = np.empty(len(idx), dtype=np.int64)
    vs = np.empty(len(idx), dtype=np.int64)
    cross = idx < n_cross
    if b > 0:
        ci = idx[cross]
        us[cross] = core[ci // b]
        vs[cross] = rest[ci % b]
    inner = ~cross
    if inner.any():
        i, j = unrank_pairs(a, idx[inner] - n_cross)
        us[inner] = core[i]
        vs[inner] = core[j]
    return us, vs


def all_incident_pairs(core: np.ndarray, rest: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All incident pairs in canonical order without index arithmetic."""
    a, b = len(core), len(rest)
    us = [np.repeat(core, b)] if b else []
    vs = [np.tile(rest, a)] if b else []
    if a >= 2:
        i, j = all_pairs(a)
        us.append(core[i])
        vs.append(core[j])
    if not us:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(us), np.concatenate(vs)


def bernoulli_indices(rng, count: int, p: float) -> np.ndarray:
    """Indices of Bernoulli(p) successes over range(count).

    Gaps between successes are geometric, so the cost is proportional to
    the number of successes.  Draws happen in deterministic blocks, so the
    result depends only on the generator state.
    """
    rng = ensure_rng(rng)
    if count <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(count, dtype=np.int64)
    chunks = []
    prev = -1
    while prev < count - 1:
        expect = (count - 1 - prev) * p
        block = int(expect + 4.0 * math.sqrt(expect + 1.0) + 16.0)
        gaps = rng.geometric(p, size=block).astype(np.int64)
        cand = prev + np.cumsum(gaps)
        inside = cand[cand < count]
        chunks.append(inside)
        if len(inside) < len(cand):
            break
        prev = int(inside[-1]) if len(inside) else count
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)
