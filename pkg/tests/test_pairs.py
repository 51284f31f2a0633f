"""Pair indexing and geometric-gap sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linsample.pairs import (
    all_incident_pairs,
    all_pairs,
    bernoulli_indices,
    incident_pair_count,
    pair_count,
    rank_pairs,
    unrank_pairs,
    unrank_incident_pairs,
)


def test_pair_count():
    assert pair_count(0) == 0
    assert pair_count(1) == 0
    assert pair_count(2) == 1
    assert pair_count(20) == 190


@given(st.integers(min_value=2, max_value=60))
def test_rank_unrank_roundtrip(m):
    idx = np.arange(pair_count(m))
    i, j = unrank_pairs(m, idx)
    assert np.all(i < j)
    assert np.array_equal(rank_pairs(m, i, j), idx)
    # canonical order matches triu enumeration
    ti, tj = all_pairs(m)
    assert np.array_equal(i, ti)
    assert np.array_equal(j, tj)


def test_rank_is_symmetric():
    assert rank_pairs(10, np.array([7]), np.array([2])) == rank_pairs(
        10, np.array([2]), np.array([7])
    )


@given(
    st.integers(min_value=0, max_value=12),
    st.integers(min_value=0, max_value=12),
)
@settings(max_examples=40)
def test_incident_pair_space(a, b):
    core = np.arange(100, 100 + a, dtype=np.int64)
    rest = np.arange(200, 200 + b, dtype=np.int64)
    count = incident_pair_count(a, b)
    us, vs = unrank_incident_pairs(core, rest, np.arange(count))
    au, av = all_incident_pairs(core, rest)
    assert np.array_equal(us, au)
    assert np.array_equal(vs, av)
    # each unordered pair appears exactly once
    seen = {tuple(sorted(p)) for p in zip(us.tolist(), vs.tolist())}
    assert len(seen) == count


def test_bernoulli_indices_edge_cases():
    rng = np.random.default_rng(0)
    assert len(bernoulli_indices(rng, 0, 0.5)) == 0
    assert len(bernoulli_indices(rng, 100, 0.0)) == 0
    assert np.array_equal(bernoulli_indices(rng, 7, 1.0), np.arange(7))


def test_bernoulli_indices_distribution():
    # mean count over many runs within 4 sigma of the binomial mean
    n_items, p, runs = 500, 0.13, 2000
    rng = np.random.default_rng(11)
    counts = [len(bernoulli_indices(rng, n_items, p)) for _ in range(runs)]
    mean = np.mean(counts)
    sigma = np.sqrt(n_items * p * (1 - p) / runs)
    assert abs(mean - n_items * p) < 4 * sigma
    idx = bernoulli_indices(np.random.default_rng(5), n_items, p)
    assert np.all(np.diff(idx) > 0) and idx.min() >= 0 and idx.max() < n_items


def test_bernoulli_indices_deterministic():
    a = bernoulli_indices(np.random.default_rng(42), 10_000, 0.01)
    b = bernoulli_indices(np.random.default_rng(42), 10_000, 0.01)
    assert np.array_equal(a, b)


def test_bernoulli_indices_marginals_uniform():
    # every index is hit at the same rate, not just the right total count
    n_items, p, runs = 40, 0.3, 4000
    hits = np.zeros(n_items)
    rng = np.random.default_rng(3)
    for _ in range(runs):
        hits[bernoulli_indices(rng, n_items, p)] += 1
    sigma = np.sqrt(p * (1 - p) / runs)
    assert np.abs(hits / runs - p).max() < 4.5 * sigma


def test_unrank_rejects_out_of_range_gracefully():
    with pytest.raises(IndexError):
        i, j = unrank_pairs(3, np.array([99]))
        _ = i[0], j[0]
        np.arange(3)[j]  # force use
