"""Linear sampling of weighted instances.

For a scale ``alpha``, the sampled graph H keeps each edge independently:
an edge with ``alpha * w <= 1`` survives with probability ``alpha * w``
and weight 1; an edge with ``alpha * w > 1`` always survives, with weight
``alpha * w``.  Every stored weight is therefore at least 1 and the
expected stored weight of any edge equals ``alpha * w``.

Scanning all pairs would defeat the point, so the scan rides on the level
decomposition: rounds whose bound exceeds ``1/alpha`` are read in full
(their edges may be heavy), later rounds are subsampled at rate
``alpha * L_i`` and accepted with probability ``w / L_i``, and the
residual pairs are subsampled at rate ``2/(lam*n)``.  Each stage
multiplies out to the same per-edge probability ``alpha * w``, while the
expected number of queries stays near the expected sampled weight plus
O(n) overhead.

``build_h_beta`` picks alpha so the expected total stored weight lands in
``[beta, gamma*beta]``, using a crude then refined estimate of the average
edge weight.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .decompose import (
    DecomposeConstants,
    Decomposition,
    build_decomposition,
    estimate_weight_upper_bound,
)
from .oracle import MetricInstance, QueryLedger, weight_query_batch
from .pairs import (
    all_incident_pairs,
    bernoulli_indices,
    ensure_rng,
    incident_pair_count,
    pair_count,
    unrank_incident_pairs,
    unrank_pairs,
)

PROB_TOL = 1e-12


class DegenerateInstanceError(ValueError):
    """The instance is identically zero; there is nothing to sample."""


class InternalConsistencyError(RuntimeError):
    """A computed probability left [0, 1] by more than float noise.

    This is the detectable face of a silent decomposition failure: an
    overweight edge survived past its level.
    """


@dataclass
class SampledGraph:
    """Sparsified graph with per-edge stored weights.

    ``queries_used`` is the ledger delta of the operation that built the
    graph, including any internal decomposition work.
    """

    n: int
    us: np.ndarray
    vs: np.ndarray
    weights: np.ndarray
    alpha: float | None
    beta: float | None = None
    queries_used: int = 0
    seed: int | None = None

    def __post_init__(self):
        self.us = np.asarray(self.us, dtype=np.int64)
        self.vs = np.asarray(self.vs, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)

    @property
    def edge_count(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def write_csv(self, path) -> None:
        """Edge list as ``u,v,weight`` plus a JSON sidecar at path + '.json'."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("u,v,weight\n")
            for u, v, w in zip(self.us, self.vs, self.weights):
                fh.write(f"{u},{v},{w!r}\n")
        sidecar = {
            "n": self.n,
            "alpha": self.alpha,
            "beta": self.beta,
            "queries_used": self.queries_used,
            "seed": self.seed,
        }
        with open(str(path) + ".json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, sort_keys=True)
            fh.write("\n")


@dataclass
class SamplerConfig:
    """Target scale and slack for sampled-graph construction."""

    beta: float | None = None
    alpha: float | None = None
    epsilon: float = 0.1
    gamma: float = 2.0
    constants: DecomposeConstants = field(default_factory=DecomposeConstants)
    seed: int | None = None

    def __post_init__(self):
        if self.beta is not None and self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in (0, 1]")
        if self.gamma < 1.0:
            raise ValueError("gamma must be at least 1")


@dataclass
class AverageEstimate:
    value: float
    degenerate: bool = False
    alpha: float | None = None


def required_depth(n: int, max_scaled_weight: float) -> int:
    """Levels needed so the residual bound supports the final sampling rate.

    One level beyond ``log2(n) + log2(M)`` pins the residual bound at or
    below ``L / (n * M)``, which keeps the residual acceptance probability
    within [0, 1] for any alpha with ``alpha * max_w <= M``.
    """
    m = max(float(max_scaled_weight), 2.0)
    return max(2, math.ceil(math.log2(n) + math.log2(m)) + 1)


def crude_average_estimate(instance: MetricInstance, ledger: QueryLedger) -> float:
    """Average edge weight, correct within a factor of 2n from below.

    Sums the rows of the first ceil(1/lam) vertices and divides by twice
    the pair count.  The triangle inequality makes those rows carry at
    least a 1/n fraction of the total weight, and no edge is counted more
    than twice, so ``w_bar/(2n) <= estimate <= w_bar`` using at most
    ``n * ceil(1/lam)`` queries.
    """
    n = instance.n
    if n < 2:
        raise ValueError("need at least two vertices")
    s = min(n, int(math.ceil(1.0 / instance.lam)))
    total = 0.0
    for v in range(s):
        others = np.concatenate(
            [np.arange(v, dtype=np.int64), np.arange(v + 1, n, dtype=np.int64)]
        )
        row = weight_query_batch(instance, np.full(n - 1, v, dtype=np.int64), others, ledger)
        total += float(row.sum())
    return total / (2.0 * pair_count(n))


def _decide_edges(rng, alpha, rate, w):
    """Accept queried edges so the overall per-edge probability is alpha*w.

    ``rate`` is the probability with which the pair was queried.  In a
    full scan (rate 1) edges with alpha*w > 1 are kept deterministically
    at weight alpha*w; under subsampling the conditional acceptance
    ``alpha*w / rate`` must be a probability, anything beyond float
    tolerance means the decomposition lied about its bounds.
    """
    scaled = alpha * w
    if rate >= 1.0:
        heavy = scaled > 1.0
        keep = heavy | (rng.random(len(w)) < scaled)
        out_w = np.where(heavy, scaled, 1.0)
        return keep, out_w
    cond = scaled / rate
    worst = cond.max(initial=0.0)
    if worst > 1.0 + PROB_TOL:
        raise InternalConsistencyError(
            f"conditional acceptance {worst:.6g} > 1; an edge outlived its level bound"
        )
    keep = rng.random(len(w)) < np.minimum(cond, 1.0)
    return keep, np.ones(len(w), dtype=np.float64)


def build_h_alpha(
    instance: MetricInstance,
    alpha: float,
    constants: DecomposeConstants | None = None,
    rng=None,
    ledger: QueryLedger | None = None,
    *,
    decomposition: Decomposition | None = None,
    max_scaled_weight: float | None = None,
) -> SampledGraph:
    """Linear sample at a fixed scale alpha.

    Builds (or reuses) a level decomposition, then scans each round's
    departing edges at the appropriate rate.  The expected query count is
    O(n log^2 n + n log^2 M + alpha * total_weight / lam + n / lam).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if ledger is None:
        ledger = QueryLedger()
    constants = constants or DecomposeConstants()
    rng = ensure_rng(rng)
    n = instance.n
    lam = instance.lam
    start = ledger.count

    if decomposition is None:
        upper = estimate_weight_upper_bound(instance, ledger)
        m_bound = max_scaled_weight if max_scaled_weight is not None else alpha * upper
        t = required_depth(n, m_bound)
        decomposition = build_decomposition(
            instance, t, constants, rng.spawn(1)[0], ledger, upper_bound=upper
        )

    residual_rate = min(1.0, 2.0 / (lam * n))
    if residual_rate < 1.0 and alpha * decomposition.residual_bound > residual_rate * (1 + 1e-9):
        raise InternalConsistencyError(
            "decomposition too shallow for this alpha; rebuild with more levels"
        )

    t = decomposition.t
    level_rngs = rng.spawn(t)
    out_us, out_vs, out_ws = [], [], []

    for i, level in enumerate(decomposition.levels[:-1]):
        if level.bound <= 0.0 or len(level.nu) == 0:
            continue
        rest = np.setdiff1d(level.vertices, level.nu, assume_unique=True)
        count = incident_pair_count(len(level.nu), len(rest))
        if count == 0:
            continue
        rate = min(1.0, alpha * level.bound)
        if rate >= 1.0:
            us, vs = all_incident_pairs(level.nu, rest)
        else:
            idx = bernoulli_indices(level_rngs[i], count, rate)
            us, vs = unrank_incident_pairs(level.nu, rest, idx)
        if len(us) == 0:
            continue
        w = weight_query_batch(instance, us, vs, ledger)
        keep, w_out = _decide_edges(level_rngs[i], alpha, rate, w)
        out_us.append(us[keep])
        out_vs.append(vs[keep])
        out_ws.append(w_out[keep])

    residual = decomposition.residual_vertices
    count = pair_count(len(residual))
    if count > 0:
        r_rng = level_rngs[-1]
        if residual_rate >= 1.0:
            i, j = np.triu_indices(len(residual), k=1)
            us, vs = residual[i], residual[j]
        else:
            idx = bernoulli_indices(r_rng, count, residual_rate)
            i, j = unrank_pairs(len(residual), idx)
            us, vs = residual[i], residual[j]
        if len(us):
            w = weight_query_batch(instance, us, vs, ledger)
            keep, w_out = _decide_edges(r_rng, alpha, residual_rate, w)
            out_us.append(us[keep])
            out_vs.append(vs[keep])
            out_ws.append(w_out[keep])

    empty = np.empty(0, dtype=np.int64)
    return SampledGraph(
        n=n,
        us=np.concatenate(out_us) if out_us else empty,
        vs=np.concatenate(out_vs) if out_vs else empty,
        weights=np.concatenate(out_ws) if out_ws else np.empty(0, dtype=np.float64),
        alpha=float(alpha),
        queries_used=ledger.count - start,
    )


def estimate_average_from_h(h: SampledGraph) -> float:
    """Average edge weight implied by a sampled graph: sum(w') / (alpha*C(n,2))."""
    if h.alpha is None or h.alpha <= 0:
        raise ValueError("sampled graph carries no scale factor")
    return h.total_weight / (h.alpha * pair_count(h.n))


def refine_average_estimate(
    instance: MetricInstance,
    epsilon: float,
    constants: DecomposeConstants | None = None,
    rng=None,
    ledger: QueryLedger | None = None,
    *,
    decomposition: Decomposition | None = None,
    crude: float | None = None,
) -> AverageEstimate:
    """Average edge weight within (1 +/- epsilon), via a calibrated sample.

    Bootstraps from the crude estimate: the sampling scale
    ``3*ln(2n) / (eps^2 * C(n,2) * crude)`` guarantees the sampled total
    weight is large enough for the concentration to bite, at the price of
    oversampling by up to the crude estimate's 2n slack.  Succeeds with
    probability at least 1 - 2/n.  An identically zero instance yields
    value 0 with the ``degenerate`` flag set.
    """
    if not (0.0 < epsilon <= 1.0):
        raise ValueError("epsilon must lie in (0, 1]")
    if instance.n < 2:
        raise ValueError("need at least two vertices")
    if ledger is None:
        ledger = QueryLedger()
    rng = ensure_rng(rng)
    if crude is None:
        crude = crude_average_estimate(instance, ledger)
    if crude <= 0.0:
        return AverageEstimate(value=0.0, degenerate=True)
    n = instance.n
    alpha = 3.0 * math.log(2 * n) / (epsilon**2 * pair_count(n) * crude)
    h = build_h_alpha(
        instance, alpha, constants, rng, ledger, decomposition=decomposition
    )
    return AverageEstimate(value=estimate_average_from_h(h), alpha=alpha)


def build_h_beta(
    instance: MetricInstance,
    config: SamplerConfig,
    rng=None,
    ledger: QueryLedger | None = None,
) -> SampledGraph:
    """Linear sample with expected total weight in [beta, gamma*beta].

    The scale is ``alpha = beta / (C(n,2) * w_hat)`` where ``w_hat`` is
    the refined average estimate at accuracy ``gamma - 1``, divided by
    gamma so it cannot exceed the true average (that one-sided bound is
    what makes beta a firm lower bound on the expected sampled weight).
    One decomposition, deep enough for both passes, is shared by the
    calibration sample and the final sample.  Success probability is at
    least 1 - 3/n.
    """
    if config.beta is None or config.beta <= 0:
        raise ValueError("config.beta must be set and positive")
    if not (1.0 < config.gamma <= 2.0):
        raise ValueError(
            "gamma must lie in (1, 2]: the calibration pass runs at accuracy gamma-1"
        )
    if ledger is None:
        ledger = QueryLedger()
    rng = ensure_rng(rng)
    n = instance.n
    if n < 2:
        raise ValueError("need at least two vertices")
    beta = float(config.beta)
    constants = config.constants
    start = ledger.count

    upper = estimate_weight_upper_bound(instance, ledger)
    crude = crude_average_estimate(instance, ledger)
    if crude <= 0.0:
        raise DegenerateInstanceError("cannot linearly sample an all-zero metric")

    eps_refine = config.gamma - 1.0
    alpha_refine = 3.0 * math.log(2 * n) / (eps_refine**2 * pair_count(n) * crude)
    # the final scale is unknown until w_hat exists; 2*beta bounds its
    # max scaled weight, so one decomposition can serve both passes
    depth = required_depth(n, max(2.0 * beta, alpha_refine * upper))
    decomposition = build_decomposition(
        instance, depth, constants, rng.spawn(1)[0], ledger, upper_bound=upper
    )

    refined = refine_average_estimate(
        instance,
        eps_refine,
        constants,
        rng.spawn(1)[0],
        ledger,
        decomposition=decomposition,
        crude=crude,
    )
    # crude is itself a lower estimate of the average, so it floors w_hat
    # without breaking the upper bound; this matters only on the rare
    # event that the calibration sample came back empty
    w_hat = max(refined.value / config.gamma, crude)
    alpha = beta / (pair_count(n) * w_hat)

    residual_rate = min(1.0, 2.0 / (instance.lam * n))
    if residual_rate < 1.0 and alpha * decomposition.residual_bound > residual_rate:
        # w_hat fell far below the crude floor's usual range; deepen and retry
        depth = required_depth(n, alpha * upper)
        decomposition = build_decomposition(
            instance, depth, constants, rng.spawn(1)[0], ledger, upper_bound=upper
        )

    h = build_h_alpha(
        instance, alpha, constants, rng.spawn(1)[0], ledger, decomposition=decomposition
    )
    h.beta = beta
    h.seed = config.seed
    h.queries_used = ledger.count - start
    return h


def uniform_sample(
    instance: MetricInstance, p: float, rng=None, ledger: QueryLedger | None = None
) -> SampledGraph:
    """Keep each edge independently with probability p, at original weight.

    The oblivious baseline: only sampled pairs are ever queried, and the
    edge weights play no role in who survives.  ``alpha`` is unset.
    """
    if not (0.0 < p <= 1.0):
        raise ValueError("p must lie in (0, 1]")
    if ledger is None:
        ledger = QueryLedger()
    rng = ensure_rng(rng)
    n = instance.n
    start = ledger.count
    idx = bernoulli_indices(rng, pair_count(n), p)
    i, j = unrank_pairs(n, idx)
    w = weight_query_batch(instance, i, j, ledger)
    return SampledGraph(
        n=n,
        us=i,
        vs=j,
        weights=w,
        alpha=None,
        queries_used=ledger.count - start,
    )
