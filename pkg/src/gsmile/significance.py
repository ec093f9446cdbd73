"""Bootstrap exceedance test for transport distances.

Given samples X and Y, the observed distance is compared against distances
between resamples drawn with replacement from the pooled data: iteration i
draws |X| pseudo-X points and |Y| pseudo-Y points from X concatenated with Y
and records their distance.  The p-value is the fraction of iterations whose
resampled distance reaches the observed one,

    p = #{i : boot_dist_i >= observed} / max_itr .

Scalar samples use the closed-form 1-D Wasserstein distance; vector samples
use the exact transport distance with uniform weights.  Iteration i derives
its own random substream from ``(seed, i)``, so the schedule can be
partitioned across any number of workers without changing the result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import EmptyInputError, MixedSampleKindsError
from .transport import minimum_cost_flow, wasserstein_1d


@dataclass(frozen=True)
class SignificanceResult:
    """Observed distance with its bootstrap exceedance probability."""

    observed: float
    p_value: float
    exceed_count: int
    max_itr: int


def _as_sample(name: str, values: Sequence) -> np.ndarray:
    if len(values) == 0:
        raise EmptyInputError(f"{name} is empty")
    try:
        arr = np.asarray(values, dtype=float)
    except (ValueError, TypeError) as exc:
        raise MixedSampleKindsError(f"{name} mixes scalars and vectors") from exc
    if arr.ndim not in (1, 2):
        raise MixedSampleKindsError(f"{name} must hold scalars or flat vectors")
    return arr


def bootstrap_distances(
    pool: np.ndarray,
    n_x: int,
    n_y: int,
    max_itr: int,
    seed: int,
    p: int = 1,
) -> np.ndarray:
    """Distances between pooled resamples, one per iteration.

    ``pool`` is the concatenation of the two original samples (1-D scalars or
    a 2-D row-per-vector array).  The i-th iteration seeds its generator with
    ``(seed, i)``; identical arguments always reproduce the identical array.
    """
    if max_itr < 1:
        raise ValueError(f"max_itr must be >= 1, got {max_itr}")
    size = len(pool)
    scalar = pool.ndim == 1
    if not scalar:
        # pairwise ground costs once; each iteration only slices
        ground = cdist(pool, pool, "euclidean") ** p
    out = np.empty(max_itr)
    for i in range(max_itr):
        rng = np.random.default_rng((seed, i))
        idx = rng.integers(0, size, size=n_x + n_y)
        ex, fy = idx[:n_x], idx[n_x:]
        if scalar:
            out[i] = wasserstein_1d(pool[ex], pool[fy], p=p)
        else:
            ux, cx = np.unique(ex, return_counts=True)
            uy, cy = np.unique(fy, return_counts=True)
            cost, _ = minimum_cost_flow(
                ground[np.ix_(ux, uy)], cx / n_x, cy / n_y
            )
            out[i] = max(cost, 0.0) ** (1.0 / p)
    return out


def bootstrap_pvalue(
    X: Sequence,
    Y: Sequence,
    max_itr: int = 10_000,
    seed: int = 0,
    p: int = 1,
) -> SignificanceResult:
    """Exceedance probability of the observed X-vs-Y transport distance.

    An observed distance of exactly 0 short-circuits to p = 1.0: resampled
    distances are nonnegative, so every iteration would count.  Raises
    EmptyInputError for empty samples and MixedSampleKindsError when the two
    samples are not both scalars or both equal-width vectors.
    """
    if max_itr < 1:
        raise ValueError(f"max_itr must be >= 1, got {max_itr}")
    xs = _as_sample("X", X)
    ys = _as_sample("Y", Y)
    if xs.ndim != ys.ndim or (xs.ndim == 2 and xs.shape[1] != ys.shape[1]):
        raise MixedSampleKindsError(
            f"sample kinds differ: {xs.shape} vs {ys.shape}"
        )

    if xs.shape == ys.shape and np.array_equal(xs, ys):
        observed = 0.0
    elif xs.ndim == 1:
        observed = wasserstein_1d(xs, ys, p=p)
    else:
        n_x, n_y = len(xs), len(ys)
        ground = cdist(xs, ys, "euclidean") ** p
        cost, _ = minimum_cost_flow(
            ground, np.full(n_x, 1.0 / n_x), np.full(n_y, 1.0 / n_y)
        )
        observed = max(cost, 0.0) ** (1.0 / p)

    if observed == 0.0:
        return SignificanceResult(
            observed=0.0, p_value=1.0, exceed_count=max_itr, max_itr=max_itr
        )

    pool = np.concatenate([xs, ys])
    dists = bootstrap_distances(pool, len(xs), len(ys), max_itr, seed, p=p)
    exceed = int(np.sum(dists >= observed))
    return SignificanceResult(
        observed=float(observed),
        p_value=exceed / max_itr,
        exceed_count=exceed,
        max_itr=max_itr,
    )


def filter_significant(records: Sequence, alpha: float) -> list:
    """Keep records whose ``p_value`` is at most alpha.

    Record 0 is the unperturbed baseline and is always kept regardless of its
    p-value; order is preserved.  ``alpha = 1`` keeps everything.  Raises
    EmptyInputError on an empty record list.
    """
    if len(records) == 0:
        raise EmptyInputError("no records to filter")
    kept = [records[0]]
    kept.extend(r for r in records[1:] if r.p_value <= alpha)
    return kept
