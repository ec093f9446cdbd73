"""Optimal-transport distances and the distance-to-weight kernel.

``emd`` solves the discrete transportation problem exactly

    minimize    sum_ij T_ij * ||x_i - y_j||^p
    subject to  sum_j T_ij = a_i,   sum_i T_ij = b_j,   T_ij >= 0

with a deterministic dual-simplex LP, so degenerate optima resolve the same
way on every run.  Returned distances are ``cost ** (1/p)``.  ``wmd`` applies
the same solve to normalized bag-of-words distributions of two documents.
``wasserstein_1d`` is the closed-form coupling of sorted samples, exact for
unequal lengths.  ``gaussian_weight`` maps an input-side distance delta to a
locality weight ``exp(-(delta / sigma)**2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from .embed import EmbeddingTable, WeightedPointCloud, doc_to_nbow
from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    NonPositiveSigmaError,
)

_LP_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True)
class TransportPlan:
    """Optimal flow matrix with its objective value.

    ``matrix[i, j]`` is the mass moved from source i to target j; ``cost`` is
    the achieved objective ``sum(matrix * ground_cost)`` and ``distance`` is
    ``cost ** (1/p)``.
    """

    matrix: np.ndarray
    cost: float
    distance: float


def minimum_cost_flow(cost: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """Solve the transportation LP for a given ground-cost matrix.

    ``a`` and ``b`` are nonnegative marginals with equal totals.  Returns the
    optimal objective and the flow matrix.  This is the kernel behind
    :func:`emd`; the bootstrap reuses it directly with precomputed costs.
    """
    n, m = cost.shape
    if n == 0 or m == 0:
        raise EmptyInputError("transport needs at least one point per side")
    if n == 1:
        # all target mass comes from the single source
        plan = b.reshape(1, m).astype(float)
        return float(np.dot(cost[0], b)), plan
    if m == 1:
        plan = a.reshape(n, 1).astype(float)
        return float(np.dot(cost[:, 0], a)), plan

    c = cost.reshape(-1)
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([a, b])
    res = linprog(
        c,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs-ds",
        options=_LP_OPTIONS,
    )
    if not res.success:
        raise EmptyInputError(f"transport LP failed: {res.message}")
    return float(res.fun), res.x.reshape(n, m)


def emd(a: WeightedPointCloud, b: WeightedPointCloud, p: int = 1) -> TransportPlan:
    """Exact earth mover's distance between two weighted point clouds.

    Ground cost is the Euclidean distance raised to ``p`` (p in {1, 2}).
    Both clouds must share a dimension and carry equal total mass.  The plan
    satisfies the marginal constraints to solver precision and the returned
    distance is zero exactly when the clouds coincide as weighted multisets.
    """
    if p not in (1, 2):
        raise ValueError(f"p must be 1 or 2, got {p}")
    if len(a.points) == 0 or len(b.points) == 0:
        raise EmptyInputError("cannot transport an empty cloud")
    if a.dim != b.dim:
        raise DimensionMismatchError(f"cloud dims differ: {a.dim} vs {b.dim}")
    ground = cdist(a.points, b.points, "euclidean") ** p
    cost, plan = minimum_cost_flow(ground, np.asarray(a.weights, float), np.asarray(b.weights, float))
    cost = max(cost, 0.0)
    return TransportPlan(matrix=plan, cost=cost, distance=cost ** (1.0 / p))


def wmd(doc_a: Sequence[str], doc_b: Sequence[str], table: EmbeddingTable) -> float:
    """Word mover's distance between two token sequences.

    Documents are embedded as normalized bag-of-words clouds (repeated tokens
    accumulate weight, out-of-vocabulary tokens drop out) and compared with
    the p=1 transport distance.  Identical token multisets give 0.
    """
    if list(doc_a) == list(doc_b):
        return 0.0
    nbow_a = doc_to_nbow(list(doc_a), table)
    nbow_b = doc_to_nbow(list(doc_b), table)
    return emd(nbow_a, nbow_b, p=1).distance


def wasserstein_1d(xs: Sequence[float], ys: Sequence[float], p: int = 1) -> float:
    """Closed-form p-Wasserstein distance between scalar samples.

    Integrates |F_x^{-1}(u) - F_y^{-1}(u)|^p over the unit interval, which
    for equal lengths reduces to pairing the sorted sequences index by index.
    Exact for unequal lengths as well; no LP is involved.
    """
    if p not in (1, 2):
        raise ValueError(f"p must be 1 or 2, got {p}")
    nx, ny = len(xs), len(ys)
    if nx == 0 or ny == 0:
        raise EmptyInputError("both samples must be non-empty")
    xs_s = np.sort(np.asarray(xs, dtype=float))
    ys_s = np.sort(np.asarray(ys, dtype=float))
    if nx == ny:
        cost = float(np.mean(np.abs(xs_s - ys_s) ** p))
        return cost ** (1.0 / p)
    edges = np.union1d(np.arange(1, nx) / nx, np.arange(1, ny) / ny)
    edges = np.concatenate([[0.0], edges, [1.0]])
    widths = np.diff(edges)
    mids = (edges[:-1] + edges[1:]) / 2.0
    qx = xs_s[np.minimum((mids * nx).astype(int), nx - 1)]
    qy = ys_s[np.minimum((mids * ny).astype(int), ny - 1)]
    cost = float(np.sum(widths * np.abs(qx - qy) ** p))
    return cost ** (1.0 / p)


def gaussian_weight(delta: float, sigma: float) -> float:
    """Locality weight ``exp(-(delta / sigma)**2)``.

    A perturbation at distance 0 gets weight 1; distance sigma gets 1/e.
    Raises NonPositiveSigmaError unless sigma is a finite-or-infinite
    positive number (sigma = inf yields weight 1 for every delta).
    """
    if not sigma > 0:
        raise NonPositiveSigmaError(f"sigma must be > 0, got {sigma}")
    return float(np.exp(-((delta / sigma) ** 2)))


def median_sigma(deltas: Sequence[float]) -> float:
    """Median of the strictly positive distances, or 1.0 when none exist.

    The usual bandwidth heuristic for the Gaussian kernel; ignoring zeros
    keeps the baseline record from collapsing the bandwidth.
    """
    positive = [d for d in deltas if d > 0]
    if not positive:
        return 1.0
    return float(np.median(positive))
