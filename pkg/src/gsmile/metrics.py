"""Evaluation scores for attribution vectors.

Accuracy-style scores compare a score vector against binary token labels:
scores are min-max normalized, thresholded, and matched against the labels.
AUROC is the pairwise ranking probability over positive/negative pairs.
Stability is the Jaccard overlap of top-k token sets across two runs;
consistency is the spread of coefficients across repeated runs; fidelity
summarizes how well surrogate predictions track the observed targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AdjustedUndefinedError,
    AllZeroWeightsError,
    DegenerateTruthError,
    DegenerateVarianceError,
    KTooLargeError,
    LengthMismatchError,
    TooFewRunsError,
)


def minmax_normalize(values: Sequence[float]) -> np.ndarray:
    """Scale values to [0, 1]; a constant vector maps to all zeros."""
    arr = np.asarray(values, dtype=float)
    low, high = arr.min(), arr.max()
    if high == low:
        return np.zeros_like(arr)
    return (arr - low) / (high - low)


def _check_pair(scores: Sequence[float], labels: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float)
    t = np.asarray(labels, dtype=int)
    if len(s) != len(t):
        raise LengthMismatchError(f"{len(s)} scores for {len(t)} labels")
    if len(s) == 0:
        raise LengthMismatchError("scores and labels are empty")
    return s, t


def att_acc(scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5) -> float:
    """Fraction of tokens whose thresholded normalized score matches its label."""
    s, t = _check_pair(scores, labels)
    preds = (minmax_normalize(s) >= threshold).astype(int)
    return float(np.mean(preds == t))


def att_f1(scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5) -> float:
    """Harmonic mean of precision and recall of the thresholded scores.

    Returns 0.0 when precision + recall is zero (nothing correctly ranked).
    """
    s, t = _check_pair(scores, labels)
    preds = (minmax_normalize(s) >= threshold).astype(int)
    tp = int(np.sum((preds == 1) & (t == 1)))
    fp = int(np.sum((preds == 1) & (t == 0)))
    fn = int(np.sum((preds == 0) & (t == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def att_auroc(scores: Sequence[float], labels: Sequence[int], tie_policy: str = "strict") -> float:
    """Pairwise ranking probability of positives over negatives.

        auroc = (1 / |P||N|) * sum_{p in P} sum_{n in N} 1[s_p > s_n]

    ``tie_policy='half'`` credits ties 0.5 instead of 0.  Raises
    DegenerateTruthError when the labels lack a positive or a negative.
    """
    if tie_policy not in ("strict", "half"):
        raise ValueError(f"tie_policy must be 'strict' or 'half', got {tie_policy!r}")
    s, t = _check_pair(scores, labels)
    pos = s[t == 1]
    neg = s[t == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise DegenerateTruthError("labels need at least one positive and one negative")
    wins = np.sum(pos[:, None] > neg[None, :])
    if tie_policy == "half":
        wins = wins + 0.5 * np.sum(pos[:, None] == neg[None, :])
    return float(wins / (len(pos) * len(neg)))


def _topk_ids(coeffs: np.ndarray, k: int, tokens: Sequence[str] | None) -> set:
    order = np.argsort(-np.abs(coeffs), kind="stable")[:k]
    if tokens is None:
        return set(int(i) for i in order)
    return set(tokens[int(i)] for i in order)


def jaccard_topk(
    coeffs_a: Sequence[float],
    coeffs_b: Sequence[float],
    k: int,
    tokens_a: Sequence[str] | None = None,
    tokens_b: Sequence[str] | None = None,
) -> float:
    """Jaccard overlap of the two top-k coefficient sets.

    Ranking is by absolute coefficient, ties broken by earlier position.
    When token lists are given, identity is the token string, so an extra
    token appended to one run does not shift the other run's entries; without
    tokens, positions are compared.  Raises KTooLargeError when k exceeds the
    shorter coefficient list.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    a = np.asarray(coeffs_a, dtype=float)
    b = np.asarray(coeffs_b, dtype=float)
    if k > min(len(a), len(b)):
        raise KTooLargeError(f"k={k} exceeds coefficient count {min(len(a), len(b))}")
    if tokens_a is not None and len(tokens_a) != len(a):
        raise LengthMismatchError("tokens_a does not match coeffs_a")
    if tokens_b is not None and len(tokens_b) != len(b):
        raise LengthMismatchError("tokens_b does not match coeffs_b")
    top_a = _topk_ids(a, k, tokens_a)
    top_b = _topk_ids(b, k, tokens_b)
    union = top_a | top_b
    if not union:
        return 1.0
    return len(top_a & top_b) / len(union)


def consistency_stats(runs: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Mean per-token spread of coefficients across repeated runs.

    Returns ``(variance, std)``: the population variance of each token's
    coefficient across runs averaged over tokens, and likewise the averaged
    population standard deviation.  Raises TooFewRunsError for fewer than two
    runs and LengthMismatchError for ragged inputs.
    """
    if len(runs) < 2:
        raise TooFewRunsError(f"need at least 2 runs, got {len(runs)}")
    lengths = {len(r) for r in runs}
    if len(lengths) != 1:
        raise LengthMismatchError(f"runs have differing lengths: {sorted(lengths)}")
    mat = np.asarray(runs, dtype=float)
    # variance is shift-invariant; anchoring each column at its first run
    # keeps identical runs at exactly zero instead of accumulation noise
    mat = mat - mat[0]
    per_token_var = mat.var(axis=0, ddof=0)
    per_token_std = mat.std(axis=0, ddof=0)
    return float(per_token_var.mean()), float(per_token_std.mean())


@dataclass(frozen=True)
class FidelityReport:
    """Goodness-of-fit summary of surrogate predictions.

    The r2 fields are None when the targets are constant (or, for the
    adjusted variant, when the sample count cannot support it) and the report
    was built with ``allow_degenerate``.
    """

    r2: float | None
    r2_w: float | None
    r2_w_adj: float | None
    wmse: float
    wmae: float
    l1: float
    l2: float


def fidelity_report(
    y: Sequence[float],
    y_hat: Sequence[float],
    w: Sequence[float],
    n_features: int,
    allow_degenerate: bool = False,
) -> FidelityReport:
    """Fidelity of predictions ``y_hat`` to targets ``y`` under weights ``w``.

        r2      = 1 - sum (y - y_hat)^2 / sum (y - mean y)^2
        r2_w    = 1 - sum w (y - y_hat)^2 / sum w (y - wmean y)^2
        r2_w_adj= 1 - (1 - r2_w) (J - 1) / (J - n_features - 1)
        wmse    = sum w (y - y_hat)^2 / sum w     (wmae with |.|)
        l1, l2  = unweighted means of |y - y_hat| and (y - y_hat)^2

    Raises DegenerateVarianceError when the targets are constant and
    AdjustedUndefinedError when J <= n_features + 1; with
    ``allow_degenerate`` those fields come back as None instead.
    """
    y_arr = np.asarray(y, dtype=float)
    y_hat_arr = np.asarray(y_hat, dtype=float)
    w_arr = np.asarray(w, dtype=float)
    if not (len(y_arr) == len(y_hat_arr) == len(w_arr)):
        raise LengthMismatchError(
            f"got {len(y_arr)} targets, {len(y_hat_arr)} predictions, {len(w_arr)} weights"
        )
    if n_features < 1:
        raise ValueError(f"n_features must be >= 1, got {n_features}")
    sw = w_arr.sum()
    if not sw > 0:
        raise AllZeroWeightsError("fidelity weights sum to zero")

    J = len(y_arr)
    err = y_arr - y_hat_arr
    l1 = float(np.mean(np.abs(err)))
    l2 = float(np.mean(err**2))
    wmse = float(np.sum(w_arr * err**2) / sw)
    wmae = float(np.sum(w_arr * np.abs(err)) / sw)

    sst = float(np.sum((y_arr - y_arr.mean()) ** 2))
    y_wmean = float(np.sum(w_arr * y_arr) / sw)
    sst_w = float(np.sum(w_arr * (y_arr - y_wmean) ** 2))
    if sst == 0.0 or sst_w == 0.0:
        if not allow_degenerate:
            raise DegenerateVarianceError("targets are constant; r2 undefined")
        return FidelityReport(
            r2=None, r2_w=None, r2_w_adj=None, wmse=wmse, wmae=wmae, l1=l1, l2=l2
        )

    r2 = 1.0 - float(np.sum(err**2)) / sst
    r2_w = 1.0 - float(np.sum(w_arr * err**2)) / sst_w
    denom = J - n_features - 1
    if denom <= 0:
        if not allow_degenerate:
            raise AdjustedUndefinedError(
                f"adjusted r2 needs J > n_features + 1, got J={J}, n_features={n_features}"
            )
        r2_w_adj = None
    else:
        r2_w_adj = 1.0 - (1.0 - r2_w) * (J - 1) / denom
    return FidelityReport(
        r2=r2, r2_w=r2_w, r2_w_adj=r2_w_adj, wmse=wmse, wmae=wmae, l1=l1, l2=l2
    )
