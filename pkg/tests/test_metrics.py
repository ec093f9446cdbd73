import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gsmile.errors import (
    AdjustedUndefinedError,
    DegenerateTruthError,
    DegenerateVarianceError,
    KTooLargeError,
    LengthMismatchError,
    TooFewRunsError,
)
from gsmile.metrics import (
    att_acc,
    att_auroc,
    att_f1,
    consistency_stats,
    fidelity_report,
    jaccard_topk,
    minmax_normalize,
)

TRUTH = [0, 0, 0, 1, 0, 1]
SHARP_SCORES = [0.10, 0.10, 0.01, 0.70, 0.20, 0.90]
BLURRY_SCORES = [0.10, 0.80, 0.01, 0.70, 0.50, 0.90]


def test_minmax_normalize():
    assert minmax_normalize([1.0, 3.0, 2.0]).tolist() == [0.0, 1.0, 0.5]
    assert minmax_normalize([4.0, 4.0]).tolist() == [0.0, 0.0]


def test_att_acc_on_separable_scores():
    assert att_acc(SHARP_SCORES, TRUTH) == 1.0
    # 0.80 and 0.50 normalize above 0.5, so two negatives cross the line
    assert att_acc(BLURRY_SCORES, TRUTH) == pytest.approx(4 / 6)


def test_att_acc_constant_scores_predict_all_zero():
    assert att_acc([0.3] * 4, [0, 0, 0, 0]) == 1.0
    assert att_acc([0.3] * 4, [1, 1, 1, 1]) == 0.0


def test_att_acc_length_mismatch():
    with pytest.raises(LengthMismatchError):
        att_acc([0.1, 0.2], [1])


def test_att_f1_cases():
    assert att_f1(SHARP_SCORES, TRUTH) == 1.0
    # nothing predicted positive while positives exist
    assert att_f1([0.0, 0.1, 0.2], [1, 1, 0], threshold=1.1 - 1e-9) == 0.0


def test_att_f1_partial():
    # predictions [0,1,0,1,1,1]: 0.80 and 0.50 are false positives,
    # both true positives recovered, so P=1/2 and R=1
    assert att_f1(BLURRY_SCORES, TRUTH) == pytest.approx(2 * 0.5 * 1.0 / (0.5 + 1.0))


def test_att_auroc_separable_and_blurry():
    assert att_auroc(SHARP_SCORES, TRUTH) == 1.0
    # strict pairwise count: 7 of 8 positive/negative pairs ranked correctly
    assert att_auroc(BLURRY_SCORES, TRUTH) == pytest.approx(0.875)


def test_att_auroc_tie_policies():
    scores = [0.5, 0.5, 0.2]
    labels = [1, 0, 0]
    assert att_auroc(scores, labels, tie_policy="strict") == pytest.approx(0.5)
    assert att_auroc(scores, labels, tie_policy="half") == pytest.approx(0.75)
    with pytest.raises(ValueError):
        att_auroc(scores, labels, tie_policy="mean")


def test_att_auroc_degenerate_truth():
    with pytest.raises(DegenerateTruthError):
        att_auroc([0.1, 0.2], [1, 1])
    with pytest.raises(DegenerateTruthError):
        att_auroc([0.1, 0.2], [0, 0])


@settings(max_examples=40, deadline=None)
@given(
    # integer-valued scores keep gaps large enough to survive the affine map
    st.lists(st.integers(-100, 100).map(float), min_size=2, max_size=12),
    st.floats(0.1, 5.0),
)
def test_att_auroc_invariant_under_positive_rescale(scores, factor):
    labels = [i % 2 for i in range(len(scores))]
    rescaled = [factor * s + 3.0 for s in scores]
    assert att_auroc(scores, labels) == pytest.approx(att_auroc(rescaled, labels))


def test_jaccard_identical_and_disjoint():
    assert jaccard_topk([0.9, 0.1, 0.8], [0.7, 0.0, 0.9], k=2) == 1.0
    assert jaccard_topk([1.0, 0.0], [0.0, 1.0], k=1) == 0.0


def test_jaccard_uses_absolute_values():
    assert jaccard_topk([-0.9, 0.1], [0.9, 0.1], k=1) == 1.0


def test_jaccard_tie_breaks_earlier_position():
    # both runs tie 0.5 at positions 0 and 1; both pick position 0
    assert jaccard_topk([0.5, 0.5, 0.1], [0.5, 0.5, 0.2], k=1) == 1.0


def test_jaccard_token_identity_survives_appended_token():
    a = [0.9, 0.1, 0.8]
    b = [0.9, 0.1, 0.8, 0.0]
    tokens_a = ["make", "this", "rainy"]
    tokens_b = ["make", "this", "rainy", "***"]
    assert jaccard_topk(a, b, k=2, tokens_a=tokens_a, tokens_b=tokens_b) == 1.0


def test_jaccard_k_too_large():
    with pytest.raises(KTooLargeError):
        jaccard_topk([0.1, 0.2], [0.3], k=2)
    with pytest.raises(ValueError):
        jaccard_topk([0.1], [0.2], k=0)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=8),
    st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=8),
    st.integers(1, 3),
)
def test_jaccard_symmetric(a, b, k):
    assert jaccard_topk(a, b, k) == jaccard_topk(b, a, k)


def test_consistency_two_runs():
    variance, std = consistency_stats([[0.0], [2.0]])
    assert variance == 1.0
    assert std == 1.0


def test_consistency_identical_runs_are_zero():
    runs = [[0.3, -0.2, 1.0]] * 5
    assert consistency_stats(runs) == (0.0, 0.0)


def test_consistency_mean_over_tokens():
    variance, std = consistency_stats([[1.0, 0.0], [1.0, 2.0]])
    assert variance == pytest.approx(0.5)
    assert std == pytest.approx(0.5)


def test_consistency_errors():
    with pytest.raises(TooFewRunsError):
        consistency_stats([[1.0]])
    with pytest.raises(LengthMismatchError):
        consistency_stats([[1.0], [1.0, 2.0]])


def test_fidelity_hand_case():
    report = fidelity_report([0.0, 1.0], [0.0, 0.0], [1.0, 1.0], n_features=1,
                             allow_degenerate=True)
    assert report.wmse == pytest.approx(0.5)
    assert report.wmae == pytest.approx(0.5)
    assert report.l1 == pytest.approx(0.5)
    assert report.l2 == pytest.approx(0.5)
    assert report.r2 == pytest.approx(-1.0)
    assert report.r2_w == pytest.approx(-1.0)
    assert report.r2_w_adj is None  # J - n_features - 1 == 0


def test_fidelity_perfect_fit():
    y = [0.0, 1.0, 2.0, 3.5]
    report = fidelity_report(y, y, [1.0, 0.5, 2.0, 1.0], n_features=2)
    assert report.r2 == 1.0
    assert report.r2_w == 1.0
    assert report.r2_w_adj == 1.0
    assert report.wmse == 0.0


def test_fidelity_uniform_weights_equalize_r2():
    rng = np.random.default_rng(17)
    y = rng.normal(size=12)
    y_hat = y + rng.normal(scale=0.3, size=12)
    report = fidelity_report(y, y_hat, np.full(12, 3.0), n_features=2)
    assert report.r2_w == pytest.approx(report.r2, abs=1e-12)


def test_fidelity_adjusted_penalizes():
    rng = np.random.default_rng(23)
    y = rng.normal(size=20)
    y_hat = y + rng.normal(scale=0.5, size=20)
    w = rng.uniform(0.1, 1.0, size=20)
    report = fidelity_report(y, y_hat, w, n_features=4)
    assert report.r2_w_adj <= report.r2_w


def test_fidelity_weighted_mean_matters():
    y = [0.0, 1.0, 4.0]
    y_hat = [0.1, 1.2, 3.5]
    uniform = fidelity_report(y, y_hat, [1.0, 1.0, 1.0], n_features=1)
    skewed = fidelity_report(y, y_hat, [5.0, 1.0, 0.1], n_features=1)
    assert uniform.r2_w != pytest.approx(skewed.r2_w)
    assert uniform.r2 == pytest.approx(skewed.r2)  # unweighted part unaffected


def test_fidelity_degenerate_and_adjusted_errors():
    with pytest.raises(DegenerateVarianceError):
        fidelity_report([2.0, 2.0], [2.0, 2.0], [1.0, 1.0], n_features=1)
    with pytest.raises(AdjustedUndefinedError):
        fidelity_report([0.0, 1.0], [0.0, 1.0], [1.0, 1.0], n_features=1)
    report = fidelity_report([2.0, 2.0], [2.0, 0.0], [1.0, 1.0], n_features=1,
                             allow_degenerate=True)
    assert report.r2 is None and report.r2_w is None and report.r2_w_adj is None
    assert report.wmse == pytest.approx(2.0)
    with pytest.raises(LengthMismatchError):
        fidelity_report([1.0], [1.0, 2.0], [1.0], n_features=1)
