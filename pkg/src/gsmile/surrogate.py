"""Locally weighted linear surrogates over mask feature vectors.

Both fitters minimize the weighted squared error

    sum_j w_j * (theta0 + theta . z_j - y_j)**2

with an unpenalized intercept, implemented by centering features and targets
at their weighted means.  ``fit_weighted_linear`` adds an optional ridge term
``ridge_lambda * ||theta||**2`` and resolves rank-deficient systems with the
minimum-norm coefficient vector.  ``fit_bayesian_ridge`` places a zero-mean
isotropic Gaussian prior on the coefficients and estimates the prior and
noise precisions by evidence maximization, returning the posterior mean and
the posterior marginal variances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllZeroWeightsError, ShapeMismatchError

# precision bounds keep the evidence fixed point finite on exact-fit data
_PRECISION_FLOOR = 1e-12
_PRECISION_CAP = 1e12


@dataclass(frozen=True)
class SurrogateModel:
    """Fitted linear surrogate ``y ~ intercept + coefficients . z``."""

    intercept: float
    coefficients: np.ndarray
    kind: str
    posterior_variances: np.ndarray | None = None


def _validate(Z: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    if Z.shape[0] != y.shape[0] or Z.shape[0] != w.shape[0]:
        raise ShapeMismatchError(
            f"got {Z.shape[0]} rows, {y.shape[0]} targets, {w.shape[0]} weights"
        )
    if not np.any(w > 0):
        raise AllZeroWeightsError("all sample weights are zero")
    return Z, y, w


def _center(Z: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Weighted centering; returns sqrt-weight-scaled design and targets."""
    sw = w.sum()
    z_mean = (w @ Z) / sw
    y_mean = float(w @ y) / sw
    root_w = np.sqrt(w)
    A = root_w[:, None] * (Z - z_mean)
    b = root_w * (y - y_mean)
    return A, b, z_mean, y_mean


def fit_weighted_linear(
    Z: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    ridge_lambda: float = 0.0,
) -> SurrogateModel:
    """Weighted least squares with an unpenalized intercept.

    Solves the weighted normal equations; with ``ridge_lambda > 0`` the
    coefficient block is regularized and the system is always nonsingular.
    With ``ridge_lambda == 0`` a rank-deficient design takes the minimum-norm
    coefficient vector, so a constant target yields a zero coefficient vector
    and the intercept carries the weighted mean.  Scaling all weights by a
    positive constant leaves the solution unchanged (the ridge term is scaled
    to match).  Raises ShapeMismatchError or AllZeroWeightsError.
    """
    if ridge_lambda < 0:
        raise ValueError(f"ridge_lambda must be >= 0, got {ridge_lambda}")
    Z, y, w = _validate(Z, y, w)
    A, b, z_mean, y_mean = _center(Z, y, w)
    m = Z.shape[1]
    if ridge_lambda > 0:
        gram = A.T @ A + ridge_lambda * np.eye(m)
        theta = np.linalg.solve(gram, A.T @ b)
    else:
        theta, *_ = np.linalg.lstsq(A, b, rcond=None)
    intercept = y_mean - float(z_mean @ theta)
    return SurrogateModel(intercept=intercept, coefficients=theta, kind="weighted_linear")


def fit_bayesian_ridge(
    Z: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    max_iter: int = 300,
    tol: float = 1e-6,
    alpha: float | None = None,
    beta: float | None = None,
) -> SurrogateModel:
    """Bayesian linear surrogate on sqrt-weight-scaled rows.

    Prior: coefficients ~ N(0, I / alpha); noise precision beta; the
    intercept gets a flat prior (absorbed by weighted centering).  Passing
    ``alpha`` or ``beta`` pins that precision; otherwise both follow the
    evidence-maximization fixed point

        gamma = sum_k beta s_k^2 / (alpha + beta s_k^2)
        alpha <- gamma / ||mu||^2,   beta <- (J - gamma) / ||b - A mu||^2

    for at most ``max_iter`` rounds, stopping when both precisions move less
    than ``tol`` relatively.  As alpha -> 0 the posterior mean approaches the
    plain weighted least-squares solution.  Returns the posterior mean and
    the posterior marginal variances of the coefficients.
    """
    Z, y, w = _validate(Z, y, w)
    A, b, z_mean, y_mean = _center(Z, y, w)
    rows, m = Z.shape

    # SVD once; every fixed-point round is O(m) in the singular basis
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    s2 = s**2
    ub = U.T @ b

    alpha_pinned, beta_pinned = alpha is not None, beta is not None
    cur_alpha = float(alpha) if alpha_pinned else 1.0
    if beta_pinned:
        cur_beta = float(beta)
    else:
        b_var = float(np.var(b))
        cur_beta = 1.0 / b_var if b_var > 0 else 1.0

    mu_v = np.zeros_like(s)
    for _ in range(max_iter):
        denom = cur_alpha + cur_beta * s2
        mu_v = cur_beta * s * ub / denom
        gamma = float(np.sum(cur_beta * s2 / denom))
        mu2 = float(mu_v @ mu_v)
        residual = b - U @ (s * mu_v)
        sse = float(residual @ residual)

        new_alpha, new_beta = cur_alpha, cur_beta
        if not alpha_pinned and gamma > 0:
            new_alpha = gamma / max(mu2, _PRECISION_FLOOR)
            new_alpha = min(max(new_alpha, _PRECISION_FLOOR), _PRECISION_CAP)
        if not beta_pinned:
            new_beta = max(rows - gamma, _PRECISION_FLOOR) / max(sse, _PRECISION_FLOOR)
            new_beta = min(max(new_beta, _PRECISION_FLOOR), _PRECISION_CAP)

        moved = max(
            abs(new_alpha - cur_alpha) / cur_alpha,
            abs(new_beta - cur_beta) / cur_beta,
        )
        cur_alpha, cur_beta = new_alpha, new_beta
        if moved < tol:
            break

    denom = cur_alpha + cur_beta * s2
    mu_v = cur_beta * s * ub / denom
    theta = Vt.T @ mu_v
    # diag of (alpha I + beta A^T A)^-1: spanned directions plus 1/alpha
    # for the null space outside Vt
    spanned = (Vt.T**2) @ (1.0 / denom - 1.0 / cur_alpha)
    variances = spanned + 1.0 / cur_alpha
    intercept = y_mean - float(z_mean @ theta)
    return SurrogateModel(
        intercept=intercept,
        coefficients=theta,
        kind="bayesian_ridge",
        posterior_variances=variances,
    )


def predict(model: SurrogateModel, Z: np.ndarray) -> np.ndarray:
    """Evaluate ``intercept + Z @ coefficients`` row-wise."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != len(model.coefficients):
        raise ShapeMismatchError(
            f"{Z.shape[1]} features but model has {len(model.coefficients)} coefficients"
        )
    return model.intercept + Z @ model.coefficients


def surrogate_loss(model: SurrogateModel, Z: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    """Mean weighted squared error ``(1/J) sum_j w_j (h(z_j) - y_j)**2``.

    The 1/J keeps values comparable across perturbation counts.
    """
    Z, y, w = _validate(Z, y, w)
    errors = predict(model, Z) - y
    return float(np.mean(w * errors**2))
