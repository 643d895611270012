"""Gaussian lower-bound mutual information between subband stacks.

The K orientations at one pyramid level are treated as a K-dimensional random
variable sampled at every pixel.  The MI estimate is -1/2 log det of the
Schur complement of the joint covariance (the conditional covariance of the
label features given the prediction features); complex subbands use the
Hermitian forms.  The gradient with respect to the prediction coefficients is
derived in closed form through the covariance estimators and the log-det.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf, zpotrf

from .errors import (
    DegenerateStatisticsError,
    NotPositiveDefiniteError,
    ShapeMismatchError,
)

__all__ = [
    "SubbandStatistics",
    "MIResult",
    "accumulate_stats",
    "logdet_hpd",
    "mi_lower_bound",
    "mi_gradient",
]


@dataclass
class SubbandStatistics:
    """First and second moments of paired K-dimensional subband features."""

    mean_label: np.ndarray     # (K,)
    mean_pred: np.ndarray      # (K,)
    sigma_label: np.ndarray    # (K, K), Hermitian PSD
    sigma_pred: np.ndarray     # (K, K), Hermitian PSD
    cross: np.ndarray          # (K, K), Cov(label, pred)
    sample_count: int

    @property
    def degenerate(self) -> bool:
        return self.sample_count < self.mean_label.shape[0]


@dataclass
class MIResult:
    value: float               # MI lower-bound estimate
    schur: np.ndarray          # (K, K) conditional covariance M_n


def _as_features(band):
    """(K, H, W) or (K, M) array -> (K, M) feature matrix."""
    arr = np.asarray(band)
    if arr.ndim == 3:
        arr = arr.reshape(arr.shape[0], -1)
    elif arr.ndim != 2:
        raise ShapeMismatchError(f"expected (K, H, W) or (K, M), got {arr.shape}")
    return arr


def accumulate_stats(label_band, pred_band) -> SubbandStatistics:
    """Means, covariances and cross-covariance of paired subband stacks.

    Population normalization (1/M); complex inputs conjugate the second
    argument of every covariance product.
    """
    y = _as_features(label_band)
    p = _as_features(pred_band)
    if y.shape != p.shape:
        raise ShapeMismatchError(
            f"label/pred band shapes differ: {y.shape} vs {p.shape}"
        )
    k, m = y.shape
    mean_y = y.mean(axis=1)
    mean_p = p.mean(axis=1)
    yc = y - mean_y[:, None]
    pc = p - mean_p[:, None]
    sigma_y = yc @ yc.conj().T / m
    sigma_p = pc @ pc.conj().T / m
    cross = yc @ pc.conj().T / m
    return SubbandStatistics(
        mean_label=mean_y,
        mean_pred=mean_p,
        sigma_label=sigma_y,
        sigma_pred=sigma_p,
        cross=cross,
        sample_count=m,
    )


def _chol_lower(matrix):
    """LAPACK Cholesky of a real SPD matrix; returns (L, failing_minor)."""
    c, info = dpotrf(matrix, lower=1, overwrite_a=0, clean=1)
    return c, info


def _real_representation(matrix):
    a = matrix.real
    b = matrix.imag
    return np.block([[a, -b], [b, a]])


def logdet_hpd(matrix: np.ndarray, epsilon: float = 0.0) -> float:
    """log det(matrix + epsilon*I) of a Hermitian positive definite matrix.

    Complex matrices go through the 2Kx2K real representation
    [[A, -B], [B, A]], whose determinant is the squared modulus of the
    complex determinant, and the result is halved.
    """
    matrix = np.asarray(matrix)
    k = matrix.shape[0]
    if matrix.shape != (k, k):
        raise ShapeMismatchError(f"expected a square matrix, got {matrix.shape}")
    herm_dev = np.max(np.abs(matrix - matrix.conj().T)) if k else 0.0
    scale = max(1.0, float(np.max(np.abs(matrix)))) if k else 1.0
    if herm_dev > 1e-8 * scale:
        raise ShapeMismatchError(
            f"matrix is not Hermitian (deviation {herm_dev:.3e})"
        )
    regularized = matrix + epsilon * np.eye(k)
    if np.iscomplexobj(matrix):
        rep = _real_representation(regularized)
        factor, info = _chol_lower(rep)
        if info > 0:
            raise NotPositiveDefiniteError(info)
        return float(np.sum(np.log(np.diag(factor))))  # 2*sum(log diag)/2
    factor, info = _chol_lower(regularized.astype(np.float64, copy=False))
    if info > 0:
        raise NotPositiveDefiniteError(info)
    return float(2.0 * np.sum(np.log(np.diag(factor))))


def _pred_cholesky(sigma_pred, sigma_epsilon):
    """Lower Cholesky factor of (sigma_pred + jitter*I), deterministic.

    The default jitter is sigma_epsilon (0.0 keeps the perfect-prediction
    Schur complement exactly zero); if the factorization fails (singular
    statistics, e.g. a constant prediction) the jitter escalates by decades
    until it succeeds.
    """
    k = sigma_pred.shape[0]
    potrf = zpotrf if np.iscomplexobj(sigma_pred) else dpotrf
    jitter = float(sigma_epsilon)
    for _ in range(40):
        factor, info = potrf(sigma_pred + jitter * np.eye(k), lower=1, clean=1)
        if info == 0:
            return factor, jitter
        jitter = 1e-14 if jitter == 0.0 else jitter * 10.0
    raise NotPositiveDefiniteError(k, "prediction covariance is not factorizable")


def _schur_complement(stats, sigma_epsilon):
    """Schur complement in Gram form: Sigma_Y - W^H W with W = L^-1 C^H.

    Going through the Cholesky factor keeps the subtraction positive
    semidefinite up to roundoff even when the prediction covariance is badly
    conditioned (an explicit inverse squares the condition number)."""
    cross = stats.cross
    factor, jitter = _pred_cholesky(stats.sigma_pred, sigma_epsilon)
    whitened = solve_triangular(factor, cross.conj().T, lower=True)
    schur = stats.sigma_label - whitened.conj().T @ whitened
    schur = (schur + schur.conj().T) / 2.0
    return schur, factor, whitened, jitter


def mi_lower_bound(
    stats: SubbandStatistics,
    epsilon: float,
    mode: str = "real",
    sigma_epsilon: float = 0.0,
) -> MIResult:
    """MI estimate -1/2 log det(M + epsilon*I) with M the Schur complement.

    `mode` declares the expected field; the Hermitian-transpose form is used
    whenever the statistics are complex.
    """
    if stats.degenerate:
        raise DegenerateStatisticsError(
            f"{stats.sample_count} samples for {stats.mean_label.shape[0]} features"
        )
    complex_stats = np.iscomplexobj(stats.sigma_pred)
    if mode == "complex" and not complex_stats:
        raise ShapeMismatchError("mode complex requires complex statistics")
    if mode == "real" and complex_stats:
        raise ShapeMismatchError("mode real requires real statistics")
    schur, _, _, _ = _schur_complement(stats, sigma_epsilon)
    value = -0.5 * logdet_hpd(schur, epsilon)
    return MIResult(value=value, schur=schur)


def mi_gradient(
    label_band,
    pred_band,
    epsilon: float,
    mode: str = "real",
    sigma_epsilon: float = 0.0,
):
    """Gradient of the loss term -I_l with respect to the prediction band.

    Returns an array shaped like `pred_band`; in complex mode entry (k, x)
    holds d(-I_l)/dRe + i * d(-I_l)/dIm of that coefficient.
    """
    y = _as_features(label_band)
    p = _as_features(pred_band)
    if y.shape != p.shape:
        raise ShapeMismatchError(
            f"label/pred band shapes differ: {y.shape} vs {p.shape}"
        )
    stats = accumulate_stats(y, p)
    if stats.degenerate:
        raise DegenerateStatisticsError(
            f"{stats.sample_count} samples for {y.shape[0]} features"
        )
    k, m = y.shape
    schur, factor, whitened, _ = _schur_complement(stats, sigma_epsilon)
    resolvent = np.linalg.inv(schur + epsilon * np.eye(k))
    resolvent = (resolvent + resolvent.conj().T) / 2.0

    yc = y - stats.mean_label[:, None]
    pc = p - stats.mean_pred[:, None]
    # d(-I_l) = d[ 1/2 log det(M + eps I) ]; the cotangent of the centered
    # prediction features is T R (T^H Pc - Yc) / M with T = Sigma_P^-1 C^H
    # and R the resolvent (T via two triangular solves off the Cholesky
    # factor, matching the forward pass exactly).
    regression = solve_triangular(factor.conj().T, whitened, lower=False)
    grad_centered = regression @ resolvent @ (regression.conj().T @ pc - yc) / m
    # chain through the mean subtraction: project out the per-row mean
    grad = grad_centered - grad_centered.mean(axis=1, keepdims=True)
    return grad.reshape(np.asarray(pred_band).shape)
