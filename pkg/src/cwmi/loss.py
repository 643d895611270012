"""Composite wavelet-MI segmentation loss and its ablation variants.

The full objective mixes, with weight 1-lambda, the per-level negated MI
lower bounds between label and prediction subband stacks and, with weight
lambda, pixel-wise binary cross-entropy.  Ablations swap the per-level MI
term for L1/L2 distances or one-minus-SSIM on subband magnitudes.  Gradients
with respect to the prediction probability map are assembled analytically by
pushing per-subband cotangents through the pyramid adjoint.
"""

from dataclasses import dataclass, field

import numpy as np

from . import mutual_info, pyramid
from .errors import NonFiniteInputError, ShapeMismatchError

__all__ = [
    "LossConfig",
    "LossOutput",
    "FiniteDifferenceReport",
    "cross_entropy",
    "cwmi",
    "wavelet_variant",
    "compute_loss",
    "finite_difference_check",
    "translation_sensitivity",
]

VARIANTS = ("cwmi", "cwmi_real", "wavelet_l1", "wavelet_l2", "wavelet_ssim", "ce_only")
_WAVELET_VARIANTS = ("wavelet_l1", "wavelet_l2", "wavelet_ssim")


@dataclass(frozen=True)
class LossConfig:
    """Hyperparameters of the composite loss."""

    levels: int = 4
    orientations: int = 4
    lam: float = 0.1
    epsilon: float = 1e-5
    variant: str = "cwmi"
    probability_clip: float = 1e-7
    sigma_epsilon: float = 0.0   # jitter for the prediction covariance inverse

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.probability_clip < 0.5:
            raise ValueError(
                f"probability_clip must lie in (0, 0.5), got {self.probability_clip}"
            )
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def mode(self) -> str:
        return "real" if self.variant == "cwmi_real" else "complex"

    def pyramid_config(self) -> pyramid.PyramidConfig:
        return pyramid.PyramidConfig(self.levels, self.orientations, self.mode)


@dataclass
class LossOutput:
    total: float
    ce_term: float
    per_level_mi: list = field(default_factory=list)
    gradient: np.ndarray | None = None


def _validate_pair(label, pred):
    label = np.asarray(label, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if label.shape != pred.shape:
        raise ShapeMismatchError(
            f"label shape {label.shape} != prediction shape {pred.shape}"
        )
    if not (np.all(np.isfinite(label)) and np.all(np.isfinite(pred))):
        raise NonFiniteInputError("label or prediction contains non-finite values")
    if pred.min() < 0.0 or pred.max() > 1.0:
        raise ValueError("prediction values must lie in [0, 1]")
    return label, pred


def cross_entropy(label, pred, clip: float = 1e-7):
    """Mean binary cross-entropy with clipped probabilities.

    Returns (value, gradient); the gradient is zero wherever the clip is
    active.
    """
    label, pred = _validate_pair(label, pred)
    clipped = np.clip(pred, clip, 1.0 - clip)
    value = float(
        np.mean(-label * np.log(clipped) - (1.0 - label) * np.log(1.0 - clipped))
    )
    active = (pred > clip) & (pred < 1.0 - clip)
    grad = np.where(
        active,
        (-label / clipped + (1.0 - label) / (1.0 - clipped)) / label.size,
        0.0,
    )
    return value, grad


def _mi_level_terms(label_decomp, pred_decomp, config, want_gradient):
    """Per-level -I_l terms and subband cotangents for the MI variants."""
    terms = []
    cotangents = []
    for label_band, pred_band in zip(label_decomp.bands, pred_decomp.bands):
        stats = mutual_info.accumulate_stats(label_band, pred_band)
        result = mutual_info.mi_lower_bound(
            stats, config.epsilon, mode=config.mode, sigma_epsilon=config.sigma_epsilon
        )
        terms.append(-result.value)
        if want_gradient:
            cotangents.append(
                mutual_info.mi_gradient(
                    label_band,
                    pred_band,
                    config.epsilon,
                    mode=config.mode,
                    sigma_epsilon=config.sigma_epsilon,
                )
            )
    return terms, cotangents


def _global_ssim_term(mag_label, mag_pred):
    """One-minus-SSIM over a whole subband plus d(term)/d(mag_pred).

    Stabilizers use the label subband's magnitude range so they are constant
    with respect to the prediction.
    """
    m = mag_label.size
    rng = max(float(mag_label.max()), 1e-12)
    c1 = (0.01 * rng) ** 2
    c2 = (0.03 * rng) ** 2
    mu_y = mag_label.mean()
    mu_p = mag_pred.mean()
    dev_y = mag_label - mu_y
    dev_p = mag_pred - mu_p
    var_y = float(np.mean(dev_y**2))
    var_p = float(np.mean(dev_p**2))
    cov = float(np.mean(dev_y * dev_p))
    lum = 2.0 * mu_y * mu_p + c1
    struct = 2.0 * cov + c2
    lum_den = mu_y**2 + mu_p**2 + c1
    struct_den = var_y + var_p + c2
    ssim = (lum * struct) / (lum_den * struct_den)
    # d(ssim)/d(mag_pred[i]) through mu_p, cov and var_p
    dssim = (
        (2.0 * mu_y / m * struct + lum * 2.0 * dev_y / m) / (lum_den * struct_den)
        - ssim * (2.0 * mu_p / m / lum_den + 2.0 * dev_p / m / struct_den)
    )
    return 1.0 - ssim, -dssim


def _wavelet_level_terms(label_decomp, pred_decomp, config, want_gradient):
    """Per-level L1/L2/SSIM terms (mean over orientations) and cotangents."""
    variant = config.variant
    k = config.orientations
    terms = []
    cotangents = []
    for label_band, pred_band in zip(label_decomp.bands, pred_decomp.bands):
        level_term = 0.0
        cot = np.zeros_like(pred_band) if want_gradient else None
        for i in range(k):
            diff = pred_band[i] - label_band[i]
            m = diff.size
            if variant == "wavelet_l1":
                mag = np.abs(diff)
                level_term += float(mag.mean())
                if want_gradient:
                    safe = np.where(mag > 0.0, mag, 1.0)
                    cot[i] = np.where(mag > 0.0, diff / safe, 0.0) / m
            elif variant == "wavelet_l2":
                level_term += float(np.mean(np.abs(diff) ** 2))
                if want_gradient:
                    cot[i] = 2.0 * diff / m
            else:  # wavelet_ssim
                mag_label = np.abs(label_band[i])
                mag_pred = np.abs(pred_band[i])
                term, dterm = _global_ssim_term(mag_label, mag_pred)
                level_term += term
                if want_gradient:
                    safe = np.where(mag_pred > 0.0, mag_pred, 1.0)
                    phase = np.where(mag_pred > 0.0, pred_band[i] / safe, 0.0)
                    cot[i] = dterm * phase
        terms.append(level_term / k)
        if want_gradient:
            cotangents.append(cot / k)
    return terms, cotangents


def _assemble(label, pred, config, want_gradient, level_fn):
    pconfig = config.pyramid_config()
    label_decomp = pyramid.decompose(label, pconfig)
    pred_decomp = pyramid.decompose(pred, pconfig)
    terms, cotangents = level_fn(label_decomp, pred_decomp, config, want_gradient)
    ce_value, ce_grad = cross_entropy(label, pred, config.probability_clip)
    total = (1.0 - config.lam) * float(np.sum(terms)) + config.lam * ce_value
    gradient = None
    if want_gradient:
        cot = pyramid.zeros_like_decomposition(label.shape, pconfig)
        cot.bands = cotangents
        gradient = (1.0 - config.lam) * pyramid.apply_adjoint(cot, pconfig)
        gradient += config.lam * ce_grad
    return LossOutput(
        total=total, ce_term=ce_value, per_level_mi=list(map(float, terms)),
        gradient=gradient,
    )


def cwmi(label, pred, config: LossConfig, want_gradient: bool = False) -> LossOutput:
    """Composite MI + cross-entropy loss (variants cwmi / cwmi_real)."""
    if config.variant not in ("cwmi", "cwmi_real"):
        raise ValueError(f"cwmi() handles cwmi/cwmi_real, got {config.variant!r}")
    label, pred = _validate_pair(label, pred)
    return _assemble(label, pred, config, want_gradient, _mi_level_terms)


def wavelet_variant(
    label, pred, config: LossConfig, want_gradient: bool = False
) -> LossOutput:
    """Ablation losses replacing MI with L1/L2/SSIM in the wavelet domain."""
    if config.variant not in _WAVELET_VARIANTS:
        raise ValueError(
            f"wavelet_variant() handles {_WAVELET_VARIANTS}, got {config.variant!r}"
        )
    label, pred = _validate_pair(label, pred)
    return _assemble(label, pred, config, want_gradient, _wavelet_level_terms)


def compute_loss(
    label, pred, config: LossConfig, want_gradient: bool = False
) -> LossOutput:
    """Dispatch on config.variant; ce_only bypasses the pyramid entirely."""
    if config.variant == "ce_only":
        label, pred = _validate_pair(label, pred)
        ce_value, ce_grad = cross_entropy(label, pred, config.probability_clip)
        return LossOutput(
            total=ce_value,
            ce_term=ce_value,
            per_level_mi=[0.0] * config.levels,
            gradient=ce_grad if want_gradient else None,
        )
    if config.variant in ("cwmi", "cwmi_real"):
        return cwmi(label, pred, config, want_gradient)
    return wavelet_variant(label, pred, config, want_gradient)


@dataclass
class FiniteDifferenceReport:
    max_rel_error: float
    mean_rel_error: float
    checked: int
    skipped: int
    step: float
    scale: float     # largest probed gradient magnitude (error denominator)


def finite_difference_check(
    label,
    pred,
    config: LossConfig,
    step: float = 1e-4,
    probe_count: int = 50,
    seed: int = 0,
) -> FiniteDifferenceReport:
    """Compare the analytic gradient against central differences.

    Probes are pixels sampled away from the probability-clip boundaries
    (clipped probes are counted as skipped, since the true derivative is zero
    there by construction).  Errors are measured relative to the largest
    gradient magnitude among the probed pixels, so the report reflects the
    accuracy of the gradient as a vector rather than amplifying float noise
    on negligible entries.
    """
    if not 1e-8 <= step <= 1e-4:
        raise ValueError(f"step must lie in [1e-8, 1e-4], got {step}")
    label, pred = _validate_pair(label, pred)
    out = compute_loss(label, pred, config, want_gradient=True)
    grad = out.gradient
    rng = np.random.default_rng(seed)
    flat_order = rng.permutation(pred.size)
    margin = config.probability_clip + 2.0 * step

    probes = []   # (index, analytic, fd)
    skipped = 0
    for idx in flat_order:
        if len(probes) >= probe_count:
            break
        i, j = divmod(int(idx), pred.shape[1])
        p = pred[i, j]
        if not (margin < p < 1.0 - margin):
            skipped += 1
            continue
        bumped = pred.copy()
        bumped[i, j] = p + step
        plus = compute_loss(label, bumped, config).total
        bumped[i, j] = p - step
        minus = compute_loss(label, bumped, config).total
        fd = (plus - minus) / (2.0 * step)
        probes.append((idx, grad[i, j], fd))

    if not probes:
        return FiniteDifferenceReport(0.0, 0.0, 0, skipped, step, 0.0)
    analytic = np.array([p[1] for p in probes])
    numeric = np.array([p[2] for p in probes])
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), 1e-300)
    rel = np.abs(analytic - numeric) / scale
    return FiniteDifferenceReport(
        max_rel_error=float(rel.max()),
        mean_rel_error=float(rel.mean()),
        checked=len(probes),
        skipped=skipped,
        step=step,
        scale=scale,
    )


def translation_sensitivity(size: int = 64, config: LossConfig | None = None) -> dict:
    """Diagnostic for the phase-robustness claim; reported, never asserted.

    Measures how much a 2-pixel translation of a thin-line prediction raises
    the wavelet term of the complex-MI loss versus the wavelet-L2 variant,
    each normalized by its rise at an 8-pixel translation.
    """
    if config is None:
        config = LossConfig()
    label = np.zeros((size, size))
    label[size // 2 - 1 : size // 2 + 1, :] = 1.0

    def wavelet_term(variant, shift):
        cfg = LossConfig(
            levels=config.levels,
            orientations=config.orientations,
            lam=0.0,
            epsilon=config.epsilon,
            variant=variant,
        )
        moved = np.roll(label, shift, axis=0)
        return compute_loss(label, moved, cfg).total

    ratios = {}
    for variant in ("cwmi", "wavelet_l2"):
        base = wavelet_term(variant, 0)
        near = wavelet_term(variant, 2)
        far = wavelet_term(variant, 8)
        denom = far - base
        ratios[variant] = (near - base) / denom if denom != 0.0 else float("nan")
    ratios["ordering_holds"] = bool(ratios["cwmi"] <= ratios["wavelet_l2"])
    return ratios
