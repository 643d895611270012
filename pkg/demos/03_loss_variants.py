"""Evaluate the composite loss and its ablation variants on one synthetic
pair, verify the analytic gradients by central differences, and report the
translation-sensitivity diagnostic."""

import numpy as np
from scipy import ndimage

from cwmi import LossConfig, SyntheticSpec, compute_loss, finite_difference_check, generate
from cwmi.loss import VARIANTS, translation_sensitivity

_, label = generate(SyntheticSpec("cells", 64, seed=1))
label = label.astype(float)
rng = np.random.default_rng(2)
pred = 0.5 + 0.4 * np.tanh(3.0 * ndimage.gaussian_filter(rng.standard_normal(label.shape), 2.0))

print("variant          total      ce_term    per-level terms")
for variant in VARIANTS:
    config = LossConfig(variant=variant)
    out = compute_loss(label, pred, config)
    levels = " ".join(f"{t:+8.3f}" for t in out.per_level_mi)
    print(f"{variant:14s} {out.total:+9.3f}  {out.ce_term:9.4f}   {levels}")

print("\nfinite-difference gradient checks (N=2, K=2, 25 probes):")
for variant in VARIANTS:
    config = LossConfig(levels=2, orientations=2, variant=variant)
    rep = finite_difference_check(label, pred, config, probe_count=25, seed=0)
    print(f"{variant:14s} max rel {rep.max_rel_error:.2e}  mean rel {rep.mean_rel_error:.2e}")

print("\ntranslation sensitivity of a thin line (2-px rise / 8-px rise):")
ratios = translation_sensitivity(size=64)
print(f"  complex MI term: {ratios['cwmi']:.4f}")
print(f"  wavelet L2 term: {ratios['wavelet_l2']:.4f}")
print(f"  phase-robustness ordering holds: {ratios['ordering_holds']}")
