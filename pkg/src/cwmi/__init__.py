"""Complex wavelet mutual information loss toolkit.

Steerable-pyramid decomposition (real and complex), a Gaussian lower-bound
mutual information estimator over subbands with analytic gradients, the
composite segmentation loss and its ablation variants, evaluation metrics,
and a synthetic optimization harness.
"""

import os as _os

# The workloads here are many small-matrix ops; BLAS thread pools cost far
# more than they save (20x slowdowns observed on throttled containers).
# Respect explicit user settings, otherwise stay single-threaded.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")

from .errors import (
    CwmiError,
    DegenerateStatisticsError,
    DimensionError,
    EmptyForegroundError,
    FileFormatError,
    NonFiniteInputError,
    NotPositiveDefiniteError,
    ShapeMismatchError,
)
from .loss import (
    LossConfig,
    LossOutput,
    compute_loss,
    cross_entropy,
    cwmi,
    finite_difference_check,
    translation_sensitivity,
    wavelet_variant,
)
from .metrics import (
    MetricsReport,
    adjusted_rand_index,
    connected_components,
    evaluate,
    hausdorff_distance,
    iou_dice,
    variation_of_information,
)
from .mutual_info import (
    MIResult,
    SubbandStatistics,
    accumulate_stats,
    logdet_hpd,
    mi_gradient,
    mi_lower_bound,
)
from .pyramid import (
    Decomposition,
    FilterBank,
    PyramidConfig,
    apply_adjoint,
    build_filters,
    decompose,
    reconstruct,
)
from .synthetic import (
    AdamConfig,
    OptimState,
    SyntheticSpec,
    TrainHistory,
    ablation_table,
    adam_step,
    generate,
    optimize_logits,
    train_linear_model,
)
from .tensorio import (
    read_image,
    read_pgm,
    read_tensor,
    write_image,
    write_pgm,
    write_tensor,
)

__version__ = "0.1.0"
