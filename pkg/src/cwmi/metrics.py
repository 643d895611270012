"""Segmentation evaluation metrics for binary masks.

mIoU/mDice average foreground and background classes; variation of
information and adjusted Rand index compare connected-component instance
labelings (background counted as one cluster); Hausdorff distance compares
foreground boundary-pixel sets exactly, in pixels.
"""

from dataclasses import dataclass
from math import inf

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import EmptyForegroundError, ShapeMismatchError

__all__ = [
    "MetricsReport",
    "iou_dice",
    "connected_components",
    "variation_of_information",
    "adjusted_rand_index",
    "hausdorff_distance",
    "evaluate",
]


@dataclass
class MetricsReport:
    miou: float
    mdice: float
    vi: float
    ari: float
    hd: float

    def as_dict(self) -> dict:
        return {
            "miou": self.miou,
            "mdice": self.mdice,
            "vi": self.vi,
            "ari": self.ari,
            "hd": self.hd,
        }


def _as_binary(mask):
    arr = np.asarray(mask)
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("mask values must be strictly binary")
    return arr.astype(bool)


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shapes differ: {a.shape} vs {b.shape}")


def iou_dice(label, pred):
    """Class-averaged IoU and Dice over foreground and background.

    A class empty in both masks scores 1.0 for both metrics.
    """
    label = _as_binary(label)
    pred = _as_binary(pred)
    _check_same_shape(label, pred)
    ious = []
    dices = []
    for cls_label, cls_pred in ((label, pred), (~label, ~pred)):
        inter = int(np.sum(cls_label & cls_pred))
        union = int(np.sum(cls_label | cls_pred))
        total = int(np.sum(cls_label)) + int(np.sum(cls_pred))
        ious.append(inter / union if union else 1.0)
        dices.append(2.0 * inter / total if total else 1.0)
    return float(np.mean(ious)), float(np.mean(dices))


def connected_components(mask, connectivity: int = 4) -> np.ndarray:
    """Label foreground components in raster order; background stays 0."""
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = _as_binary(mask)
    structure = (
        ndimage.generate_binary_structure(2, 1)
        if connectivity == 4
        else ndimage.generate_binary_structure(2, 2)
    )
    labels, count = ndimage.label(mask, structure=structure)
    labels = labels.astype(np.int64)
    if count:
        # renumber by first raster-scan occurrence so labeling is contractual
        flat = labels.ravel()
        first = np.full(count + 1, flat.size, dtype=np.int64)
        nz = np.flatnonzero(flat)
        np.minimum.at(first, flat[nz], nz)
        order = np.argsort(first[1:], kind="stable")
        remap = np.zeros(count + 1, dtype=np.int64)
        remap[1 + order] = np.arange(1, count + 1)
        labels = remap[labels]
    return labels


def _contingency(a, b):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    _, a_idx = np.unique(a, return_inverse=True)
    _, b_idx = np.unique(b, return_inverse=True)
    n_a = a_idx.max() + 1
    n_b = b_idx.max() + 1
    table = np.zeros((n_a, n_b), dtype=np.int64)
    np.add.at(table, (a_idx, b_idx), 1)
    return table


def variation_of_information(a, b) -> float:
    """VI = H(a) + H(b) - 2 I(a;b) over the joint pixel-label distribution."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_shape(a, b)
    table = _contingency(a, b)
    n = table.sum()
    p_joint = table / n
    p_a = p_joint.sum(axis=1)
    p_b = p_joint.sum(axis=0)

    def entropy(p):
        p = p[p > 0]
        return float(-np.sum(p * np.log(p)))

    h_a = entropy(p_a)
    h_b = entropy(p_b)
    nz = p_joint > 0
    mi = float(
        np.sum(p_joint[nz] * np.log(p_joint[nz] / np.outer(p_a, p_b)[nz]))
    )
    return max(h_a + h_b - 2.0 * mi, 0.0)


def adjusted_rand_index(a, b) -> float:
    """Permutation-model adjusted Rand index from the contingency table."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_shape(a, b)
    table = _contingency(a, b)
    n = table.sum()

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_cells = float(np.sum(comb2(table)))
    sum_a = float(np.sum(comb2(table.sum(axis=1))))
    sum_b = float(np.sum(comb2(table.sum(axis=0))))
    expected = sum_a * sum_b / comb2(n)
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        return 1.0  # both labelings trivial (single cluster each)
    return float((sum_cells - expected) / (maximum - expected))


def _boundary_points(mask):
    """Coordinates of foreground pixels with a 4-neighbor background pixel
    (image border counts as background)."""
    interior = ndimage.binary_erosion(
        mask, structure=ndimage.generate_binary_structure(2, 1), border_value=0
    )
    return np.argwhere(mask & ~interior)


def hausdorff_distance(label, pred) -> float:
    """Exact symmetric Hausdorff distance between foreground boundaries."""
    label = _as_binary(label)
    pred = _as_binary(pred)
    _check_same_shape(label, pred)
    pts_a = _boundary_points(label)
    pts_b = _boundary_points(pred)
    if len(pts_a) == 0 or len(pts_b) == 0:
        raise EmptyForegroundError("both masks need at least one foreground pixel")
    d_ab, _ = cKDTree(pts_b).query(pts_a, k=1)
    d_ba, _ = cKDTree(pts_a).query(pts_b, k=1)
    return float(max(d_ab.max(), d_ba.max()))


def evaluate(label, pred_prob, threshold: float = 0.5) -> MetricsReport:
    """Threshold a probability map and run all five metrics.

    VI and ARI are computed on 4-connected component labelings of each mask;
    an empty foreground on either side reports hd = inf instead of raising.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    label = _as_binary(label)
    pred_prob = np.asarray(pred_prob, dtype=np.float64)
    _check_same_shape(label, pred_prob)
    pred = pred_prob >= threshold
    miou, mdice = iou_dice(label, pred)
    comp_label = connected_components(label)
    comp_pred = connected_components(pred.astype(np.uint8))
    vi = variation_of_information(comp_label, comp_pred)
    ari = adjusted_rand_index(comp_label, comp_pred)
    try:
        hd = hausdorff_distance(label, pred.astype(np.uint8))
    except EmptyForegroundError:
        hd = inf
    return MetricsReport(miou=miou, mdice=mdice, vi=vi, ari=ari, hd=hd)
