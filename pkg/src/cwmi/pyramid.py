"""Frequency-domain real and complex steerable pyramids.

The decomposition splits an image into a high-frequency residue, N levels of
K oriented band-pass subbands (each level halving the spatial resolution),
and a low-frequency residue.  All filtering happens on the unshifted FFT
grid; downsampling crops the central quarter of the spectrum, which is exact
because the radial low-pass vanishes at and beyond half-band.  With unitary
FFTs the real-mode transform is an isometry onto its range, so the synthesis
operator is both the exact inverse and the exact adjoint.

Complex mode keeps only the positive-frequency half-plane of each oriented
band (amplitude doubled), producing analytic-signal subbands whose real part
equals the real-mode subband coefficient for coefficient.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, sqrt

import numpy as np

from .errors import DimensionError, NonFiniteInputError, ShapeMismatchError

__all__ = [
    "PyramidConfig",
    "FilterBank",
    "Decomposition",
    "build_filters",
    "decompose",
    "reconstruct",
    "apply_adjoint",
    "angular_gain",
]


@dataclass(frozen=True)
class PyramidConfig:
    """Number of recursive band levels, orientations per level, and mode."""

    levels: int
    orientations: int
    mode: str = "real"

    def __post_init__(self):
        if self.levels < 1:
            raise DimensionError(f"levels must be >= 1, got {self.levels}")
        if self.orientations < 1:
            raise DimensionError(
                f"orientations must be >= 1, got {self.orientations}"
            )
        if self.mode not in ("real", "complex"):
            raise ValueError(f"mode must be 'real' or 'complex', got {self.mode!r}")


@dataclass(frozen=True)
class LevelMasks:
    """Frequency masks for one pyramid level, on that level's grid."""

    high: np.ndarray          # radial high-pass H(r)
    low: np.ndarray           # radial low-pass L(r), |H|^2 + |L|^2 = 1
    angular: tuple            # K angular masks (real-valued arrays)


@dataclass(frozen=True)
class FilterBank:
    """Per-level masks for a fixed image size and configuration."""

    height: int
    width: int
    config: PyramidConfig
    levels: tuple          # N LevelMasks, level n on an (H/2^n, W/2^n) grid


@dataclass
class Decomposition:
    """Pyramid coefficients: residues plus N oriented subband stacks."""

    high_residue: np.ndarray   # (H, W) real
    bands: list                # N arrays of shape (K, H/2^n, W/2^n)
    low_residue: np.ndarray    # (H/2^(N-1), W/2^(N-1)) real


def angular_gain(orientations: int) -> float:
    """Normalizing constant making the squared angular masks tile to one."""
    k = orientations
    return 2 ** (k - 1) * factorial(k - 1) / sqrt(k * factorial(2 * (k - 1)))


def _check_size(height, width, config):
    div = 2 ** config.levels
    if height % div or width % div:
        raise DimensionError(
            f"image size {height}x{width} not divisible by 2^levels = {div}"
        )


def _polar_grid(height, width):
    wy = 2.0 * np.pi * np.fft.fftfreq(height)
    wx = 2.0 * np.pi * np.fft.fftfreq(width)
    r = np.hypot(wy[:, None], wx[None, :])
    theta = np.arctan2(wy[:, None], np.broadcast_to(wx[None, :], (height, width)))
    return r, theta


def _radial_masks(r):
    high = np.zeros_like(r)
    low = np.zeros_like(r)
    high[r >= np.pi / 2] = 1.0
    low[r <= np.pi / 4] = 1.0
    ring = (r > np.pi / 4) & (r < np.pi / 2)
    # H = cos((pi/2) log2(2r/pi)) and L = cos((pi/2) log2(4r/pi)) on the ring
    high[ring] = np.cos(np.pi / 2 * np.log2(2.0 * r[ring] / np.pi))
    low[ring] = np.cos(np.pi / 2 * np.log2(4.0 * r[ring] / np.pi))
    return high, low


def _angular_masks(r, theta, orientations, mode):
    gain = angular_gain(orientations)
    order = orientations - 1
    masks = []
    for k in range(1, orientations + 1):
        # wrap theta - pi*k/K into (-pi, pi]
        delta = np.angle(np.exp(1j * (theta - np.pi * k / orientations)))
        if mode == "complex":
            mask = np.where(
                np.abs(delta) < np.pi / 2,
                2.0 * gain * np.cos(delta) ** order,
                0.0,
            )
        else:
            mask = gain * np.abs(np.cos(delta)) ** order
        mask[r == 0] = 0.0  # angle undefined at DC; DC belongs to the low residue
        masks.append(mask)
    return tuple(masks)


@lru_cache(maxsize=32)
def _cached_bank(height, width, levels, orientations, mode):
    config = PyramidConfig(levels, orientations, mode)
    per_level = []
    h, w = height, width
    for _ in range(levels):
        r, theta = _polar_grid(h, w)
        high, low = _radial_masks(r)
        per_level.append(
            LevelMasks(high=high, low=low, angular=_angular_masks(r, theta, orientations, mode))
        )
        h //= 2
        w //= 2
    return FilterBank(height=height, width=width, config=config, levels=tuple(per_level))


def build_filters(height: int, width: int, config: PyramidConfig) -> FilterBank:
    """Construct the per-level frequency masks for an height x width image.

    Banks are cached per (size, config); treat the returned arrays as
    read-only.
    """
    _check_size(height, width, config)
    return _cached_bank(height, width, config.levels, config.orientations, config.mode)


def _crop_quarter(spectrum):
    h, w = spectrum.shape
    iy = np.r_[0 : h // 4, h - h // 4 : h]
    ix = np.r_[0 : w // 4, w - w // 4 : w]
    return spectrum[np.ix_(iy, ix)]


def _embed_quarter(spectrum, height, width):
    out = np.zeros((height, width), dtype=spectrum.dtype)
    sh, sw = spectrum.shape
    iy = np.r_[0 : sh // 2, height - sh // 2 : height]
    ix = np.r_[0 : sw // 2, width - sw // 2 : width]
    out[np.ix_(iy, ix)] = spectrum
    return out


def decompose(image: np.ndarray, config: PyramidConfig) -> Decomposition:
    """Decompose a real image into residues and N oriented subband stacks."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise DimensionError(f"expected a 2-d image, got shape {image.shape}")
    if not np.all(np.isfinite(image)):
        raise NonFiniteInputError("image contains non-finite values")
    h, w = image.shape
    bank = build_filters(h, w, config)
    n_levels = config.levels
    is_complex = config.mode == "complex"

    spectrum = np.fft.fft2(image, norm="ortho")
    top = bank.levels[0]
    high_residue = np.fft.ifft2(spectrum * top.high, norm="ortho").real
    lowpassed = spectrum * top.low

    bands = []
    for n in range(n_levels):
        lvl = bank.levels[n]
        stack = []
        for ang in lvl.angular:
            sub = np.fft.ifft2(lowpassed * lvl.high * ang, norm="ortho")
            stack.append(sub if is_complex else sub.real)
        bands.append(np.stack(stack))
        lowpassed = lowpassed * lvl.low
        if n < n_levels - 1:
            lowpassed = _crop_quarter(lowpassed)
    low_residue = np.fft.ifft2(lowpassed, norm="ortho").real
    return Decomposition(high_residue=high_residue, bands=bands, low_residue=low_residue)


def _check_decomposition(decomp, bank):
    n_levels = bank.config.levels
    k = bank.config.orientations
    if len(decomp.bands) != n_levels:
        raise ShapeMismatchError(
            f"expected {n_levels} band levels, got {len(decomp.bands)}"
        )
    h, w = bank.height, bank.width
    if decomp.high_residue.shape != (h, w):
        raise ShapeMismatchError(
            f"high residue shape {decomp.high_residue.shape}, expected {(h, w)}"
        )
    for n in range(n_levels):
        want = (k, h >> n, w >> n)
        if decomp.bands[n].shape != want:
            raise ShapeMismatchError(
                f"band level {n + 1} shape {decomp.bands[n].shape}, expected {want}"
            )
    small = (h >> (n_levels - 1), w >> (n_levels - 1))
    if decomp.low_residue.shape != small:
        raise ShapeMismatchError(
            f"low residue shape {decomp.low_residue.shape}, expected {small}"
        )


def _synthesize(decomp, bank, band_transform):
    """Shared synthesis/adjoint pass: masks are real so both coincide up to
    how the (possibly complex) band arrays are fed in."""
    n_levels = bank.config.levels
    lvl = bank.levels[n_levels - 1]
    acc = np.fft.fft2(np.asarray(decomp.low_residue, dtype=np.float64), norm="ortho")
    acc = acc * lvl.low
    for n in range(n_levels - 1, -1, -1):
        lvl = bank.levels[n]
        if n < n_levels - 1:
            acc = _embed_quarter(acc, lvl.high.shape[0], lvl.high.shape[1])
            acc = acc * lvl.low
        for k, ang in enumerate(lvl.angular):
            sub = band_transform(decomp.bands[n][k])
            acc = acc + np.fft.fft2(sub, norm="ortho") * lvl.high * ang
    top = bank.levels[0]
    spectrum = acc * top.low
    spectrum = spectrum + np.fft.fft2(
        np.asarray(decomp.high_residue, dtype=np.float64), norm="ortho"
    ) * top.high
    return np.fft.ifft2(spectrum, norm="ortho").real


def reconstruct(decomp: Decomposition, config: PyramidConfig) -> np.ndarray:
    """Invert `decompose`.  In complex mode only the real parts of the
    subbands carry the reconstruction (they equal the real-mode subbands)."""
    real_config = PyramidConfig(config.levels, config.orientations, "real")
    h = decomp.high_residue.shape[0]
    w = decomp.high_residue.shape[1]
    bank = build_filters(h, w, real_config)
    _check_decomposition(decomp, bank)
    return _synthesize(decomp, bank, lambda b: np.asarray(b).real.astype(np.float64))


def apply_adjoint(cotangent: Decomposition, config: PyramidConfig) -> np.ndarray:
    """Apply the adjoint of the decomposition to a coefficient cotangent.

    In mode real this equals `reconstruct`.  In mode complex the cotangent
    carries d(loss)/dRe + i d(loss)/dIm per coefficient and the result is the
    adjoint of the real-linear map image -> complex coefficients, i.e.
    Re(A^H g).
    """
    h = cotangent.high_residue.shape[0]
    w = cotangent.high_residue.shape[1]
    bank = build_filters(h, w, config)
    _check_decomposition(cotangent, bank)
    if config.mode == "real":
        return _synthesize(cotangent, bank, lambda b: np.asarray(b, dtype=np.float64))
    # complex masks are real-valued, so A^H g needs no mask conjugation;
    # the final .real in _synthesize realizes Re(A^H g).
    return _synthesize(cotangent, bank, lambda b: np.asarray(b, dtype=np.complex128))


def zeros_like_decomposition(shape, config: PyramidConfig) -> Decomposition:
    """All-zero coefficient container for an image of the given shape."""
    h, w = shape
    _check_size(h, w, config)
    dtype = np.complex128 if config.mode == "complex" else np.float64
    k = config.orientations
    bands = [
        np.zeros((k, h >> n, w >> n), dtype=dtype) for n in range(config.levels)
    ]
    small = (h >> (config.levels - 1), w >> (config.levels - 1))
    return Decomposition(
        high_residue=np.zeros((h, w)),
        bands=bands,
        low_residue=np.zeros(small),
    )
