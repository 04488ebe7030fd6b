"""Visual-leakage measurements for (plain, processed) image pairs.

The SSIM protocol is fixed so scores are comparable across runs and
implementations: color images are first reduced to BT.601 luma
(0.299 R + 0.587 G + 0.114 B, rounded to nearest), then mean local SSIM
is taken over every full 11 x 11 window (no padding) with a normalized
Gaussian weighting window of sigma 1.5, stabilizers C1 = (0.01 * 255)^2
and C2 = (0.03 * 255)^2, all in double precision over [0, 255].
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image import require_image

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
C1 = (0.01 * 255.0) ** 2
C2 = (0.03 * 255.0) ** 2


def to_luma(img: np.ndarray) -> np.ndarray:
    """Collapse an image to a 2-D float64 luma plane in [0, 255]."""
    require_image(img)
    if img.shape[2] == 1:
        return img[:, :, 0].astype(np.float64)
    r, g, b = (img[:, :, i].astype(np.float64) for i in range(3))
    return np.rint(0.299 * r + 0.587 * g + 0.114 * b)


def _gaussian_kernel() -> np.ndarray:
    offsets = np.arange(WINDOW_SIZE, dtype=np.float64) - (WINDOW_SIZE - 1) / 2.0
    kernel = np.exp(-(offsets**2) / (2.0 * WINDOW_SIGMA**2))
    return kernel / kernel.sum()


_KERNEL = _gaussian_kernel()


def _filter_valid(plane: np.ndarray) -> np.ndarray:
    # separable Gaussian-weighted local sums over valid windows only
    out = sliding_window_view(plane, WINDOW_SIZE, axis=0) @ _KERNEL
    return sliding_window_view(out, WINDOW_SIZE, axis=1) @ _KERNEL


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM between two same-shaped images.

    Symmetric in its arguments and exactly 1.0 for identical inputs.
    """
    require_image(a)
    require_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.shape[0] < WINDOW_SIZE or a.shape[1] < WINDOW_SIZE:
        raise ValueError(
            f"image {a.shape[0]}x{a.shape[1]} smaller than the "
            f"{WINDOW_SIZE}x{WINDOW_SIZE} window"
        )
    x = to_luma(a)
    y = to_luma(b)

    mu_x = _filter_valid(x)
    mu_y = _filter_valid(y)
    mu_xx = mu_x * mu_x
    mu_yy = mu_y * mu_y
    mu_xy = mu_x * mu_y
    var_x = _filter_valid(x * x) - mu_xx
    var_y = _filter_valid(y * y) - mu_yy
    cov_xy = _filter_valid(x * y) - mu_xy

    ssim_map = ((2.0 * mu_xy + C1) * (2.0 * cov_xy + C2)) / (
        (mu_xx + mu_yy + C1) * (var_x + var_y + C2)
    )
    return float(ssim_map.mean())


def histogram(img: np.ndarray) -> np.ndarray:
    """Per-channel 256-bin counts, shape (C, 256); bins sum to H*W."""
    require_image(img)
    channels = img.shape[2]
    return np.stack(
        [np.bincount(img[:, :, c].reshape(-1), minlength=256) for c in range(channels)]
    )


@dataclass
class LeakageReport:
    """How much a processed image reveals about / deviates from the plain one."""

    ssim: float
    histogram_preserved: tuple[bool, ...]  # per channel
    mean_abs_diff: float


def leakage_report(plain: np.ndarray, processed: np.ndarray) -> LeakageReport:
    """Bundle SSIM, per-channel histogram equality, and mean |difference|."""
    require_image(plain)
    require_image(processed)
    if plain.shape != processed.shape:
        raise ValueError(f"shape mismatch {plain.shape} vs {processed.shape}")
    hist_a = histogram(plain)
    hist_b = histogram(processed)
    preserved = tuple(bool(np.array_equal(hist_a[c], hist_b[c]))
                      for c in range(plain.shape[2]))
    diff = np.abs(plain.astype(np.int64) - processed.astype(np.int64))
    return LeakageReport(
        ssim=ssim(plain, processed),
        histogram_preserved=preserved,
        mean_abs_diff=float(diff.mean()),
    )
