"""Shape cue: Canny edge maps, plus Sobel magnitude maps for comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidParams, WrongChannelCount
from .imgcore import DepthMap, RasterImage, SamplePair, to_greyscale

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = SOBEL_X.T.copy()
THRESHOLD_MODES = ("ABSOLUTE", "RATIO_OF_MAX")


@dataclass(frozen=True)
class EdgeParams:
    gaussian_sigma: float = 1.4
    low_threshold: float = 0.1
    high_threshold: float = 0.2
    threshold_mode: str = "RATIO_OF_MAX"

    def validate(self) -> None:
        if not self.gaussian_sigma > 0:
            raise InvalidParams(f"sigma must be positive, got {self.gaussian_sigma}")
        if not 0 < self.low_threshold < self.high_threshold:
            raise InvalidParams(
                f"need 0 < low < high, got low={self.low_threshold} high={self.high_threshold}"
            )
        if self.threshold_mode not in THRESHOLD_MODES:
            raise InvalidParams(f"threshold mode must be one of {THRESHOLD_MODES}")


def _single_plane(grey) -> np.ndarray:
    data = getattr(grey, "data", grey)
    data = np.asarray(data)
    if data.ndim == 3:
        if data.shape[2] != 1:
            raise WrongChannelCount(f"edge detection needs one channel, got {data.shape[2]}")
        data = data[:, :, 0]
    if data.ndim != 2:
        raise WrongChannelCount(f"edge detection needs a 2-D plane, got shape {data.shape}")
    return data.astype(np.float64)


def sobel_gradients(plane: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gx, Gy with replicate borders.  Gx grows to the right, Gy downwards."""
    gx = ndimage.correlate(plane, SOBEL_X, mode="nearest")
    gy = ndimage.correlate(plane, SOBEL_Y, mode="nearest")
    return gx, gy


def sobel_magnitude(grey) -> np.ndarray:
    plane = _single_plane(grey)
    gx, gy = sobel_gradients(plane)
    mag = np.hypot(gx, gy)
    peak = mag.max() if mag.size else 0.0
    if peak <= 0:
        return np.zeros_like(mag)
    return mag * (255.0 / peak)


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(1, math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(plane: np.ndarray, sigma: float) -> np.ndarray:
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(plane, k, axis=0, mode="nearest")
    return ndimage.correlate1d(out, k, axis=1, mode="nearest")


# (drow, dcol) of the neighbour along the gradient for each quantized sector
_SECTOR_STEP = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}


def quantize_direction(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Gradient angle folded to [0, 180) and binned to 0/45/90/135 degrees (sectors 0..3)."""
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    return (np.floor((angle + 22.5) / 45.0).astype(np.int64)) % 4


def non_maximum_suppression(mag: np.ndarray, sector: np.ndarray) -> np.ndarray:
    """Keep pixels that dominate both neighbours along their gradient direction.

    Ties are broken asymmetrically (strict against the backward neighbour)
    so a symmetric ridge two pixels wide thins to one pixel.
    """
    # round away float noise so mathematically equal neighbours compare equal
    mag = np.round(mag, 8)
    padded = np.pad(mag, 1, mode="constant")
    h, w = mag.shape
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dr, dc) in _SECTOR_STEP.items():
        fwd = padded[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
        bwd = padded[1 - dr:1 - dr + h, 1 - dc:1 - dc + w]
        keep |= (sector == s) & (mag > bwd) & (mag >= fwd)
    return np.where(keep & (mag > 0), mag, 0.0)


def hysteresis(nms: np.ndarray, low: float, high: float) -> np.ndarray:
    """Weak pixels survive when 8-connected (through weak pixels) to a strong one."""
    weak = nms >= low
    strong = nms >= high
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return np.zeros(nms.shape, dtype=bool)
    anchored = np.zeros(n + 1, dtype=bool)
    anchored[np.unique(labels[strong])] = True
    anchored[0] = False
    return anchored[labels]


def canny_stages(grey, params: EdgeParams | None = None) -> dict:
    """All intermediate maps of the detector, keyed by stage name."""
    params = params or EdgeParams()
    params.validate()
    plane = _single_plane(grey)
    smooth = gaussian_blur(plane, params.gaussian_sigma)
    gx, gy = sobel_gradients(smooth)
    mag = np.hypot(gx, gy)
    sector = quantize_direction(gx, gy)
    nms = non_maximum_suppression(mag, sector)
    if params.threshold_mode == "RATIO_OF_MAX":
        peak = mag.max() if mag.size else 0.0
        low, high = params.low_threshold * peak, params.high_threshold * peak
    else:
        low, high = params.low_threshold, params.high_threshold
    if high <= 0:
        edges = np.zeros(plane.shape, dtype=bool)
    else:
        edges = hysteresis(nms, low, high)
    return {
        "smooth": smooth, "gx": gx, "gy": gy, "magnitude": mag, "sector": sector,
        "nms": nms, "low": low, "high": high, "strong": nms >= high if high > 0 else edges, "edges": edges,
    }


def canny_edges(grey, params: EdgeParams | None = None) -> np.ndarray:
    """Binary edge map, 255 on edge pixels and 0 elsewhere (uint8)."""
    edges = canny_stages(grey, params)["edges"]
    return np.where(edges, 255, 0).astype(np.uint8)


def shape_dataset(pair: SamplePair, params: EdgeParams | None = None) -> tuple[RasterImage, DepthMap]:
    grey = to_greyscale(pair.rgb)
    return RasterImage(canny_edges(grey, params), "EDGE"), pair.depth


def sobel_dataset(pair: SamplePair) -> tuple[RasterImage, DepthMap]:
    grey = to_greyscale(pair.rgb)
    mag = sobel_magnitude(grey)
    return RasterImage(np.floor(mag + 0.5).astype(np.uint8), "EDGE"), pair.depth
