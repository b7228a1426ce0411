"""RGB to HSV plane extraction in real arithmetic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import WrongChannelCount


@dataclass(frozen=True)
class HsvPlanes:
    h: np.ndarray  # degrees in [0, 360)
    s: np.ndarray  # [0, 1]
    v: np.ndarray  # [0, 1]


def _rgb_255(img) -> np.ndarray:
    data = getattr(img, "data", img)
    data = np.asarray(data)
    if data.ndim != 3 or data.shape[2] != 3:
        raise WrongChannelCount(f"HSV extraction needs an HxWx3 RGB image, got shape {data.shape}")
    if data.dtype == np.uint8:
        return data.astype(np.float64)
    return data.astype(np.float64) * 255.0


def _value_and_saturation(rgb: np.ndarray):
    hi = rgb.max(axis=2)
    lo = rgb.min(axis=2)
    chroma = hi - lo
    v = hi / 255.0
    s = np.zeros_like(hi)
    nz = hi != 0
    s[nz] = chroma[nz] / hi[nz]
    return hi, chroma, v, s


def extract_hsv(img) -> HsvPlanes:
    """Per-pixel V = max/255, S = (max - min) / max (0 where max = 0), hexagonal hue.

    Hue is 0 wherever chroma is zero.
    """
    rgb = _rgb_255(img)
    hi, chroma, v, s = _value_and_saturation(rgb)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    h = np.zeros_like(hi)
    safe = np.where(chroma == 0, 1.0, chroma)
    red = (chroma > 0) & (hi == r)
    green = (chroma > 0) & (hi == g) & ~red
    blue = (chroma > 0) & ~red & ~green
    h[red] = (60.0 * (g - b) / safe)[red]
    h[green] = (60.0 * ((b - r) / safe + 2.0))[green]
    h[blue] = (60.0 * ((r - g) / safe + 4.0))[blue]
    h = np.mod(h, 360.0)
    h[h >= 360.0] = 0.0
    return HsvPlanes(h, s, v)


def saturation_plane(img) -> np.ndarray:
    rgb = _rgb_255(img)
    return _value_and_saturation(rgb)[3]


def value_plane(img) -> np.ndarray:
    rgb = _rgb_255(img)
    return _value_and_saturation(rgb)[2]


def plane_to_u8(plane: np.ndarray) -> np.ndarray:
    """Export form of an S or V plane: x255, rounded half up."""
    return np.floor(np.clip(plane, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
