"""Saturation statistics, RGB-vs-depth histograms and the noise-restoration experiment."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .colorspace import extract_hsv, saturation_plane
from .errors import DimensionMismatch, EmptyInput, InvalidParams, TooManyRows
from .imgcore import RasterImage, SamplePair
from .spectral import ScrambleRecord, phase_scramble, phase_unscramble, scramble_image


@dataclass
class BinnedProfile:
    bin_edges: np.ndarray
    means: np.ndarray  # NaN where the bin is empty
    counts: np.ndarray
    sums: np.ndarray = field(repr=False, default=None)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sums is None:
            self.sums = np.where(self.counts > 0, np.nan_to_num(self.means) * self.counts, 0.0)

    @classmethod
    def from_sums(cls, edges, sums, counts, meta=None) -> BinnedProfile:
        sums = np.asarray(sums, dtype=np.float64)
        counts = np.asarray(counts, dtype=np.int64)
        means = np.full(sums.shape, np.nan)
        occupied = counts > 0
        means[occupied] = sums[occupied] / counts[occupied]
        return cls(np.asarray(edges, dtype=np.float64), means, counts, sums, dict(meta or {}))

    def merge(self, other: BinnedProfile) -> BinnedProfile:
        if not np.array_equal(self.bin_edges, other.bin_edges):
            raise DimensionMismatch("cannot merge profiles with different bin edges")
        return BinnedProfile.from_sums(self.bin_edges, self.sums + other.sums, self.counts + other.counts, self.meta)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin", "lower", "upper", "mean", "count"])
        for i in range(len(self.means)):
            mean = "" if np.isnan(self.means[i]) else f"{self.means[i]:.6f}"
            w.writerow([i, f"{self.bin_edges[i]:.6g}", f"{self.bin_edges[i + 1]:.6g}", mean, int(self.counts[i])])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "bin_edges": self.bin_edges.tolist(),
            "means": [None if np.isnan(m) else float(m) for m in self.means],
            "counts": self.counts.astype(int).tolist(),
            "meta": self.meta,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def depth_bin_index(depth_255: np.ndarray, n_bins: int) -> np.ndarray:
    """Bin of each 0-255 depth among n equal intervals; 255 falls in the last bin."""
    idx = np.floor(np.asarray(depth_255) * n_bins / 255.0).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1)


def value_bin_index(values: np.ndarray, n_bins: int) -> np.ndarray:
    """Channel-value bins of width ceil(256 / n); the final bin absorbs the remainder."""
    step = math.ceil(256 / n_bins)
    idx = np.asarray(values).astype(np.int64) // step
    return np.clip(idx, 0, n_bins - 1)


def value_bin_edges(n_bins: int) -> np.ndarray:
    step = math.ceil(256 / n_bins)
    edges = [min(k * step, 256) for k in range(n_bins)] + [256]
    return np.asarray(edges, dtype=np.float64)


def _pair_saturation_partial(pair: SamplePair, n_bins: int):
    s = saturation_plane(pair.rgb)
    idx = depth_bin_index(pair.depth.on_255_scale(), n_bins).ravel()
    sums = np.bincount(idx, weights=s.ravel(), minlength=n_bins)
    counts = np.bincount(idx, minlength=n_bins)
    return sums, counts


def saturation_by_depth(pairs, n_bins: int = 8) -> BinnedProfile:
    """Mean saturation within n equal depth intervals of the 0-255 axis."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("no pairs to analyse")
    if n_bins < 1:
        raise InvalidParams("n_bins must be at least 1")
    sums = np.zeros(n_bins)
    counts = np.zeros(n_bins, dtype=np.int64)
    for pair in pairs:
        s, c = _pair_saturation_partial(pair, n_bins)
        sums += s
        counts += c
    edges = np.linspace(0.0, 255.0, n_bins + 1)
    return BinnedProfile.from_sums(edges, sums, counts, {"n_bins": n_bins, "image_count": len(pairs), "axis": "depth_0_255"})


def row_band_edges(height: int, n_rows: int) -> np.ndarray:
    band = height // n_rows
    edges = [k * band for k in range(n_rows)] + [height]
    return np.asarray(edges, dtype=np.int64)


def row_saturation_profile(img: RasterImage, n_rows: int = 10) -> BinnedProfile:
    """Mean saturation per horizontal band, top band first.

    Bands are height // n_rows rows tall; leftover rows join the last band.
    """
    if n_rows < 1:
        raise InvalidParams("n_rows must be at least 1")
    if n_rows > img.height:
        raise TooManyRows(f"{n_rows} bands requested for an image {img.height} rows tall")
    s = saturation_plane(img)
    edges = row_band_edges(img.height, n_rows)
    sums = np.array([s[edges[k]:edges[k + 1]].sum() for k in range(n_rows)])
    counts = np.array([(edges[k + 1] - edges[k]) * img.width for k in range(n_rows)])
    return BinnedProfile.from_sums(edges, sums, counts, {"n_rows": n_rows, "axis": "row"})


@dataclass
class HeatmapTable:
    counts: np.ndarray  # (depth_bins, value_bins, 3)
    depth_edges: np.ndarray
    value_edges: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["channel", "depth_bin", "depth_lower", "depth_upper", "value_bin", "value_lower", "value_upper", "count"])
        d_bins, v_bins, _ = self.counts.shape
        for c, name in enumerate("RGB"):
            for i in range(d_bins):
                for j in range(v_bins):
                    w.writerow([
                        name, i, f"{self.depth_edges[i]:.6g}", f"{self.depth_edges[i + 1]:.6g}",
                        j, int(self.value_edges[j]), int(self.value_edges[j + 1]), int(self.counts[i, j, c]),
                    ])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "counts": self.counts.astype(int).tolist(),
            "depth_edges": self.depth_edges.tolist(),
            "value_edges": self.value_edges.tolist(),
            "meta": self.meta,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def sample_pairs(items: list, sample_size: int | None, seed: int) -> tuple[list, list[int]]:
    """Seeded draw without replacement, preserving input order."""
    if sample_size is None or sample_size >= len(items):
        return list(items), list(range(len(items)))
    rng = np.random.default_rng(seed)
    chosen = sorted(rng.choice(len(items), size=sample_size, replace=False).tolist())
    return [items[k] for k in chosen], chosen


def rgb_depth_heatmap(pairs, depth_bins: int = 10, value_bins: int = 26,
                      sample_size: int | None = 500, seed: int = 0) -> HeatmapTable:
    """Joint counts of (depth bin, channel-value bin) for R, G and B."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("no pairs to analyse")
    if depth_bins < 1 or value_bins < 1 or value_bins > 256:
        raise InvalidParams("need depth_bins >= 1 and 1 <= value_bins <= 256")
    chosen, indices = sample_pairs(pairs, sample_size, seed)
    counts = np.zeros((depth_bins, value_bins, 3), dtype=np.int64)
    for pair in chosen:
        d_idx = depth_bin_index(pair.depth.on_255_scale(), depth_bins).ravel()
        rgb = pair.rgb.as_u8()
        for c in range(3):
            v_idx = value_bin_index(rgb[:, :, c], value_bins).ravel()
            flat = np.bincount(d_idx * value_bins + v_idx, minlength=depth_bins * value_bins)
            counts[:, :, c] += flat.reshape(depth_bins, value_bins)
    meta = {
        "seed": seed,
        "sample_size": sample_size,
        "image_count": len(chosen),
        "sampled_ids": [p.id for p in chosen],
        "depth_bins": depth_bins,
        "value_bins": value_bins,
    }
    return HeatmapTable(counts, np.linspace(0.0, 255.0, depth_bins + 1), value_bin_edges(value_bins), meta)


def central_region(height: int, width: int) -> tuple[slice, slice]:
    """Centred window with half the height and half the width."""
    h2, w2 = height // 2, width // 2
    top, left = (height - h2) // 2, (width - w2) // 2
    return slice(top, top + h2), slice(left, left + w2)


@dataclass
class NoiseResult:
    restored: RasterImage
    rmse: float
    channel_rmse: list
    scrambled: RasterImage
    noisy: RasterImage
    noisy_pixels: int
    injected_energy: float
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "rmse": self.rmse,
            "channel_rmse": self.channel_rmse,
            "noisy_pixels": self.noisy_pixels,
            "injected_energy": self.injected_energy,
            "meta": self.meta,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def noise_experiment(pair: SamplePair, record: ScrambleRecord, sigma: float = 25.0,
                     region: str = "WHOLE", seed: int = 0) -> NoiseResult:
    """Scramble, add Gaussian noise (0-255 scale) to the 8-bit scrambled image, restore.

    The noisy image is re-clamped to [0, 255] before unscrambling.  RMSE is
    measured between the real-valued restored image and the original.
    """
    region = region.upper()
    if region not in ("WHOLE", "CENTRAL"):
        raise InvalidParams(f"region must be WHOLE or CENTRAL, got {region!r}")
    if sigma < 0:
        raise InvalidParams("sigma must be non-negative")
    rgb = pair.rgb
    if (record.height, record.width) != (rgb.height, rgb.width):
        raise DimensionMismatch(
            f"record is {record.height}x{record.width}, image is {rgb.height}x{rgb.width}"
        )
    scrambled = scramble_image(rgb, record)
    base = scrambled.data.astype(np.float64)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=base.shape) if sigma > 0 else np.zeros(base.shape)
    mask = np.zeros(base.shape[:2], dtype=bool)
    if region == "WHOLE":
        mask[:] = True
    else:
        mask[central_region(rgb.height, rgb.width)] = True
    noise[~mask] = 0.0
    noisy = np.clip(base + noise, 0.0, 255.0)
    restored = np.stack(
        [phase_unscramble(noisy[:, :, c], record) for c in range(3)], axis=-1
    )
    original = rgb.data.astype(np.float64)
    err = restored - original
    channel_rmse = np.sqrt((err ** 2).mean(axis=(0, 1))).tolist()
    return NoiseResult(
        restored=RasterImage(np.floor(restored + 0.5).astype(np.uint8), "RGB"),
        rmse=float(np.sqrt((err ** 2).mean())),
        channel_rmse=channel_rmse,
        scrambled=scrambled,
        noisy=RasterImage(np.floor(noisy + 0.5).astype(np.uint8), "RGB"),
        noisy_pixels=int(mask.sum()),
        injected_energy=float(((noisy - base) ** 2).sum()),
        meta={"seed": seed, "sigma": sigma, "region": region, "record": record.to_sidecar()},
    )


def hue_scramble_demo(img: RasterImage, record: ScrambleRecord) -> tuple[np.ndarray, np.ndarray]:
    """Scramble the hue plane and wrap it back onto [0, 360).

    Demonstration only: returns (wrapped hue, boolean map of wrap seams)
    where adjacent pixels jump by more than 180 degrees.
    """
    h = extract_hsv(img).h
    wrapped = np.mod(phase_scramble(h, record, value_range=None), 360.0)
    seams = np.zeros(h.shape, dtype=bool)
    seams[:, 1:] |= np.abs(np.diff(wrapped, axis=1)) > 180.0
    seams[1:, :] |= np.abs(np.diff(wrapped, axis=0)) > 180.0
    return wrapped, seams
