"""Fourier phase scrambling with a regenerable random phase field.

Scrambling adds a random phase to every frequency coefficient and keeps
the magnitude spectrum.  The phase field is odd under frequency negation,
so the inverse transform of a real plane stays real and the operation is
undone exactly by subtracting the same field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .colorspace import saturation_plane
from .errors import DimensionMismatch, InvalidParams, VersionMismatch
from .imgcore import DepthMap, RasterImage, SamplePair, to_greyscale

SIDECAR_VERSION = 1
TWO_PI = 2.0 * np.pi
MODES = ("RGB", "GREYSCALE", "SATURATION")


def _partner_index(height: int, width: int) -> np.ndarray:
    """Flat index of the bin at (-u mod H, -v mod W) for every (u, v)."""
    u = (-np.arange(height)) % height
    v = (-np.arange(width)) % width
    return (u[:, None] * width + v[None, :]).ravel()


def random_phase_field(seed: int, height: int, width: int) -> np.ndarray:
    """Uniform phases on one half of the spectrum, mirrored with negation.

    Bins that are their own conjugate partner (DC and the Nyquist row and
    column of even dimensions) get phase 0.
    """
    if height < 1 or width < 1:
        raise InvalidParams(f"dimensions must be positive, got {height}x{width}")
    n = height * width
    flat = np.arange(n)
    partner = _partner_index(height, width)
    owner = flat < partner
    rng = np.random.default_rng(seed)
    draws = rng.uniform(0.0, TWO_PI, size=int(owner.sum()))
    field = np.zeros(n)
    field[flat[owner]] = draws
    mirrored = TWO_PI - draws
    mirrored[mirrored >= TWO_PI] = 0.0
    field[partner[owner]] = mirrored
    return field.reshape(height, width)


@dataclass(frozen=True)
class ScrambleRecord:
    seed: int
    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise InvalidParams(f"dimensions must be positive, got {self.height}x{self.width}")

    @cached_property
    def phase_field(self) -> np.ndarray:
        field = random_phase_field(self.seed, self.height, self.width)
        field.setflags(write=False)
        return field

    @property
    def record_id(self) -> str:
        return f"scramble-{self.seed}-{self.height}x{self.width}"

    def to_sidecar(self, **extra) -> dict:
        doc = {
            "kind": "scramble",
            "seed": int(self.seed),
            "height": int(self.height),
            "width": int(self.width),
            "version": SIDECAR_VERSION,
        }
        doc.update(extra)
        return doc

    @classmethod
    def from_sidecar(cls, doc: dict) -> ScrambleRecord:
        if doc.get("version") != SIDECAR_VERSION:
            raise VersionMismatch(f"scramble sidecar version {doc.get('version')!r}, expected {SIDECAR_VERSION}")
        return cls(int(doc["seed"]), int(doc["height"]), int(doc["width"]))

    def dumps(self, **extra) -> str:
        return json.dumps(self.to_sidecar(**extra), indent=2, sort_keys=True) + "\n"


class _ZeroRecord(ScrambleRecord):
    """Record whose phase field is identically zero (identity scramble)."""

    @cached_property
    def phase_field(self) -> np.ndarray:
        return np.zeros((self.height, self.width))


def make_record(seed: int, height: int, width: int) -> ScrambleRecord:
    return ScrambleRecord(int(seed), int(height), int(width))


def identity_record(height: int, width: int) -> ScrambleRecord:
    return _ZeroRecord(0, int(height), int(width))


def rotate_phase(plane: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """ifft2(fft2(plane) * exp(i * phase)), returned complex and unclamped."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.shape != phase.shape:
        raise DimensionMismatch(f"plane is {plane.shape}, phase field is {phase.shape}")
    return np.fft.ifft2(np.fft.fft2(plane) * np.exp(1j * phase))


def _finish(out: np.ndarray, value_range) -> np.ndarray:
    out = out.real
    if value_range is not None:
        out = np.clip(out, value_range[0], value_range[1])
    return out


def phase_scramble(plane, record: ScrambleRecord, value_range=(0.0, 255.0)) -> np.ndarray:
    """Scramble one real plane.  ``value_range=None`` skips the clamp."""
    return _finish(rotate_phase(plane, record.phase_field), value_range)


def phase_unscramble(plane, record: ScrambleRecord, value_range=(0.0, 255.0)) -> np.ndarray:
    return _finish(rotate_phase(plane, -record.phase_field), value_range)


def _check_dims(record: ScrambleRecord, height: int, width: int) -> None:
    if (record.height, record.width) != (height, width):
        raise DimensionMismatch(
            f"record is {record.height}x{record.width}, input is {height}x{width}"
        )


def scramble_image(img: RasterImage, record: ScrambleRecord) -> RasterImage:
    """Scramble every channel with the same record, keeping the sample scale."""
    _check_dims(record, img.height, img.width)
    scale = 255.0 if img.is_integer else 1.0
    planes = [
        phase_scramble(img.data[:, :, c].astype(np.float64), record, (0.0, scale))
        for c in range(img.channels)
    ]
    out = np.stack(planes, axis=-1)
    if img.is_integer:
        out = np.floor(out + 0.5).astype(np.uint8)
    return RasterImage(out, img.colour_model)


def unscramble_image(img: RasterImage, record: ScrambleRecord) -> RasterImage:
    _check_dims(record, img.height, img.width)
    scale = 255.0 if img.is_integer else 1.0
    planes = [
        phase_unscramble(img.data[:, :, c].astype(np.float64), record, (0.0, scale))
        for c in range(img.channels)
    ]
    out = np.stack(planes, axis=-1)
    if img.is_integer:
        out = np.floor(out + 0.5).astype(np.uint8)
    return RasterImage(out, img.colour_model)


def scramble_depth(depth: DepthMap, record: ScrambleRecord) -> DepthMap:
    _check_dims(record, depth.height, depth.width)
    return DepthMap(phase_scramble(depth.values, record, (0.0, depth.max_value)), depth.convention)


def unscramble_depth(depth: DepthMap, record: ScrambleRecord) -> DepthMap:
    _check_dims(record, depth.height, depth.width)
    return DepthMap(phase_unscramble(depth.values, record, (0.0, depth.max_value)), depth.convention)


def scramble_pair(pair: SamplePair, record: ScrambleRecord, mode: str = "RGB") -> tuple[RasterImage, DepthMap]:
    """Scramble the cue image for ``mode`` and the depth map with one record.

    RGB and GREYSCALE outputs are 8-bit; SATURATION yields a real-valued
    S plane in [0, 1].
    """
    mode = mode.upper()
    if mode not in MODES:
        raise InvalidParams(f"unknown scramble mode {mode!r}; expected one of {MODES}")
    _check_dims(record, pair.rgb.height, pair.rgb.width)
    if mode == "RGB":
        source = pair.rgb
    elif mode == "GREYSCALE":
        source = to_greyscale(pair.rgb)
    else:
        source = RasterImage(saturation_plane(pair.rgb), "HSV_PLANE")
    return scramble_image(source, record), scramble_depth(pair.depth, record)
