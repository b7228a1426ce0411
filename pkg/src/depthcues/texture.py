"""Seeded, invertible patch shuffling for local-texture datasets.

Images whose sides are not multiples of the patch size are centre-cropped
to the largest multiple first.  Everything here is integer indexing, so a
shuffle followed by an unshuffle reproduces the cropped input bit for bit.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, InvalidParams, PatchTooLarge, VersionMismatch
from .imgcore import DepthMap, RasterImage, SamplePair, to_greyscale

SIDECAR_VERSION = 1
STANDARD_PATCH_SIZES = (4, 16, 32, 64, 128)


def fisher_yates(n: int, seed: int) -> np.ndarray:
    rng = random.Random(seed)
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.randint(0, i)
        perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm, dtype=np.int64)


@dataclass(frozen=True)
class ShuffleRecord:
    seed: int
    patch_size: int
    orig_h: int
    orig_w: int

    def __post_init__(self):
        if self.patch_size < 1:
            raise InvalidParams(f"patch size must be positive, got {self.patch_size}")
        if self.patch_size > min(self.orig_h, self.orig_w):
            raise PatchTooLarge(
                f"patch {self.patch_size} does not fit a {self.orig_h}x{self.orig_w} image"
            )

    @property
    def grid(self) -> tuple[int, int]:
        return self.orig_h // self.patch_size, self.orig_w // self.patch_size

    @property
    def crop(self) -> tuple[int, int, int, int]:
        """(top, left, height, width) of the centred crop."""
        rows, cols = self.grid
        h, w = rows * self.patch_size, cols * self.patch_size
        return (self.orig_h - h) // 2, (self.orig_w - w) // 2, h, w

    @cached_property
    def permutation(self) -> np.ndarray:
        rows, cols = self.grid
        perm = fisher_yates(rows * cols, self.seed)
        perm.setflags(write=False)
        return perm

    def to_sidecar(self, **extra) -> dict:
        doc = {
            "kind": "shuffle",
            "seed": int(self.seed),
            "patch_size": int(self.patch_size),
            "orig_h": int(self.orig_h),
            "orig_w": int(self.orig_w),
            "version": SIDECAR_VERSION,
        }
        doc.update(extra)
        return doc

    @classmethod
    def from_sidecar(cls, doc: dict) -> ShuffleRecord:
        if doc.get("version") != SIDECAR_VERSION:
            raise VersionMismatch(f"shuffle sidecar version {doc.get('version')!r}, expected {SIDECAR_VERSION}")
        return cls(int(doc["seed"]), int(doc["patch_size"]), int(doc["orig_h"]), int(doc["orig_w"]))

    def dumps(self, **extra) -> str:
        return json.dumps(self.to_sidecar(**extra), indent=2, sort_keys=True) + "\n"


class _FixedShuffle(ShuffleRecord):
    """ShuffleRecord with an explicit permutation, for identity and hand-built cases."""

    def __init__(self, patch_size, orig_h, orig_w, permutation):
        super().__init__(0, patch_size, orig_h, orig_w)
        perm = np.asarray(permutation, dtype=np.int64)
        rows, cols = self.grid
        if sorted(perm.tolist()) != list(range(rows * cols)):
            raise InvalidParams("permutation is not a bijection on the patch grid")
        perm.setflags(write=False)
        self.__dict__["permutation"] = perm


def make_shuffle(seed: int, height: int, width: int, patch_size: int) -> ShuffleRecord:
    return ShuffleRecord(int(seed), int(patch_size), int(height), int(width))


def fixed_shuffle(height: int, width: int, patch_size: int, permutation=None) -> ShuffleRecord:
    """Record with a given permutation; ``None`` means the identity."""
    rows, cols = height // patch_size, width // patch_size
    if permutation is None:
        permutation = np.arange(rows * cols)
    return _FixedShuffle(int(patch_size), int(height), int(width), permutation)


def _as_hwc(arr: np.ndarray) -> tuple[np.ndarray, bool]:
    arr = np.asarray(arr)
    if arr.ndim == 2:
        return arr[:, :, None], True
    if arr.ndim == 3:
        return arr, False
    raise DimensionMismatch(f"expected a 2-D plane or HxWxC image, got shape {arr.shape}")


def crop_to_grid(arr, record: ShuffleRecord) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.shape[:2] != (record.orig_h, record.orig_w):
        raise DimensionMismatch(
            f"input is {arr.shape[0]}x{arr.shape[1]}, record expects {record.orig_h}x{record.orig_w}"
        )
    top, left, h, w = record.crop
    return arr[top:top + h, left:left + w]


def _move_blocks(arr: np.ndarray, record: ShuffleRecord, perm: np.ndarray) -> np.ndarray:
    # out cell i <- in cell perm[i]
    hwc, squeeze = _as_hwc(arr)
    rows, cols = record.grid
    p = record.patch_size
    blocks = hwc.reshape(rows, p, cols, p, -1).transpose(0, 2, 1, 3, 4).reshape(rows * cols, p, p, -1)
    out = blocks[perm].reshape(rows, cols, p, p, -1).transpose(0, 2, 1, 3, 4).reshape(rows * p, cols * p, -1)
    return out[:, :, 0] if squeeze else out


def shuffle_patches(arr, record: ShuffleRecord) -> np.ndarray:
    """Crop to the record's grid, then place input patch perm[i] at cell i."""
    return _move_blocks(crop_to_grid(arr, record), record, record.permutation)


def unshuffle_patches(arr, record: ShuffleRecord) -> np.ndarray:
    arr = np.asarray(arr)
    top, left, h, w = record.crop
    if arr.shape[:2] != (h, w):
        raise DimensionMismatch(f"input is {arr.shape[0]}x{arr.shape[1]}, record's crop is {h}x{w}")
    return _move_blocks(arr, record, np.argsort(record.permutation))


def shuffle_pair(pair: SamplePair, record: ShuffleRecord, greyscale: bool = True) -> tuple[RasterImage, DepthMap]:
    """Shuffle image and depth with one record so patches stay paired."""
    img = to_greyscale(pair.rgb) if greyscale else pair.rgb
    shuffled = RasterImage(shuffle_patches(img.data, record), img.colour_model)
    depth = DepthMap(shuffle_patches(pair.depth.values, record), pair.depth.convention)
    return shuffled, depth


def unshuffle_pair(img: RasterImage, depth: DepthMap, record: ShuffleRecord) -> tuple[RasterImage, DepthMap]:
    return (
        RasterImage(unshuffle_patches(img.data, record), img.colour_model),
        DepthMap(unshuffle_patches(depth.values, record), depth.convention),
    )
