"""Raster containers, RGB+depth ingestion and train/test splitting."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DecodeError,
    DimensionMismatch,
    EmptyDataset,
    InvalidParams,
    WrongChannelCount,
)

COLOUR_MODELS = ("RGB", "GREY", "HSV_PLANE", "EDGE")
U8_0_255 = "U8_0_255"
UNIT_REAL = "UNIT_REAL"


@dataclass(frozen=True)
class RasterImage:
    """H x W x C samples, either uint8 in [0, 255] or float in [0, 1]."""

    data: np.ndarray
    colour_model: str = "RGB"

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise WrongChannelCount(f"expected HxWx1 or HxWx3 samples, got shape {data.shape}")
        if self.colour_model not in COLOUR_MODELS:
            raise InvalidParams(f"unknown colour model {self.colour_model!r}")
        if self.colour_model == "RGB" and data.shape[2] != 3:
            raise WrongChannelCount("RGB image needs 3 channels")
        if self.colour_model != "RGB" and data.shape[2] != 1:
            raise WrongChannelCount(f"{self.colour_model} image needs 1 channel")
        if data.dtype == np.uint8:
            pass
        elif np.issubdtype(data.dtype, np.floating):
            if data.size and (data.min() < 0.0 or data.max() > 1.0):
                raise InvalidParams("real-valued samples must lie in [0, 1]")
            data = data.astype(np.float64, copy=False)
        else:
            raise InvalidParams(f"unsupported sample dtype {data.dtype}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def is_integer(self) -> bool:
        return self.data.dtype == np.uint8

    def plane(self, c: int = 0) -> np.ndarray:
        return self.data[:, :, c]

    def as_u8(self) -> np.ndarray:
        """Samples on the 8-bit scale (quantizing real-valued images)."""
        if self.is_integer:
            return np.array(self.data)
        return np.floor(self.data * 255.0 + 0.5).astype(np.uint8)


@dataclass(frozen=True)
class DepthMap:
    values: np.ndarray
    convention: str = UNIT_REAL

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionMismatch(f"depth map must be 2-D, got shape {values.shape}")
        hi = {U8_0_255: 255.0, UNIT_REAL: 1.0}.get(self.convention)
        if hi is None:
            raise InvalidParams(f"unknown depth convention {self.convention!r}")
        if values.size and (values.min() < 0.0 or values.max() > hi):
            raise InvalidParams(f"{self.convention} depth outside [0, {hi:g}]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def max_value(self) -> float:
        return 255.0 if self.convention == U8_0_255 else 1.0

    def to_unit(self) -> DepthMap:
        if self.convention == UNIT_REAL:
            return self
        return DepthMap(self.values / 255.0, UNIT_REAL)

    def to_u8(self) -> DepthMap:
        if self.convention == U8_0_255:
            return self
        return DepthMap(np.floor(self.values * 255.0 + 0.5), U8_0_255)

    def on_255_scale(self) -> np.ndarray:
        """Depth expressed on the 0-255 axis used by the saturation analyses."""
        return self.values * (255.0 / self.max_value)


@dataclass(frozen=True)
class SamplePair:
    id: str
    rgb: RasterImage
    depth: DepthMap

    def __post_init__(self):
        if (self.rgb.height, self.rgb.width) != (self.depth.height, self.depth.width):
            raise DimensionMismatch(
                f"{self.id}: rgb is {self.rgb.height}x{self.rgb.width}, "
                f"depth is {self.depth.height}x{self.depth.width}"
            )


@dataclass
class ManifestEntry:
    id: str
    rgb: str
    depth: str


@dataclass
class DatasetManifest:
    root: Path
    entries: list[ManifestEntry] = field(default_factory=list)
    split_seed: int = 0
    test_fraction: float = 0.1

    def __post_init__(self):
        self.root = Path(self.root)
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise InvalidParams(f"duplicate entry ids: {dupes}")

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> DatasetManifest:
        path = Path(path)
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DecodeError(f"cannot read manifest {path}: {exc}") from exc
        root = Path(raw.get("root", "."))
        if not root.is_absolute():
            root = path.parent / root
        entries = [ManifestEntry(str(e["id"]), e["rgb"], e["depth"]) for e in raw["entries"]]
        return cls(root, entries, int(raw.get("split_seed", 0)), float(raw.get("test_fraction", 0.1)))

    def to_json(self, path: str | os.PathLike) -> None:
        doc = {
            "root": str(self.root),
            "entries": [{"id": e.id, "rgb": e.rgb, "depth": e.depth} for e in self.entries],
            "split_seed": self.split_seed,
            "test_fraction": self.test_fraction,
        }
        write_bytes_atomic(path, (json.dumps(doc, indent=2) + "\n").encode())

    def resolve(self, entry: ManifestEntry) -> tuple[Path, Path]:
        return self.root / entry.rgb, self.root / entry.depth

    def check_files(self) -> None:
        for entry in self.entries:
            for p in self.resolve(entry):
                if not p.is_file():
                    raise DecodeError(f"{entry.id}: missing file {p}")

    def load(self, entry: ManifestEntry) -> SamplePair:
        rgb_path, depth_path = self.resolve(entry)
        return load_pair(rgb_path, depth_path, pair_id=entry.id)

    def iter_pairs(self) -> Iterable[SamplePair]:
        for entry in self.entries:
            yield self.load(entry)


def _open(path) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
    except (FileNotFoundError, UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    return img


def load_rgb(path) -> RasterImage:
    img = _open(path)
    if img.mode != "RGB":
        img = img.convert("RGB")
    return RasterImage(np.asarray(img, dtype=np.uint8), "RGB")


def load_depth(path) -> DepthMap:
    """8-bit files keep the 0-255 convention; 16-bit files are scaled to [0, 1]."""
    img = _open(path)
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise DecodeError(f"{path}: depth must be single-channel, got mode {img.mode}")
    if arr.dtype == np.uint8:
        return DepthMap(arr.astype(np.float64), U8_0_255)
    if arr.dtype in (np.uint16, np.int32, np.dtype(">u2"), np.dtype("<u2")):
        return DepthMap(arr.astype(np.float64) / 65535.0, UNIT_REAL)
    raise DecodeError(f"{path}: unsupported depth sample type {arr.dtype}")


def load_pair(rgb_path, depth_path, pair_id: str | None = None) -> SamplePair:
    rgb = load_rgb(rgb_path)
    depth = load_depth(depth_path)
    return SamplePair(pair_id or Path(rgb_path).stem, rgb, depth)


def write_bytes_atomic(path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _png_bytes(arr: np.ndarray) -> bytes:
    import io

    if arr.dtype == np.uint16:
        img = Image.fromarray(arr.astype(np.uint16))
    else:
        img = Image.fromarray(arr)
    buf = io.BytesIO()
    # fixed compression settings so reruns are byte-identical
    img.save(buf, format="PNG", compress_level=6, optimize=False)
    return buf.getvalue()


def save_image(img: RasterImage, path) -> None:
    arr = img.as_u8()
    if arr.shape[2] == 1:
        arr = arr[:, :, 0]
    write_bytes_atomic(path, _png_bytes(arr))


def save_depth(depth: DepthMap, path) -> None:
    """U8_0_255 maps go to 8-bit PNG, UNIT_REAL maps to 16-bit PNG."""
    if depth.convention == U8_0_255:
        arr = np.floor(depth.values + 0.5).astype(np.uint8)
    else:
        arr = np.floor(depth.values * 65535.0 + 0.5).astype(np.uint16)
    write_bytes_atomic(path, _png_bytes(arr))


def split_dataset(manifest: DatasetManifest, by_scene: bool = False) -> tuple[list[str], list[str]]:
    """Seeded partition of entry ids into (train, test).

    With ``by_scene`` the ids are grouped by the prefix before the first
    ``/`` and whole scenes are assigned to one side; the test side then
    holds round(test_fraction * n_scenes) scenes.
    """
    if not 0.0 < manifest.test_fraction < 1.0:
        raise InvalidParams(f"test_fraction must be in (0, 1), got {manifest.test_fraction}")
    ids = [e.id for e in manifest.entries]
    if len(ids) < 2:
        raise EmptyDataset(f"need at least 2 entries to split, got {len(ids)}")
    rng = np.random.default_rng(manifest.split_seed)
    if by_scene:
        scenes = sorted({i.split("/", 1)[0] for i in ids})
        n_test = int(round(manifest.test_fraction * len(scenes)))
        chosen = {scenes[k] for k in rng.permutation(len(scenes))[:n_test]}
        test = [i for i in ids if i.split("/", 1)[0] in chosen]
    else:
        n_test = int(round(manifest.test_fraction * len(ids)))
        picked = set(rng.permutation(len(ids))[:n_test].tolist())
        test = [i for k, i in enumerate(ids) if k in picked]
    test_set = set(test)
    train = [i for i in ids if i not in test_set]
    return train, test


def to_greyscale(img: RasterImage) -> RasterImage:
    """BT.601 luma. 8-bit input is rounded half away from zero in integer arithmetic."""
    if img.channels != 3:
        raise WrongChannelCount(f"greyscale conversion needs 3 channels, got {img.channels}")
    if img.is_integer:
        rgb = img.data.astype(np.int64)
        luma = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
        return RasterImage(luma.astype(np.uint8), "GREY")
    rgb = img.data
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return RasterImage(np.clip(luma, 0.0, 1.0), "GREY")
