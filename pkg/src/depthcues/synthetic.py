"""Synthetic RGB+depth scenes for desk-scale runs and tests."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imgcore import DatasetManifest, DepthMap, ManifestEntry, RasterImage, SamplePair, save_depth, save_image

FACE_COLOURS = {
    "back": (182, 160, 120),
    "floor": (120, 84, 60),
    "ceiling": (225, 225, 215),
    "left": (150, 170, 190),
    "right": (170, 150, 185),
}


def room_box(height: int = 480, width: int = 640, seed: int = 0, n_boxes: int = 2) -> SamplePair:
    """One-point-perspective room with a few box-shaped objects.

    Depth runs from the camera (near 0.15 at the frame border) to the back
    wall (1.0); boxes sit on the floor nearer to the camera.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    # normalised coordinates in [-1, 1] around a jittered vanishing point
    cy = height / 2 + rng.uniform(-0.05, 0.05) * height
    cx = width / 2 + rng.uniform(-0.08, 0.08) * width
    ny = (yy - cy) / (height / 2)
    nx = (xx - cx) / (width / 2)
    back = rng.uniform(0.3, 0.45)
    # distance along the viewing axis for each bounding plane
    t = np.maximum(np.abs(nx), np.abs(ny))
    depth = np.where(t <= back, 1.0, np.clip(back / np.maximum(t, 1e-9), 0.15, 1.0))
    face = np.full((height, width), "back", dtype=object)
    outer = t > back
    face[outer & (ny >= np.abs(nx))] = "floor"
    face[outer & (-ny >= np.abs(nx))] = "ceiling"
    face[outer & (nx > np.abs(ny))] = "right"
    face[outer & (-nx > np.abs(ny))] = "left"

    rgb = np.zeros((height, width, 3))
    for name, colour in FACE_COLOURS.items():
        jitter = rng.integers(-20, 21, size=3)
        rgb[face == name] = np.clip(np.asarray(colour) + jitter, 0, 255)
    # shading darkens with distance, plus mild sensor noise
    rgb *= (0.55 + 0.45 * (1.0 - depth))[:, :, None]
    rgb += rng.normal(0, 3.0, size=rgb.shape)

    for _ in range(n_boxes):
        bh = int(rng.uniform(0.15, 0.3) * height)
        bw = int(rng.uniform(0.12, 0.25) * width)
        top = int(rng.uniform(0.55, 0.95) * height) - bh
        left = int(rng.uniform(0.05, 0.95) * width - bw / 2)
        top, left = max(top, 0), min(max(left, 0), width - bw)
        box_depth = rng.uniform(0.2, 0.45)
        region = (slice(top, top + bh), slice(left, left + bw))
        rgb[region] = rng.integers(30, 230, size=3) + rng.normal(0, 3.0, size=(bh, bw, 3))
        depth[region] = np.minimum(depth[region], box_depth)

    rgb8 = np.clip(np.floor(rgb + 0.5), 0, 255).astype(np.uint8)
    depth16 = np.floor(depth * 65535 + 0.5) / 65535
    return SamplePair(f"room_{seed:04d}", RasterImage(rgb8, "RGB"), DepthMap(depth16, "UNIT_REAL"))


def haze_gradient(height: int = 120, width: int = 160, base=(40, 120, 200), haze=235.0) -> RasterImage:
    """Colour that fades into grey haze towards the top, so saturation falls with height."""
    a = 1.0 - (np.arange(height, dtype=np.float64) + 0.5) / height  # 1 at top, 0 at bottom
    colour = np.asarray(base, dtype=np.float64)
    rows = (1.0 - a)[:, None] * colour[None, :] + a[:, None] * haze
    img = np.repeat(rows[:, None, :], width, axis=1)
    return RasterImage(np.floor(img + 0.5).astype(np.uint8), "RGB")


def saturation_law_pair(height: int = 64, width: int = 64, seed: int = 0, pair_id: str = "sat_law") -> SamplePair:
    """Pair whose saturation equals depth/255 exactly (R=255, G=B=255-d)."""
    rng = np.random.default_rng(seed)
    d = rng.integers(0, 256, size=(height, width))
    rgb = np.stack([np.full_like(d, 255), 255 - d, 255 - d], axis=-1).astype(np.uint8)
    return SamplePair(pair_id, RasterImage(rgb, "RGB"), DepthMap(d.astype(np.float64), "U8_0_255"))


def random_pair(height: int, width: int, seed: int, pair_id: str | None = None, depth_bits: int = 8) -> SamplePair:
    rng = np.random.default_rng(seed)
    rgb = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    if depth_bits == 8:
        depth = DepthMap(rng.integers(0, 256, size=(height, width)).astype(np.float64), "U8_0_255")
    else:
        depth = DepthMap(rng.integers(0, 65536, size=(height, width)) / 65535.0, "UNIT_REAL")
    return SamplePair(pair_id or f"rand_{seed:04d}", RasterImage(rgb, "RGB"), depth)


def write_dataset(pairs, root, split_seed: int = 0, test_fraction: float = 0.1) -> Path:
    """Write pairs as PNG files plus a manifest.json; returns the manifest path."""
    root = Path(root)
    entries = []
    for pair in pairs:
        rgb_rel = f"rgb/{pair.id}.png"
        depth_rel = f"depth/{pair.id}.png"
        save_image(pair.rgb, root / rgb_rel)
        save_depth(pair.depth, root / depth_rel)
        entries.append(ManifestEntry(pair.id, rgb_rel, depth_rel))
    manifest = DatasetManifest(Path("."), entries, split_seed, test_fraction)
    path = root / "manifest.json"
    manifest.to_json(path)
    return path


def desk_dataset(root, n_pairs: int = 50, height: int = 480, width: int = 640, seed: int = 0) -> Path:
    pairs = [room_box(height, width, seed=seed + k) for k in range(n_pairs)]
    return write_dataset(pairs, root, split_seed=seed)
