import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from depthcues.imgcore import DepthMap, RasterImage, SamplePair  # noqa: E402


def _motorcycle():
    from skimage import data

    left, _, disparity = data.stereo_motorcycle()
    # disparity is inversely proportional to depth; infinite disparity marks holes
    finite = np.isfinite(disparity) & (disparity > 0)
    dmin = disparity[finite].min()
    depth = np.zeros(disparity.shape)
    depth[finite] = dmin / disparity[finite]
    return left, np.floor(depth * 255 + 0.5)


def motorcycle_crop(height=480, width=640, top=None, left=None, pair_id="motorcycle"):
    rgb, depth = _motorcycle()
    h, w = depth.shape
    top = (h - height) // 2 if top is None else top
    left = (w - width) // 2 if left is None else left
    region = (slice(top, top + height), slice(left, left + width))
    return SamplePair(pair_id, RasterImage(rgb[region], "RGB"), DepthMap(depth[region], "U8_0_255"))


def real_pairs(n=20, seed=0):
    """Crops of a real stereo photograph with disparity-derived depth, varied sizes."""
    rgb, depth = _motorcycle()
    h, w = depth.shape
    rng = np.random.default_rng(seed)
    pairs = []
    for k in range(n):
        ch = int(rng.integers(48, 200))
        cw = int(rng.integers(48, 260))
        top = int(rng.integers(0, h - ch))
        left = int(rng.integers(0, w - cw))
        region = (slice(top, top + ch), slice(left, left + cw))
        pairs.append(SamplePair(f"moto_{k:02d}", RasterImage(rgb[region], "RGB"), DepthMap(depth[region], "U8_0_255")))
    return pairs


@pytest.fixture(scope="session")
def real_pair_set():
    return real_pairs()


@pytest.fixture(scope="session")
def natural_pair():
    return motorcycle_crop()
