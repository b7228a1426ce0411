import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from depthcues.errors import DecodeError, DimensionMismatch, EmptyDataset, InvalidParams, WrongChannelCount
from depthcues.imgcore import (
    DatasetManifest,
    DepthMap,
    ManifestEntry,
    RasterImage,
    load_pair,
    save_depth,
    split_dataset,
    to_greyscale,
)


def _write_png(path, arr, mode=None):
    if mode == "I;16":
        Image.fromarray(arr.astype(np.uint16)).save(path)
    else:
        Image.fromarray(arr).save(path)


def _manifest(n, fraction=0.1, seed=7):
    entries = [ManifestEntry(f"img{i:04d}", f"rgb/{i}.png", f"depth/{i}.png") for i in range(n)]
    return DatasetManifest(".", entries, seed, fraction)


def test_load_pair_matching_dims(tmp_path):
    _write_png(tmp_path / "rgb.png", np.zeros((480, 640, 3), np.uint8))
    _write_png(tmp_path / "d.png", np.full((480, 640), 128, np.uint8))
    pair = load_pair(tmp_path / "rgb.png", tmp_path / "d.png")
    assert (pair.rgb.height, pair.rgb.width, pair.rgb.channels) == (480, 640, 3)
    assert pair.depth.convention == "U8_0_255"
    assert pair.depth.values.shape == (480, 640)


def test_load_pair_dimension_mismatch(tmp_path):
    _write_png(tmp_path / "rgb.png", np.zeros((480, 640, 3), np.uint8))
    _write_png(tmp_path / "d.png", np.zeros((240, 320), np.uint8))
    with pytest.raises(DimensionMismatch):
        load_pair(tmp_path / "rgb.png", tmp_path / "d.png")


def test_sixteen_bit_depth_scales_to_unit(tmp_path):
    depth = np.zeros((8, 8), np.uint16)
    depth[0, 0] = 65535
    depth[1, 1] = 32768
    _write_png(tmp_path / "rgb.png", np.zeros((8, 8, 3), np.uint8))
    _write_png(tmp_path / "d.png", depth, mode="I;16")
    pair = load_pair(tmp_path / "rgb.png", tmp_path / "d.png")
    assert pair.depth.convention == "UNIT_REAL"
    assert pair.depth.values.max() == 1.0
    assert pair.depth.values[1, 1] == pytest.approx(32768 / 65535)


def test_corrupt_file_raises_decode_error(tmp_path):
    (tmp_path / "rgb.png").write_bytes(b"not a png")
    _write_png(tmp_path / "d.png", np.zeros((4, 4), np.uint8))
    with pytest.raises(DecodeError):
        load_pair(tmp_path / "rgb.png", tmp_path / "d.png")


def test_sixteen_bit_depth_save_load_is_lossless(tmp_path):
    from depthcues.imgcore import load_depth

    values = np.random.default_rng(0).integers(0, 65536, size=(5, 7)) / 65535.0
    save_depth(DepthMap(values, "UNIT_REAL"), tmp_path / "d.png")
    assert np.array_equal(load_depth(tmp_path / "d.png").values, values)


def test_split_ten_entries():
    train, test = split_dataset(_manifest(10))
    assert len(train) == 9 and len(test) == 1
    assert not set(train) & set(test)


def test_split_is_deterministic():
    assert split_dataset(_manifest(10)) == split_dataset(_manifest(10))


def test_split_thousand_entries_ten_percent():
    train, test = split_dataset(_manifest(1000))
    assert len(test) == 100
    assert len(train) == 900


def test_split_needs_two_entries():
    with pytest.raises(EmptyDataset):
        split_dataset(_manifest(1))


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.2])
def test_split_rejects_bad_fraction(fraction):
    with pytest.raises(InvalidParams):
        split_dataset(_manifest(10, fraction))


def test_split_by_scene_keeps_scenes_together():
    entries = [ManifestEntry(f"scene{s}/f{k}", "a", "b") for s in range(10) for k in range(5)]
    manifest = DatasetManifest(".", entries, 3, 0.2)
    train, test = split_dataset(manifest, by_scene=True)
    scenes_test = {i.split("/")[0] for i in test}
    scenes_train = {i.split("/")[0] for i in train}
    assert len(scenes_test) == 2
    assert not scenes_test & scenes_train


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 300), fraction=st.floats(0.01, 0.99), seed=st.integers(0, 2**31))
def test_split_is_a_partition(n, fraction, seed):
    train, test = split_dataset(_manifest(n, fraction, seed))
    ids = [e.id for e in _manifest(n).entries]
    assert sorted(train + test) == sorted(ids)
    assert not set(train) & set(test)
    assert len(test) == round(fraction * n)


def test_manifest_json_round_trip(tmp_path):
    m = _manifest(3)
    m.root = tmp_path
    m.to_json(tmp_path / "m.json")
    doc = json.loads((tmp_path / "m.json").read_text())
    assert set(doc) == {"root", "entries", "split_seed", "test_fraction"}
    again = DatasetManifest.from_json(tmp_path / "m.json")
    assert [e.id for e in again.entries] == [e.id for e in m.entries]
    assert again.split_seed == 7 and again.test_fraction == 0.1


def test_manifest_rejects_duplicate_ids():
    entries = [ManifestEntry("a", "x", "y"), ManifestEntry("a", "z", "w")]
    with pytest.raises(InvalidParams):
        DatasetManifest(".", entries)


def test_manifest_missing_file_detected(tmp_path):
    m = _manifest(2)
    m.root = tmp_path
    with pytest.raises(DecodeError):
        m.check_files()


def _solid(rgb):
    return RasterImage(np.broadcast_to(np.array(rgb, np.uint8), (4, 5, 3)).copy(), "RGB")


@pytest.mark.parametrize("rgb, grey", [((255, 255, 255), 255), ((255, 0, 0), 76), ((0, 0, 0), 0)])
def test_greyscale_examples(rgb, grey):
    out = to_greyscale(_solid(rgb))
    assert out.channels == 1 and out.colour_model == "GREY"
    assert np.all(out.data == grey)


def test_greyscale_red_matches_direct_evaluation():
    # 0.299 * 255 = 76.245, rounded half away from zero
    assert int(to_greyscale(_solid((255, 0, 0))).data[0, 0, 0]) == int(np.floor(0.299 * 255 + 0.5))


def test_greyscale_needs_three_channels():
    with pytest.raises(WrongChannelCount):
        to_greyscale(RasterImage(np.zeros((4, 4), np.uint8), "GREY"))


@given(st.integers(0, 255))
def test_greyscale_of_equal_channels_is_exact(v):
    assert np.all(to_greyscale(_solid((v, v, v))).data == v)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_depth_convention_round_trip(seed):
    values = np.random.default_rng(seed).random((6, 9))
    back = DepthMap(values, "UNIT_REAL").to_u8().to_unit().values
    assert np.abs(back - values).max() <= 1 / 255


def test_raster_rejects_out_of_range_reals():
    with pytest.raises(InvalidParams):
        RasterImage(np.full((2, 2, 3), 1.5), "RGB")


def test_raster_samples_length():
    img = RasterImage(np.zeros((3, 7, 3), np.uint8), "RGB")
    assert img.data.size == img.width * img.height * img.channels
