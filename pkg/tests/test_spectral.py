import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import direct_dft2, direct_scramble

from depthcues.errors import DimensionMismatch, VersionMismatch
from depthcues.imgcore import DepthMap, RasterImage, SamplePair
from depthcues.spectral import (
    ScrambleRecord,
    identity_record,
    make_record,
    phase_scramble,
    phase_unscramble,
    rotate_phase,
    scramble_pair,
    unscramble_depth,
    unscramble_image,
)

# direct-DFT scramble of 10 * arange(16).reshape(4, 4) with seed 7 (tests/calibrate.py)
RAMP_SEED7 = np.array([
    [56.272277656602, 52.121661638578, 27.988011497498, 52.138627515522],
    [48.123695261081, 43.973079243057, 19.839429101978, 43.990045120001],
    [72.011988502502, 67.861372484478, 43.727722343398, 67.878338361422],
    [160.160570898022, 156.009954879999, 131.876304738919, 156.026920756943],
])
# max |x - unscramble(round(clamp(scramble(x))))| over 100 random 32x32 planes (tests/calibrate.py)
CLAMPED_ROUNDTRIP_MAX = 47.93280364825267


def _antisymmetric(field):
    h, w = field.shape
    neg = field[(-np.arange(h)) % h][:, (-np.arange(w)) % w]
    return np.mod(field + neg, 2 * np.pi)


@pytest.mark.parametrize("h, w", [(4, 4), (5, 7), (6, 3), (1, 8), (8, 1), (1, 1), (480, 640)])
def test_phase_field_invariants(h, w):
    field = make_record(0, h, w).phase_field
    assert field.shape == (h, w)
    assert field[0, 0] == 0.0
    assert np.all((field >= 0) & (field < 2 * np.pi))
    s = _antisymmetric(field)
    # sums are 0 or 2*pi up to rounding
    assert np.all(np.minimum(s, 2 * np.pi - s) < 1e-12)
    for u in {0, h // 2} if h % 2 == 0 else {0}:
        for v in {0, w // 2} if w % 2 == 0 else {0}:
            assert field[u, v] == 0.0


def test_phase_field_is_deterministic():
    a = make_record(0, 4, 4).phase_field
    b = make_record(0, 4, 4).phase_field
    assert np.array_equal(a, b)


def test_different_seeds_differ():
    assert not np.array_equal(make_record(1, 4, 4).phase_field, make_record(2, 4, 4).phase_field)


def test_regenerated_field_is_bit_exact_from_sidecar():
    rec = make_record(123, 12, 10)
    again = ScrambleRecord.from_sidecar(json.loads(rec.dumps()))
    assert again == rec
    assert np.array_equal(again.phase_field, rec.phase_field)


def test_sidecar_version_checked():
    doc = make_record(1, 4, 4).to_sidecar()
    doc["version"] = 99
    with pytest.raises(VersionMismatch):
        ScrambleRecord.from_sidecar(doc)


def test_sidecar_has_required_fields():
    assert {"seed", "height", "width", "version"} <= set(make_record(5, 3, 4).to_sidecar())


@pytest.mark.parametrize("h", [4, 5, 8, 16])
@pytest.mark.parametrize("w", [4, 6, 16])
def test_fft_matches_direct_dft(h, w):
    x = np.random.default_rng(h * 100 + w).normal(size=(h, w))
    ref = direct_dft2(x)
    got = np.fft.fft2(x)
    assert np.abs(got - ref).max() <= 1e-9 * np.abs(ref).max()
    rec = make_record(h + w, h, w)
    ref_s = direct_scramble(x, rec.phase_field)
    got_s = rotate_phase(x, rec.phase_field)
    assert np.abs(got_s - ref_s).max() <= 1e-9 * np.abs(ref_s).max()


def test_identity_scramble():
    x = np.random.default_rng(0).uniform(0, 255, size=(9, 12))
    rec = identity_record(9, 12)
    assert np.abs(phase_scramble(x, rec, None) - x).max() < 1e-6
    assert np.abs(phase_unscramble(x, rec, None) - x).max() < 1e-6


def test_constant_plane_is_preserved():
    x = np.full((10, 14), 87.5)
    out = phase_scramble(x, make_record(3, 10, 14))
    assert np.allclose(out, 87.5, atol=1e-9)


def test_ramp_matches_frozen_oracle():
    ramp = np.arange(16, dtype=np.float64).reshape(4, 4) * 10.0
    got = phase_scramble(ramp, make_record(7, 4, 4), None)
    assert np.allclose(got, RAMP_SEED7, rtol=0, atol=1e-9)


def test_unscramble_inverts_unclamped():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 255, size=(32, 32))
    rec = make_record(9, 32, 32)
    back = phase_unscramble(phase_scramble(x, rec, None), rec, None)
    assert np.abs(back - x).max() < 1e-3


def test_clamped_round_trip_within_measured_tolerance():
    worst = 0.0
    for k in range(100):
        x = np.random.default_rng(10_000 + k).integers(0, 256, size=(32, 32)).astype(np.float64)
        rec = make_record(k, 32, 32)
        s = np.floor(phase_scramble(x, rec) + 0.5)
        worst = max(worst, float(np.abs(phase_unscramble(s, rec) - x).max()))
    assert worst == pytest.approx(CLAMPED_ROUNDTRIP_MAX, abs=1e-9)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        phase_scramble(np.zeros((4, 5)), make_record(0, 5, 4))


planes = st.tuples(st.integers(1, 24), st.integers(1, 24), st.integers(0, 2**32 - 1))


@settings(max_examples=100, deadline=None)
@given(planes)
def test_magnitude_parseval_realness(case):
    h, w, seed = case
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 255, size=(h, w))
    rec = make_record(seed, h, w)
    z = rotate_phase(x, rec.phase_field)
    assert np.abs(z.imag).max() < 1e-6 * max(np.abs(z).max(), 1e-300)
    y = z.real
    fx, fy = np.abs(np.fft.fft2(x)), np.abs(np.fft.fft2(y))
    assert np.all(np.abs(fx - fy) <= 1e-6 * np.maximum(fx, 1e-6 * fx.max()))
    assert np.sum(y ** 2) == pytest.approx(np.sum(x ** 2), rel=1e-6)


def _pair(h, w, seed=0, equal_channels=False):
    rng = np.random.default_rng(seed)
    if equal_channels:
        g = rng.integers(60, 200, size=(h, w))
        rgb = np.stack([g, g, g], axis=-1).astype(np.uint8)
    else:
        rgb = rng.integers(60, 200, size=(h, w, 3)).astype(np.uint8)
    depth = DepthMap(rng.integers(1, 256, size=(h, w)).astype(np.float64), "U8_0_255")
    return SamplePair("p", RasterImage(rgb, "RGB"), depth)


def test_rgb_mode_equal_channels_stay_equal():
    pair = _pair(16, 20, equal_channels=True)
    img, _ = scramble_pair(pair, make_record(4, 16, 20), "RGB")
    assert np.array_equal(img.data[..., 0], img.data[..., 1])
    assert np.array_equal(img.data[..., 1], img.data[..., 2])


def test_greyscale_mode_has_one_channel():
    img, depth = scramble_pair(_pair(16, 20), make_record(4, 16, 20), "GREYSCALE")
    assert img.channels == 1
    assert depth.values.shape == (16, 20)


def test_saturation_mode_is_unit_plane():
    img, _ = scramble_pair(_pair(16, 20), make_record(4, 16, 20), "SATURATION")
    assert img.channels == 1 and not img.is_integer
    assert img.data.min() >= 0 and img.data.max() <= 1


def test_depth_uses_the_same_record():
    pair = _pair(12, 12)
    rec = make_record(8, 12, 12)
    _, depth = scramble_pair(pair, rec, "RGB")
    expected = phase_scramble(pair.depth.values, rec, (0, 255))
    assert np.array_equal(depth.values, expected)


def test_rgb_round_trip_on_real_pairs(real_pair_set):
    """Restoration error is bounded by the clamp/rounding loss, since phase rotation is an isometry."""
    for pair in real_pair_set:
        rec = make_record(int(pair.id[-2:]), pair.rgb.height, pair.rgb.width)
        img, depth = scramble_pair(pair, rec, "RGB")
        back = unscramble_image(img, rec)
        for c in range(3):
            x = pair.rgb.plane(c).astype(float)
            loss = img.plane(c).astype(float) - phase_scramble(x, rec, None)
            err = back.plane(c).astype(float) - x
            assert np.sqrt(np.mean(err ** 2)) <= np.sqrt(np.mean(loss ** 2)) + 0.5 + 1e-9
        dback = unscramble_depth(depth, rec)
        assert dback.values.shape == pair.depth.values.shape


def test_scramble_pair_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        scramble_pair(_pair(8, 8), make_record(0, 8, 9))
