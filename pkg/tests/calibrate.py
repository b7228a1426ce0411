"""Recompute the empirically derived bounds frozen into the test suite.

    python tests/calibrate.py

Not collected by pytest.  Each number printed here appears as a constant
in the corresponding test module.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conftest import motorcycle_crop  # noqa: E402
from oracles import direct_scramble  # noqa: E402

from depthcues.analysis import noise_experiment  # noqa: E402
from depthcues.spectral import make_record, phase_scramble, phase_unscramble  # noqa: E402


def clamped_roundtrip_error(n=100, size=32):
    """Max |x - unscramble(round(clamp(scramble(x))))| over random 8-bit planes."""
    worst = 0.0
    for k in range(n):
        rng = np.random.default_rng(10_000 + k)
        x = rng.integers(0, 256, size=(size, size)).astype(np.float64)
        rec = make_record(k, size, size)
        s = np.floor(phase_scramble(x, rec) + 0.5)
        back = phase_unscramble(s, rec)
        worst = max(worst, float(np.abs(back - x).max()))
    return worst


def ramp_reference():
    ramp = np.arange(16, dtype=np.float64).reshape(4, 4) * 10.0
    rec = make_record(7, 4, 4)
    return direct_scramble(ramp, rec.phase_field).real


def noise_envelope(trials=100):
    pair = motorcycle_crop()
    rec = make_record(2024, pair.rgb.height, pair.rgb.width)
    rmses = [noise_experiment(pair, rec, 25.0, "WHOLE", seed=s).rmse for s in range(trials)]
    zero = noise_experiment(pair, rec, 0.0, "WHOLE", seed=0).rmse
    return np.percentile(rmses, [1, 99]), min(rmses), max(rmses), zero


if __name__ == "__main__":
    print("clamped 8-bit round-trip max error (0-255 units):", clamped_roundtrip_error())
    np.set_printoptions(precision=12, suppress=False)
    print("4x4 ramp, seed 7, direct-DFT scramble:\n", repr(ramp_reference()))
    (p1, p99), lo, hi, zero = noise_envelope()
    print(f"noise sigma 25 WHOLE rmse: p1={p1:.4f} p99={p99:.4f} min={lo:.4f} max={hi:.4f}; sigma 0 rmse={zero:.4f}")
