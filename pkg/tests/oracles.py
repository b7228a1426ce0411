"""Independent reference implementations used only by the tests.

Nothing here imports the code paths it checks.
"""

import cmath
import math

import numpy as np


def direct_dft2(x):
    """O(N^2 M^2) textbook 2-D DFT (complex128)."""
    x = np.asarray(x, dtype=np.complex128)
    h, w = x.shape
    out = np.zeros((h, w), dtype=np.complex128)
    for u in range(h):
        for v in range(w):
            acc = 0j
            for m in range(h):
                for n in range(w):
                    acc += x[m, n] * cmath.exp(-2j * math.pi * (u * m / h + v * n / w))
            out[u, v] = acc
    return out


def direct_idft2(X):
    X = np.asarray(X, dtype=np.complex128)
    h, w = X.shape
    return np.conj(direct_dft2(np.conj(X))) / (h * w)


def direct_scramble(plane, phase):
    """Phase scramble through the textbook DFT, unclamped, complex result."""
    return direct_idft2(direct_dft2(plane) * np.exp(1j * np.asarray(phase)))


def naive_metrics(pred, gt):
    """Per-pixel loop over flattened arrays (all pixels valid)."""
    n = c1 = c2 = c3 = 0
    rel = sq = lg = 0.0
    for p, g in zip(np.ravel(pred).tolist(), np.ravel(gt).tolist()):
        r = max(p / g, g / p)
        n += 1
        c1 += r < 1.25
        c2 += r < 1.25 * 1.25
        c3 += r < 1.25 * 1.25 * 1.25
        rel += abs(p - g) / g
        sq += (p - g) ** 2
        lg += abs(math.log10(p) - math.log10(g))
    return {
        "a1": 100.0 * c1 / n, "a2": 100.0 * c2 / n, "a3": 100.0 * c3 / n,
        "rel": rel / n, "rmse": math.sqrt(sq / n), "log10": lg / n,
    }


def brute_heatmap(pairs, depth_bins, value_bins):
    """Count pixels by explicit edge comparison, one pixel at a time.

    Depth intervals: [255 k / n, 255 (k+1) / n), last one closed.
    Value intervals: [k s, (k+1) s) with s = ceil(256 / n), last one open-ended.
    """
    step = -(-256 // value_bins)
    d_edges = [255.0 * k / depth_bins for k in range(depth_bins + 1)]
    counts = np.zeros((depth_bins, value_bins, 3), dtype=np.int64)
    for rgb, depth255 in pairs:
        h, w = depth255.shape
        for i in range(h):
            for j in range(w):
                d = float(depth255[i, j])
                di = depth_bins - 1
                for k in range(depth_bins):
                    if d_edges[k] <= d < d_edges[k + 1]:
                        di = k
                        break
                for c in range(3):
                    v = int(rgb[i, j, c])
                    vi = value_bins - 1
                    for k in range(value_bins - 1):
                        if k * step <= v < (k + 1) * step:
                            vi = k
                            break
                    counts[di, vi, c] += 1
    return counts


def hand_block_swap(img, p, cell_a, cell_b, cols):
    """Swap two p x p grid cells by explicit element copies."""
    out = np.array(img, copy=True)
    ra, ca = divmod(cell_a, cols)
    rb, cb = divmod(cell_b, cols)
    for i in range(p):
        for j in range(p):
            out[ra * p + i, ca * p + j] = img[rb * p + i, cb * p + j]
            out[rb * p + i, cb * p + j] = img[ra * p + i, ca * p + j]
    return out


def hsv_direct(r, g, b):
    """V = max/255 and S = (V - min)/V in plain floats, one pixel."""
    mx = max(r, g, b)
    mn = min(r, g, b)
    v = mx / 255.0
    s = (mx - mn) / mx if mx != 0 else 0.0
    return v, s
