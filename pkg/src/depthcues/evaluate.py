"""Depth accuracy/error metrics and desk-scale baseline predictors."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DimensionMismatch, EmptyInput, EmptyMask, InvalidParams, NonPositiveDepth, NotFitted
from .imgcore import DepthMap, RasterImage, to_greyscale

METRIC_NAMES = ("a1", "a2", "a3", "log10", "rel", "rmse")
AGGREGATIONS = ("IMAGE_MEAN", "PIXEL_POOLED")
# smallest positive 16-bit depth level; predictions never go below it
MIN_PRED = 1.0 / 65535.0


@dataclass
class MetricsReport:
    a1: float
    a2: float
    a3: float
    log10_err: float
    rel: float
    rmse: float
    pixel_count: int
    image_count: int = 1
    # sufficient statistics for exact pixel pooling
    sums: dict = field(default_factory=dict, repr=False)

    def values(self) -> dict:
        return {
            "a1": self.a1, "a2": self.a2, "a3": self.a3,
            "log10": self.log10_err, "rel": self.rel, "rmse": self.rmse,
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("sums")
        return d


@dataclass
class AggregateReport:
    mean: MetricsReport
    std: dict
    mode: str

    def to_dict(self) -> dict:
        return {"mode": self.mode, "metrics": self.mean.to_dict(), "std": dict(self.std)}


def _depth_array(d) -> np.ndarray:
    if isinstance(d, DepthMap):
        return d.to_unit().values
    return np.asarray(d, dtype=np.float64)


def _report_from_sums(sums: dict, image_count: int) -> MetricsReport:
    n = sums["n"]
    return MetricsReport(
        a1=100.0 * sums["c1"] / n,
        a2=100.0 * sums["c2"] / n,
        a3=100.0 * sums["c3"] / n,
        log10_err=sums["log10"] / n,
        rel=sums["rel"] / n,
        rmse=float(np.sqrt(sums["sq"] / n)),
        pixel_count=int(n),
        image_count=image_count,
        sums=sums,
    )


def compute_metrics(pred, gt, mask=None) -> MetricsReport:
    """Six metrics over the masked pixels.

    DepthMap inputs are compared in the UNIT_REAL convention.  The default
    mask keeps pixels with gt > 0.
    """
    p = _depth_array(pred)
    g = _depth_array(gt)
    if p.shape != g.shape:
        raise DimensionMismatch(f"prediction is {p.shape}, ground truth is {g.shape}")
    if mask is None:
        mask = g > 0
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != g.shape:
        raise DimensionMismatch(f"mask is {mask.shape}, depth is {g.shape}")
    if not mask.any():
        raise EmptyMask("no valid pixels to evaluate")
    p, g = p[mask], g[mask]
    if (g <= 0).any() or (p <= 0).any():
        raise NonPositiveDepth("masked predictions and ground truth must be strictly positive")
    ratio = np.maximum(p / g, g / p)
    sums = {
        "n": int(p.size),
        "c1": int((ratio < 1.25).sum()),
        "c2": int((ratio < 1.25 ** 2).sum()),
        "c3": int((ratio < 1.25 ** 3).sum()),
        "rel": float((np.abs(p - g) / g).sum()),
        "sq": float(((p - g) ** 2).sum()),
        "log10": float(np.abs(np.log10(p) - np.log10(g)).sum()),
    }
    return _report_from_sums(sums, 1)


def aggregate_reports(per_image: list[MetricsReport], mode: str = "IMAGE_MEAN") -> AggregateReport:
    """Combine per-image reports.

    IMAGE_MEAN averages the per-image metrics; PIXEL_POOLED recomputes them
    over the union of pixels.  In both modes ``std`` is the population
    standard deviation of the per-image values.
    """
    if not per_image:
        raise EmptyInput("no reports to aggregate")
    mode = mode.upper()
    if mode not in AGGREGATIONS:
        raise InvalidParams(f"aggregation must be one of {AGGREGATIONS}")
    table = np.array([[r.values()[k] for k in METRIC_NAMES] for r in per_image])
    std = dict(zip(METRIC_NAMES, table.std(axis=0, ddof=0).tolist()))
    images = sum(r.image_count for r in per_image)
    if mode == "IMAGE_MEAN":
        m = table.mean(axis=0)
        mean = MetricsReport(*m.tolist(), pixel_count=sum(r.pixel_count for r in per_image), image_count=images)
    else:
        pooled = {}
        for r in per_image:
            if not r.sums:
                raise InvalidParams("PIXEL_POOLED needs reports produced by compute_metrics")
            for k, v in r.sums.items():
                pooled[k] = pooled.get(k, 0) + v
        mean = _report_from_sums(pooled, images)
    return AggregateReport(mean, std, mode)


CSV_COLUMNS = ["feature", *METRIC_NAMES, *(f"{k}_std" for k in METRIC_NAMES), "mode", "pixel_count", "image_count"]


def report_csv_row(feature: str, agg: AggregateReport) -> dict:
    row = {"feature": feature}
    row.update(agg.mean.values())
    row.update({f"{k}_std": v for k, v in agg.std.items()})
    row.update(mode=agg.mode, pixel_count=agg.mean.pixel_count, image_count=agg.mean.image_count)
    return row


def reports_to_csv(rows: list[dict], columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def report_json(agg: AggregateReport, feature: str, per_image: dict[str, MetricsReport] | None = None) -> str:
    doc = {"feature": feature, **agg.to_dict()}
    if per_image is not None:
        doc["per_image"] = {k: v.to_dict() for k, v in sorted(per_image.items())}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# --- baselines --------------------------------------------------------------

def _grey_plane(img) -> np.ndarray:
    if isinstance(img, RasterImage):
        if img.channels == 3:
            img = to_greyscale(img)
        plane = img.plane(0).astype(np.float64)
        return plane / 255.0 if img.is_integer else plane
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr[..., 0] * 0.299 + arr[..., 1] * 0.587 + arr[..., 2] * 0.114
    return arr


def _patch_origins(size: int, p: int) -> list[int]:
    starts = list(range(0, size - p + 1, p))
    if starts[-1] + p < size:
        starts.append(size - p)
    return starts


class GlobalMean:
    name = "GLOBAL_MEAN"

    def __init__(self):
        self.mean_ = None

    def fit(self, images, depths):
        vals = [_depth_array(d)[_depth_array(d) > 0] for d in depths]
        vals = [v for v in vals if v.size]
        if not vals:
            raise EmptyInput("no valid training depth")
        self.mean_ = float(np.concatenate(vals).mean())
        return self

    def predict(self, img) -> DepthMap:
        if self.mean_ is None:
            raise NotFitted("GLOBAL_MEAN has not been fitted")
        plane = _grey_plane(img)
        return DepthMap(np.full(plane.shape, self.mean_), "UNIT_REAL")


class RowPrior:
    """Mean depth per image row, indexed by relative row position."""

    name = "ROW_PRIOR"

    def __init__(self):
        self.profile_ = None

    def fit(self, images, depths):
        arrays = [_depth_array(d) for d in depths]
        if not arrays:
            raise EmptyInput("no training depth maps")
        height = arrays[0].shape[0]
        sums = np.zeros(height)
        counts = np.zeros(height)
        for a in arrays:
            if a.shape[0] != height:
                a = _resample_rows(a, height)
            valid = a > 0
            sums += np.where(valid, a, 0.0).sum(axis=1)
            counts += valid.sum(axis=1)
        self.profile_ = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
        return self

    def predict(self, img) -> DepthMap:
        if self.profile_ is None:
            raise NotFitted("ROW_PRIOR has not been fitted")
        h, w = _grey_plane(img).shape
        rows = self.profile_
        if rows.size != h:
            rows = _resample_rows(rows[:, None], h)[:, 0]
        return DepthMap(np.clip(np.repeat(rows[:, None], w, axis=1), MIN_PRED, 1.0), "UNIT_REAL")


def _resample_rows(a: np.ndarray, height: int) -> np.ndarray:
    src = (np.arange(a.shape[0]) + 0.5) / a.shape[0]
    dst = (np.arange(height) + 0.5) / height
    return np.stack([np.interp(dst, src, a[:, j]) for j in range(a.shape[1])], axis=1)


class PatchKNN:
    """Nearest training patch (L2 on greyscale) donates its mean depth."""

    name = "PATCH_KNN"

    def __init__(self, patch_size: int = 16):
        self.patch_size = patch_size
        self.tree_ = None
        self.depth_means_ = None

    def _patches(self, plane: np.ndarray):
        p = self.patch_size
        h, w = plane.shape
        if p > min(h, w):
            raise InvalidParams(f"patch {p} larger than image {h}x{w}")
        for r in _patch_origins(h, p):
            for c in _patch_origins(w, p):
                yield r, c, plane[r:r + p, c:c + p]

    def fit(self, images, depths):
        feats, means = [], []
        for img, d in zip(images, depths):
            plane = _grey_plane(img)
            dep = _depth_array(d)
            if plane.shape != dep.shape:
                raise DimensionMismatch("training image and depth differ in size")
            p = self.patch_size
            for r, c, patch in self._patches(plane):
                feats.append(patch.ravel())
                means.append(dep[r:r + p, c:c + p].mean())
        if not feats:
            raise EmptyInput("no training patches")
        self.tree_ = cKDTree(np.asarray(feats))
        self.depth_means_ = np.asarray(means)
        return self

    def predict(self, img) -> DepthMap:
        if self.tree_ is None:
            raise NotFitted("PATCH_KNN has not been fitted")
        plane = _grey_plane(img)
        p = self.patch_size
        out = np.zeros(plane.shape)
        cells = list(self._patches(plane))
        _, idx = self.tree_.query(np.asarray([patch.ravel() for _, _, patch in cells]))
        for (r, c, _), k in zip(cells, np.atleast_1d(idx)):
            out[r:r + p, c:c + p] = self.depth_means_[k]
        return DepthMap(np.clip(out, MIN_PRED, 1.0), "UNIT_REAL")


BASELINES = {"GLOBAL_MEAN": GlobalMean, "ROW_PRIOR": RowPrior, "PATCH_KNN": PatchKNN}


def fit_baseline(model: str, images, depths, **kwargs):
    try:
        cls = BASELINES[model.upper()]
    except KeyError:
        raise InvalidParams(f"unknown baseline {model!r}; expected one of {sorted(BASELINES)}") from None
    return cls(**kwargs).fit(list(images), list(depths))


def baseline_predict(img, model: str, state) -> DepthMap:
    """Predict with a fitted baseline ``state`` (as returned by fit_baseline)."""
    if state is None:
        raise NotFitted(f"{model} has no fitted state")
    if state.name != model.upper():
        raise InvalidParams(f"state is a {state.name} model, not {model}")
    return state.predict(img)
