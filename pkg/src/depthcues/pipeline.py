"""Manifest-driven dataset generation, restoration, evaluation and analysis runs.

Output layout of ``cmd_generate``::

    <out>/<feature>/<split>/images/<id>.png
    <out>/<feature>/<split>/depths/<id>.png
    <out>/<feature>/<split>/sidecars/<id>.json
    <out>/<feature>/run.json          (written last)
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import noise_experiment, rgb_depth_heatmap, row_saturation_profile, saturation_by_depth
from .edges import EdgeParams, shape_dataset
from .errors import DepthCuesError, EmptyDataset, IdMismatch, InvalidParams, MissingSidecar, VersionMismatch
from .evaluate import (
    AGGREGATIONS,
    aggregate_reports,
    baseline_predict,
    compute_metrics,
    fit_baseline,
    report_csv_row,
    report_json,
    reports_to_csv,
)
from .imgcore import (
    DatasetManifest,
    DepthMap,
    RasterImage,
    load_depth,
    load_rgb,
    save_depth,
    save_image,
    split_dataset,
    write_bytes_atomic,
)
from .spectral import ScrambleRecord, make_record, scramble_pair, unscramble_depth, unscramble_image
from .texture import STANDARD_PATCH_SIZES, ShuffleRecord, make_shuffle, shuffle_pair, unshuffle_pair

log = logging.getLogger(__name__)

FEATURES = ("RGB", "RGB_SCRAMBLED", "GREY_SCRAMBLED", "SATURATION_SCRAMBLED", "TEXTURE", "SHAPE")
SCRAMBLE_MODES = {"RGB_SCRAMBLED": "RGB", "GREY_SCRAMBLED": "GREYSCALE", "SATURATION_SCRAMBLED": "SATURATION"}
ANALYSES = ("SAT_DEPTH", "ROW_SAT", "HEATMAP", "NOISE")
PASSTHROUGH_VERSION = 1


def derive_seed(global_seed: int, image_id: str) -> int:
    """Per-image seed: first 63 bits of sha256("<global seed>:<image id>")."""
    digest = hashlib.sha256(f"{global_seed}:{image_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def safe_name(image_id: str) -> str:
    return image_id.replace("/", "__").replace("\\", "__")


def dump_json(doc) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()


@dataclass
class PipelineConfig:
    manifest: Path
    out: Path
    feature: str
    seed: int = 0
    patch_size: int | None = None
    texture_rgb: bool = False
    edge_params: EdgeParams | None = None
    jobs: int = 1
    by_scene: bool = False

    def __post_init__(self):
        self.feature = self.feature.upper()
        if self.feature not in FEATURES:
            raise InvalidParams(f"unknown feature {self.feature!r}; expected one of {FEATURES}")
        if self.feature == "TEXTURE":
            if self.patch_size is None:
                self.patch_size = 16
        elif self.patch_size is not None:
            raise InvalidParams(f"patch_size only applies to TEXTURE, not {self.feature}")
        if self.feature == "SHAPE":
            self.edge_params = self.edge_params or EdgeParams()
            self.edge_params.validate()
        elif self.edge_params is not None:
            raise InvalidParams(f"edge parameters only apply to SHAPE, not {self.feature}")

    @property
    def dir_name(self) -> str:
        if self.feature == "TEXTURE":
            suffix = "_rgb" if self.texture_rgb else ""
            return f"texture_p{self.patch_size}{suffix}"
        return self.feature.lower()

    def params(self) -> dict:
        if self.feature == "TEXTURE":
            return {"patch_size": self.patch_size, "greyscale": not self.texture_rgb}
        if self.feature == "SHAPE":
            return asdict(self.edge_params)
        if self.feature in SCRAMBLE_MODES:
            return {"mode": SCRAMBLE_MODES[self.feature]}
        return {}


def _file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _copy_atomic(src, dst) -> None:
    write_bytes_atomic(dst, Path(src).read_bytes())


def _generate_one(task: dict) -> dict:
    """Worker: transform one pair, write image/depth/sidecar.  Returns an item record."""
    manifest: DatasetManifest = task["manifest"]
    entry = task["entry"]
    cfg: PipelineConfig = task["config"]
    split_dir = Path(task["split_dir"])
    name = safe_name(entry.id)
    paths = {
        "image": split_dir / "images" / f"{name}.png",
        "depth": split_dir / "depths" / f"{name}.png",
        "sidecar": split_dir / "sidecars" / f"{name}.json",
    }
    try:
        rgb_path, depth_path = manifest.resolve(entry)
        pair = manifest.load(entry)
        seed = derive_seed(cfg.seed, entry.id)
        feature = cfg.feature
        if feature == "RGB":
            _copy_atomic(rgb_path, paths["image"])
            _copy_atomic(depth_path, paths["depth"])
            sidecar = {"kind": "identity", "version": PASSTHROUGH_VERSION}
        elif feature == "SHAPE":
            edges, _ = shape_dataset(pair, cfg.edge_params)
            save_image(edges, paths["image"])
            _copy_atomic(depth_path, paths["depth"])
            sidecar = {"kind": "shape", "version": PASSTHROUGH_VERSION, "params": asdict(cfg.edge_params)}
        elif feature in SCRAMBLE_MODES:
            mode = SCRAMBLE_MODES[feature]
            record = make_record(seed, pair.rgb.height, pair.rgb.width)
            img, depth = scramble_pair(pair, record, mode)
            save_image(img, paths["image"])
            save_depth(depth, paths["depth"])
            sidecar = record.to_sidecar(mode=mode, depth_convention=pair.depth.convention)
        else:
            record = make_shuffle(seed, pair.rgb.height, pair.rgb.width, cfg.patch_size)
            img, depth = shuffle_pair(pair, record, greyscale=not cfg.texture_rgb)
            save_image(img, paths["image"])
            save_depth(depth, paths["depth"])
            sidecar = record.to_sidecar(greyscale=not cfg.texture_rgb, depth_convention=pair.depth.convention)
        sidecar["id"] = entry.id
        write_bytes_atomic(paths["sidecar"], dump_json(sidecar))
    except Exception as exc:
        for p in paths.values():
            p.unlink(missing_ok=True)
        return {"id": entry.id, "error": f"{type(exc).__name__}: {exc}"}
    return {
        "id": entry.id,
        "split": task["split"],
        "image": paths["image"].relative_to(split_dir.parent).as_posix(),
        "depth": paths["depth"].relative_to(split_dir.parent).as_posix(),
        "sidecar": paths["sidecar"].relative_to(split_dir.parent).as_posix(),
        "sha256": {k: _file_sha256(p) for k, p in paths.items()},
    }


def _map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def load_split(manifest: DatasetManifest, by_scene: bool = False) -> dict:
    train, test = split_dataset(manifest, by_scene=by_scene)
    return {"train": train, "test": test, "seed": manifest.split_seed}


def cmd_split(manifest_path, out) -> Path:
    manifest = DatasetManifest.from_json(manifest_path)
    split = load_split(manifest)
    path = Path(out) / "split.json"
    write_bytes_atomic(path, dump_json(split))
    return path


def cmd_generate(cfg: PipelineConfig) -> Path:
    """Write one cue dataset; returns the feature directory."""
    manifest = DatasetManifest.from_json(cfg.manifest)
    manifest.check_files()
    split = load_split(manifest, cfg.by_scene)
    side = {i: "train" for i in split["train"]}
    side.update({i: "test" for i in split["test"]})
    feature_dir = Path(cfg.out) / cfg.dir_name
    tasks = [
        {
            "manifest": manifest,
            "entry": entry,
            "config": cfg,
            "split": side[entry.id],
            "split_dir": str(feature_dir / side[entry.id]),
        }
        for entry in manifest.entries
    ]
    log.info("generating %s for %d pairs", cfg.dir_name, len(tasks))
    results = _map(_generate_one, tasks, cfg.jobs)
    failures = [r for r in results if "error" in r]
    if failures:
        for f in failures:
            log.error("%s: %s", f["id"], f["error"])
        raise DepthCuesError(f"{len(failures)} of {len(results)} pairs failed; first: {failures[0]['id']}: {failures[0]['error']}")
    run = {
        "tool": "depthcues",
        "version": __version__,
        "feature": cfg.feature,
        "dir": cfg.dir_name,
        "seed": cfg.seed,
        "seed_derivation": "sha256('<seed>:<id>')[:8] >> 1",
        "params": cfg.params(),
        "manifest_sha256": _file_sha256(cfg.manifest),
        "split": {**split, "test_fraction": manifest.test_fraction, "by_scene": cfg.by_scene},
        "items": sorted(results, key=lambda r: r["id"]),
    }
    write_bytes_atomic(feature_dir / "run.json", dump_json(run))
    return feature_dir


def feature_configs(manifest, out, features, seed=0, patch_sizes=None, texture_rgb=False,
                    edge_params=None, jobs=1, by_scene=False) -> list[PipelineConfig]:
    """Expand feature names (or ``ALL``) into one config per output directory.

    Without explicit patch sizes, TEXTURE uses 16, or all of 4/16/32/64/128
    when ``ALL`` is requested.
    """
    names = [f.upper() for f in features]
    if "ALL" in names:
        names = list(FEATURES)
        patch_sizes = patch_sizes or STANDARD_PATCH_SIZES
    patch_sizes = patch_sizes or (16,)
    configs = []
    for name in names:
        common = dict(manifest=Path(manifest), out=Path(out), feature=name, seed=seed, jobs=jobs, by_scene=by_scene)
        if name == "TEXTURE":
            for p in patch_sizes:
                configs.append(PipelineConfig(patch_size=int(p), texture_rgb=texture_rgb, **common))
        elif name == "SHAPE":
            configs.append(PipelineConfig(edge_params=edge_params or EdgeParams(), **common))
        else:
            configs.append(PipelineConfig(**common))
    return configs


# --- restore -----------------------------------------------------------------

def _read_sidecar(path: Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _restore_one(sidecar_path: Path, split_dir: Path, target_dir: Path) -> dict:
    doc = _read_sidecar(sidecar_path)
    name = sidecar_path.stem
    img_path = split_dir / "images" / f"{name}.png"
    depth_path = split_dir / "depths" / f"{name}.png"
    out_img = target_dir / "images" / f"{name}.png"
    out_depth = target_dir / "depths" / f"{name}.png"
    kind = doc.get("kind")
    restored_image = True
    if kind in ("identity", "shape"):
        if doc.get("version") != PASSTHROUGH_VERSION:
            raise VersionMismatch(f"{sidecar_path}: version {doc.get('version')!r}, expected {PASSTHROUGH_VERSION}")
        _copy_atomic(depth_path, out_depth)
        if kind == "identity":
            _copy_atomic(img_path, out_img)
        else:
            # edge maps are not invertible; only the pass-through depth is restored
            restored_image = False
    elif kind == "scramble":
        record = ScrambleRecord.from_sidecar(doc)
        mode = doc.get("mode", "RGB")
        if mode == "RGB":
            img = load_rgb(img_path)
        else:
            arr = _load_plane(img_path)
            img = RasterImage(arr, "GREY" if mode == "GREYSCALE" else "HSV_PLANE")
        save_image(unscramble_image(img, record), out_img)
        save_depth(unscramble_depth(_load_depth_as(depth_path, doc), record), out_depth)
    elif kind == "shuffle":
        record = ShuffleRecord.from_sidecar(doc)
        if doc.get("greyscale", True):
            img = RasterImage(_load_plane(img_path), "GREY")
        else:
            img = load_rgb(img_path)
        img, depth = unshuffle_pair(img, _load_depth_as(depth_path, doc), record)
        save_image(img, out_img)
        save_depth(depth, out_depth)
    else:
        raise VersionMismatch(f"{sidecar_path}: unknown sidecar kind {kind!r}")
    return {"id": doc.get("id", name), "kind": kind, "image_restored": restored_image}


def _load_plane(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def _load_depth_as(path, doc) -> DepthMap:
    depth = load_depth(path)
    if doc.get("depth_convention") == "UNIT_REAL":
        return depth.to_unit()
    if doc.get("depth_convention") == "U8_0_255":
        return depth.to_u8()
    return depth


def cmd_restore(feature_dir, out) -> list[dict]:
    """Invert every sidecar-backed item under ``feature_dir`` into ``out/<split>/``."""
    feature_dir = Path(feature_dir)
    sidecars = sorted(feature_dir.glob("*/sidecars/*.json"))
    if not sidecars:
        raise MissingSidecar(f"no sidecars found under {feature_dir}")
    restored = []
    for sc in sidecars:
        split_dir = sc.parent.parent
        target = Path(out) / split_dir.name
        for sub in ("images", "depths"):
            src = split_dir / sub / f"{sc.stem}.png"
            if not src.is_file():
                raise MissingSidecar(f"{sc} has no matching {sub} file {src}")
        restored.append(_restore_one(sc, split_dir, target))
    images = sorted(p.stem for p in feature_dir.glob("*/images/*.png"))
    orphans = sorted(set(images) - {sc.stem for sc in sidecars})
    if orphans:
        raise MissingSidecar(f"images without sidecars: {orphans[:5]}")
    write_bytes_atomic(Path(out) / "restore.json", dump_json({"source": feature_dir.name, "items": restored}))
    return restored


# --- evaluate ----------------------------------------------------------------

def _png_ids(directory: Path) -> dict[str, Path]:
    directory = Path(directory)
    if (directory / "depths").is_dir():
        directory = directory / "depths"
    return {p.stem: p for p in sorted(directory.glob("*.png"))}


def cmd_evaluate(pred_dir, gt_dir, out, mode: str = "IMAGE_MEAN", feature: str = "prediction"):
    mode = mode.upper()
    if mode not in AGGREGATIONS:
        raise InvalidParams(f"aggregation must be one of {AGGREGATIONS}")
    preds = _png_ids(pred_dir)
    gts = _png_ids(gt_dir)
    missing = sorted(set(gts) - set(preds))
    extra = sorted(set(preds) - set(gts))
    if missing or extra:
        raise IdMismatch(f"missing predictions for {missing}; predictions without ground truth {extra}")
    if not gts:
        raise IdMismatch(f"no depth PNGs found in {gt_dir}")
    per_image = {}
    for image_id in sorted(gts):
        per_image[image_id] = compute_metrics(load_depth(preds[image_id]), load_depth(gts[image_id]))
    agg = aggregate_reports(list(per_image.values()), mode)
    out = Path(out)
    rows = []
    for image_id, rep in per_image.items():
        row = {"id": image_id, **rep.values(), "pixel_count": rep.pixel_count}
        rows.append(row)
    write_bytes_atomic(
        out / "per_image.csv",
        reports_to_csv(rows, ["id", "a1", "a2", "a3", "log10", "rel", "rmse", "pixel_count"]).encode(),
    )
    write_bytes_atomic(out / "summary.csv", reports_to_csv([report_csv_row(feature, agg)]).encode())
    write_bytes_atomic(out / "summary.json", report_json(agg, feature, per_image).encode())
    return agg, per_image


def cmd_baseline(manifest_path, out, model: str = "GLOBAL_MEAN", patch_size: int = 16) -> Path:
    """Fit a baseline on the train split and write test-split predictions as 16-bit PNGs."""
    manifest = DatasetManifest.from_json(manifest_path)
    split = load_split(manifest)
    if not split["test"]:
        raise EmptyDataset(f"test split is empty ({len(manifest.entries)} entries, fraction {manifest.test_fraction})")
    by_id = {e.id: e for e in manifest.entries}
    train = [manifest.load(by_id[i]) for i in split["train"]]
    kwargs = {"patch_size": patch_size} if model.upper() == "PATCH_KNN" else {}
    state = fit_baseline(model, [p.rgb for p in train], [p.depth for p in train], **kwargs)
    pred_dir = Path(out) / model.lower()
    for image_id in split["test"]:
        pair = manifest.load(by_id[image_id])
        pred = baseline_predict(pair.rgb, model, state)
        # keep predictions strictly positive so every metric is defined
        values = np.clip(pred.values, 1.0 / 65535.0, 1.0)
        save_depth(DepthMap(values, "UNIT_REAL"), pred_dir / "predictions" / f"{safe_name(image_id)}.png")
        src = manifest.resolve(by_id[image_id])[1]
        _copy_atomic(src, pred_dir / "gt" / f"{safe_name(image_id)}.png")
    return pred_dir


# --- analyze -----------------------------------------------------------------

@dataclass
class AnalysisParams:
    n_bins: int = 8
    n_rows: int = 10
    depth_bins: int = 10
    value_bins: int = 26
    sample_size: int = 500
    sigma: float = 25.0
    region: str = "WHOLE"
    image_id: str | None = None
    figures: bool = False


def cmd_analyze(kind: str, manifest_path, out, seed: int = 0, params: AnalysisParams | None = None) -> dict[str, Path]:
    kind = kind.upper()
    if kind not in ANALYSES:
        raise InvalidParams(f"unknown analysis {kind!r}; expected one of {ANALYSES}")
    params = params or AnalysisParams()
    manifest = DatasetManifest.from_json(manifest_path)
    out = Path(out) / "analysis"
    written = {}

    def emit(stem, csv_text=None, json_text=None):
        if csv_text is not None:
            written[f"{stem}.csv"] = out / f"{stem}.csv"
            write_bytes_atomic(written[f"{stem}.csv"], csv_text.encode())
        if json_text is not None:
            written[f"{stem}.json"] = out / f"{stem}.json"
            write_bytes_atomic(written[f"{stem}.json"], json_text.encode())

    if kind == "SAT_DEPTH":
        profile = saturation_by_depth(manifest.iter_pairs(), params.n_bins)
        profile.meta.update(seed=seed)
        emit("saturation_by_depth", profile.to_csv(), profile.to_json())
        if params.figures:
            from .figures import plot_depth_saturation

            written["saturation_by_depth.png"] = out / "saturation_by_depth.png"
            plot_depth_saturation(profile, written["saturation_by_depth.png"])
    elif kind == "ROW_SAT":
        entry = _pick_entry(manifest, params.image_id)
        pair = manifest.load(entry)
        profile = row_saturation_profile(pair.rgb, params.n_rows)
        profile.meta.update(seed=seed, image_id=entry.id)
        emit("row_saturation", profile.to_csv(), profile.to_json())
        if params.figures:
            from .figures import plot_row_saturation

            written["row_saturation.png"] = out / "row_saturation.png"
            plot_row_saturation(profile, written["row_saturation.png"])
    elif kind == "HEATMAP":
        # sample ids first so only the chosen images are decoded
        from .analysis import sample_pairs

        chosen, _ = sample_pairs(manifest.entries, params.sample_size, seed)
        table = rgb_depth_heatmap([manifest.load(e) for e in chosen], params.depth_bins, params.value_bins,
                                  sample_size=None, seed=seed)
        table.meta.update(seed=seed, sample_size=params.sample_size, population=len(manifest.entries))
        emit("rgb_depth_heatmap", table.to_csv(), table.to_json())
        if params.figures:
            from .figures import plot_heatmap

            written["rgb_depth_heatmap.png"] = out / "rgb_depth_heatmap.png"
            plot_heatmap(table, written["rgb_depth_heatmap.png"])
    else:
        entry = _pick_entry(manifest, params.image_id)
        pair = manifest.load(entry)
        record_seed = derive_seed(seed, entry.id)
        record = make_record(record_seed, pair.rgb.height, pair.rgb.width)
        result = noise_experiment(pair, record, params.sigma, params.region, seed=seed)
        result.meta.update(image_id=entry.id)
        emit("noise", None, result.to_json())
        for label, img in (("scrambled", result.scrambled), ("noisy", result.noisy), ("restored", result.restored)):
            written[f"noise_{label}.png"] = out / f"noise_{label}.png"
            save_image(img, written[f"noise_{label}.png"])
        if params.figures:
            from .figures import plot_noise

            written["noise.png"] = out / "noise.png"
            plot_noise(pair.rgb, result, written["noise.png"])
    return written


def _pick_entry(manifest: DatasetManifest, image_id: str | None):
    if not manifest.entries:
        raise InvalidParams("manifest has no entries")
    if image_id is None:
        return manifest.entries[0]
    for e in manifest.entries:
        if e.id == image_id:
            return e
    raise IdMismatch(f"id {image_id!r} not in manifest")

