"""Stage orchestration: ingest -> split -> per-collection metrics -> GapReport.

Stages run sequentially; per-image work inside a stage is data-parallel
with a bounded worker count. All randomness derives from the top-level
seed, so one number reproduces a run and two identical runs produce
byte-identical reports.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import warnings
import zlib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import classification as cls
from . import color, fid, texture
from .config import RunConfig
from .imageops import Image, crop_resize, load_image, to_grayscale
from .manifest import DayNight, parse_manifest, split_day_night


class StageError(RuntimeError):
    """A stage failed; carries the stage name and the underlying cause."""

    def __init__(self, stage: str, cause: str):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def derive_seed(root_seed: int, stage: str) -> int:
    """Stable per-stage seed derived from the top-level seed."""
    mix = np.random.SeedSequence([root_seed, zlib.crc32(stage.encode())])
    return int(mix.generate_state(1)[0])


def _map(fn, items, workers: int):
    """Ordered map, threaded when workers > 1; results keep input order."""
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _load_collection(coll, cfg: RunConfig, wlist: list[str]):
    """Parse a collection's manifest, tag day/night, and produce 256x256
    bbox crops. Records without a bbox are skipped with a warning."""
    manifest = parse_manifest(coll.manifest)
    manifest = split_day_night(manifest, coll.images_root,
                               cfg.grayscale_threshold)
    crops: list[tuple[Image, DayNight]] = []
    root = Path(coll.images_root)

    def one(rec):
        if rec.bbox is None:
            return ("skip", rec.image_id)
        img = load_image(root / rec.file_path)
        return ("ok", (crop_resize(img, rec.bbox, cfg.crop_side), rec.day_night))

    for kind, payload in _map(one, manifest.records, cfg.workers):
        if kind == "skip":
            wlist.append(f"{coll.name}: record {payload} has no bbox; skipped")
        else:
            crops.append(payload)
    if not crops:
        raise ValueError(f"collection {coll.name!r} has zero usable crops")
    return crops


def _pair_key(a: str, b: str) -> str:
    return "|".join(sorted((a, b)))


def run_color_gap(cfg: RunConfig, crops_by_collection: dict, wlist: list[str]) -> dict:
    """Per-pair, per-daypart correlation between aggregated distributions.

    Day frames contribute hue histograms, night frames grayscale
    histograms, each per-sample normalized before aggregation.
    """
    if len(crops_by_collection) < 2:
        raise ValueError("color gap needs at least 2 collections")
    hists: dict[str, dict[str, list[color.NormalizedHistogram]]] = {}
    for name, crops in crops_by_collection.items():
        day_h, night_h = [], []
        for img, tag in crops:
            if tag is DayNight.DAY:
                h = color.hue_histogram(img, cfg.color.hue_bins)
                if h.support == 0:
                    wlist.append(f"{name}: achromatic day crop excluded from "
                                 "hue aggregation")
                day_h.append(h)
            else:
                night_h.append(color.gray_histogram(to_grayscale(img),
                                                    cfg.color.gray_bins))
        hists[name] = {"day": day_h, "night": night_h}

    aggregates: dict[str, dict[str, color.NormalizedHistogram | None]] = {}
    for name, by_part in hists.items():
        aggregates[name] = {}
        for part, hlist in by_part.items():
            usable = [h for h in hlist if h.support > 0]
            aggregates[name][part] = color.aggregate(usable) if usable else None

    pairs = {}
    for a, b in itertools.combinations(sorted(hists), 2):
        row = {}
        for part in ("day", "night"):
            ha, hb = aggregates[a][part], aggregates[b][part]
            if ha is None or hb is None:
                row[part] = None
                wlist.append(f"no usable {part} histograms for pair {a}|{b}")
                continue
            if cfg.color.per_image_mean:
                row[part] = _per_image_mean_corr(hists[a][part], hists[b][part],
                                                ha, hb)
            else:
                row[part] = color.pearson(ha, hb)
        pairs[_pair_key(a, b)] = row
    return {
        "pairs": pairs,
        "per_image_mean": cfg.color.per_image_mean,
        "hue_bins": cfg.color.hue_bins,
        "gray_bins": cfg.color.gray_bins,
        "aggregates": {
            name: {part: (None if h is None else [float(w) for w in h.weights])
                   for part, h in by_part.items()}
            for name, by_part in aggregates.items()
        },
    }


def _per_image_mean_corr(ha_list, hb_list, agg_a, agg_b) -> float:
    """Mean of per-image correlations against the other side's aggregate,
    symmetrized over the two directions."""
    def side(hlist, other_agg):
        vals = [color.pearson(h, other_agg) for h in hlist if h.support > 0]
        return sum(vals) / len(vals)
    return 0.5 * (side(ha_list, agg_b) + side(hb_list, agg_a))


def run_texture_gap(cfg: RunConfig, crops_by_collection: dict,
                    wlist: list[str]) -> dict:
    """Averaged GLCM features per collection plus pairwise absolute deltas."""
    seed = derive_seed(cfg.seed, "texture")
    feats: dict[str, texture.GlcmFeatures] = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for name in sorted(crops_by_collection):
            gray = [to_grayscale(img) for img, _ in crops_by_collection[name]]
            feats[name] = texture.collection_features(
                gray, cfg.texture.patches_per_image, cfg.texture.patch_side,
                seed=seed, levels=cfg.texture.levels)
    wlist.extend(str(w.message) for w in caught)
    deltas = {
        _pair_key(a, b): texture.feature_deltas(feats[a], feats[b])
        for a, b in itertools.combinations(sorted(feats), 2)
    }
    return {
        "collections": {
            name: dict(f.as_dict(), patch_count=f.patch_count, levels=f.levels)
            for name, f in feats.items()
        },
        "deltas": deltas,
    }


def run_fid(cfg: RunConfig, wlist: list[str]) -> dict:
    """Raw Frechet distances per depth for the configured collection pairs,
    plus the fraction-of-baseline normalization (baseline = 1.0)."""
    fc = cfg.fid
    if not fc.embeddings:
        raise ValueError("no embedding directories configured")
    names = sorted(fc.embeddings)
    for role in (fc.target, fc.baseline):
        if role not in fc.embeddings:
            raise ValueError(f"fid role {role!r} has no embeddings entry")
    per_depth = {}
    for depth in fc.depths:
        fits = {}
        for name in names:
            path = Path(fc.embeddings[name]) / f"depth_{depth}.emb"
            if not path.exists():
                raise FileNotFoundError(f"missing embedding file: {path}")
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                fits[name] = fid.fit_gaussian(fid.load_embedding_set(path))
            wlist.extend(f"{name} depth {depth}: {w.message}" for w in caught)
        pair_list = [(fc.baseline, fc.target)]
        if fc.translated and fc.translated in fc.embeddings:
            pair_list += [(fc.translated, fc.target), (fc.translated, fc.baseline)]
        raw = {}
        for a, b in pair_list:
            res = fid.frechet_distance(fits[a], fits[b], eps=fc.eps)
            raw[_pair_key(a, b)] = res.value
            if res.regularized:
                wlist.append(f"fid depth {depth} pair {a}|{b}: covariance "
                             f"regularized with eps={fc.eps}")
        entry = {"raw": raw, "normalized": None}
        if fc.translated and fc.translated in fc.embeddings:
            entry["normalized"] = {
                fc.baseline: 1.0,
                fc.translated: fid.normalized_fid(
                    raw[_pair_key(fc.translated, fc.target)],
                    raw[_pair_key(fc.baseline, fc.target)]),
            }
        per_depth[str(depth)] = entry
    return {"depths": per_depth, "target": fc.target, "baseline": fc.baseline,
            "translated": fc.translated, "eps": fc.eps}


def run_classification(cfg: RunConfig, wlist: list[str]) -> dict:
    """Per-class error rates per regime and split, plus baseline-relative
    comparisons for the class of interest."""
    cc = cfg.classification
    if not cc.predictions:
        raise ValueError("no prediction files configured")
    if cc.baseline not in cc.predictions:
        raise ValueError(f"baseline regime {cc.baseline!r} has no predictions")
    reports: dict[str, dict[str, cls.ErrorReport]] = {}
    for regime in sorted(cc.predictions):
        preds = cls.load_predictions(cc.predictions[regime])
        reports[regime] = {}
        for split in cls.Split:
            if any(p.split is split for p in preds):
                reports[regime][split.value] = cls.error_rates(preds, split)
    out: dict = {"class_of_interest": cc.class_of_interest,
                 "baseline": cc.baseline, "error_rates": {}, "comparisons": {}}
    for regime, by_split in reports.items():
        out["error_rates"][regime] = {
            split: {
                "per_class": rep.per_class_error,
                "macro_excluding": rep.macro_error_excluding,
                "micro_excluding": rep.micro_error_excluding,
                "support": rep.support,
            }
            for split, rep in by_split.items()
        }
    for regime in sorted(cc.predictions):
        if regime == cc.baseline:
            continue
        for split, rep in reports[regime].items():
            base = reports[cc.baseline].get(split)
            if base is None:
                wlist.append(f"split {split} absent from baseline regime")
                continue
            comp = cls.compare_runs(base, rep, cc.class_of_interest)
            out["comparisons"].setdefault(regime, {})[split] = {
                "baseline_error": comp.baseline_error,
                "variant_error": comp.variant_error,
                "relative_decrease_pct": comp.relative_decrease_pct,
                "absolute_decrease": comp.absolute_decrease,
                "other_classes_delta_macro": comp.other_classes_delta_macro,
                "other_classes_delta_micro": comp.other_classes_delta_micro,
            }
    return out


def run_full(cfg: RunConfig) -> dict:
    """Execute the configured stages and assemble the GapReport.

    Any stage failure raises StageError; partial reports are never
    returned or written.
    """
    warnings_list: list[str] = []
    report: dict = {"run_config": cfg.echo(), "warnings": warnings_list}
    crops = None
    if any(s in cfg.stages for s in ("color", "texture")):
        try:
            crops = {c.name: _load_collection(c, cfg, warnings_list)
                     for c in cfg.collections}
        except Exception as exc:
            raise StageError("ingest", str(exc)) from exc
    for stage in cfg.stages:
        try:
            if stage == "color":
                report["color"] = run_color_gap(cfg, crops, warnings_list)
            elif stage == "texture":
                report["texture"] = run_texture_gap(cfg, crops, warnings_list)
            elif stage == "fid":
                report["fid"] = run_fid(cfg, warnings_list)
            elif stage == "classification":
                report["classification"] = run_classification(cfg, warnings_list)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage, str(exc)) from exc
    return report


def dump_report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _csv_text(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def write_report(report: dict, out_dir: str | Path) -> list[Path]:
    """Write report.json plus CSV exports and plot-data files.

    Returns the list of written paths. Output is deterministic for a fixed
    report dict.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name: str, text: str):
        path = out_dir / name
        path.write_text(text)
        written.append(path)

    emit("report.json", dump_report_json(report))

    if "color" in report:
        rows = [["pair", "day", "night"]]
        for pair, vals in sorted(report["color"]["pairs"].items()):
            rows.append([pair, vals["day"], vals["night"]])
        emit("report_color.csv", _csv_text(rows))
        for name, by_part in sorted(report["color"]["aggregates"].items()):
            for part, weights in sorted(by_part.items()):
                if weights is None:
                    continue
                rows = [["bin_index", "weight"]]
                rows += [[i, w] for i, w in enumerate(weights)]
                emit(f"plot_hist_{name}_{part}.csv", _csv_text(rows))

    if "texture" in report:
        rows = [["collection", "contrast", "homogeneity", "energy", "entropy",
                 "patch_count"]]
        for name, f in sorted(report["texture"]["collections"].items()):
            rows.append([name, f["contrast"], f["homogeneity"], f["energy"],
                         f["entropy"], f["patch_count"]])
        for pair, d in sorted(report["texture"]["deltas"].items()):
            rows.append([f"|delta| {pair}", d["contrast"], d["homogeneity"],
                         d["energy"], d["entropy"], ""])
        emit("report_texture.csv", _csv_text(rows))

    if "fid" in report:
        rows = [["depth", "pair", "fid"]]
        plot_rows = [["depth", "collection", "normalized_fid"]]
        for depth, entry in sorted(report["fid"]["depths"].items(),
                                   key=lambda kv: int(kv[0])):
            for pair, value in sorted(entry["raw"].items()):
                rows.append([depth, pair, value])
            if entry["normalized"]:
                for name, value in sorted(entry["normalized"].items()):
                    plot_rows.append([depth, name, value])
        emit("report_fid.csv", _csv_text(rows))
        if len(plot_rows) > 1:
            emit("plot_fid.csv", _csv_text(plot_rows))

    if "classification" in report:
        sec = report["classification"]
        coi = sec["class_of_interest"]
        rows = [["regime", "split", f"{coi}_error", "other_classes_macro_error"]]
        for regime, by_split in sorted(sec["error_rates"].items()):
            for split, rep in sorted(by_split.items()):
                rows.append([regime, split,
                             rep["per_class"].get(coi, ""),
                             rep["macro_excluding"].get(coi, "")])
        emit("report_classification.csv", _csv_text(rows))

    return written
