"""Dataset manifest ingestion (COCO-CameraTraps-style JSON).

Materializes one record per annotation, splits collections into day and
night, and performs seeded rare-class subsampling. Manifests are written
back deterministically (stable key order, records sorted by id) so that
subsampled manifests stay diffable.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path

import numpy as np

from .imageops import Image, load_image

DEFAULT_GRAYSCALE_THRESHOLD = 0.02  # ~5/255 mean channel spread


class DayNight(enum.Enum):
    DAY = "day"
    NIGHT = "night"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    file_path: str
    class_label: str
    location_id: str
    capture_time: datetime | None = None
    bbox: tuple[float, float, float, float] | None = None  # (x, y, w, h) pixels
    day_night: DayNight = DayNight.UNKNOWN
    image_size: tuple[int, int] | None = None  # (width, height) when known


@dataclass(frozen=True)
class Manifest:
    records: tuple[ImageRecord, ...]
    categories: frozenset[str]
    locations: frozenset[str]

    def __post_init__(self):
        ids = [r.image_id for r in self.records]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate record ids: {dupes[:5]}")
        for r in self.records:
            if r.class_label not in self.categories:
                raise ValueError(
                    f"record {r.image_id} has label {r.class_label!r} "
                    "outside the category set")


class ManifestError(ValueError):
    pass


def _clamp_bbox(bbox, size):
    x, y, w, h = bbox
    if size is not None:
        iw, ih = size
        x0, y0 = max(x, 0.0), max(y, 0.0)
        x1, y1 = min(x + w, float(iw)), min(y + h, float(ih))
        x, y, w, h = x0, y0, x1 - x0, y1 - y0
    if w <= 0 or h <= 0:
        return None
    return (float(x), float(y), float(w), float(h))


def _parse_time(value):
    if not value:
        return None
    try:
        return datetime.fromisoformat(str(value))
    except ValueError:
        return None


def parse_manifest(path: str | Path) -> Manifest:
    """Parse a COCO-CameraTraps JSON manifest into a Manifest.

    Each annotation becomes its own record (each crop is an independent
    sample); an image entry with no annotations yields one unlabeled
    record tagged `empty`. Bounding boxes are clamped to the image bounds;
    boxes that vanish after clamping are dropped from the record.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"malformed JSON in {path}: {exc}") from exc
    for key in ("images", "annotations", "categories"):
        if key not in doc:
            raise ManifestError(f"{path}: missing top-level array {key!r}")

    cat_by_id = {c["id"]: str(c["name"]) for c in doc["categories"]}
    categories = set(cat_by_id.values())
    images = {}
    for entry in doc["images"]:
        img_id = str(entry["id"])
        if img_id in images:
            raise ManifestError(f"duplicate image id {img_id!r}")
        images[img_id] = entry

    anns_by_image: dict[str, list[dict]] = {i: [] for i in images}
    for ann in doc["annotations"]:
        img_id = str(ann["image_id"])
        if img_id not in anns_by_image:
            raise ManifestError(
                f"annotation {ann.get('id')!r} references unknown image id {img_id!r}")
        anns_by_image[img_id].append(ann)

    records: list[ImageRecord] = []
    locations: set[str] = set()
    for img_id, entry in images.items():
        size = None
        if "width" in entry and "height" in entry:
            size = (int(entry["width"]), int(entry["height"]))
        location = str(entry.get("location", ""))
        locations.add(location)
        capture_time = _parse_time(entry.get("date_captured"))
        daynight = DayNight(entry.get("day_night", "unknown"))
        anns = anns_by_image[img_id]
        if not anns:
            categories.add("empty")
            records.append(ImageRecord(
                image_id=img_id, file_path=str(entry["file_name"]),
                class_label="empty", location_id=location,
                capture_time=capture_time, bbox=None, day_night=daynight,
                image_size=size))
            continue
        for k, ann in enumerate(anns):
            cat_id = ann.get("category_id")
            if cat_id not in cat_by_id:
                raise ManifestError(
                    f"annotation {ann.get('id')!r} references unknown category "
                    f"{cat_id!r}")
            bbox = ann.get("bbox")
            clamped = _clamp_bbox(bbox, size) if bbox else None
            rec_id = img_id if len(anns) == 1 else f"{img_id}#{ann.get('id', k)}"
            records.append(ImageRecord(
                image_id=rec_id, file_path=str(entry["file_name"]),
                class_label=cat_by_id[cat_id], location_id=location,
                capture_time=capture_time, bbox=clamped, day_night=daynight,
                image_size=size))
    return Manifest(records=tuple(records), categories=frozenset(categories),
                    locations=frozenset(locations))


def _grid_spread(image: Image, grid: int = 8) -> float:
    """Mean per-pixel channel spread max(R,G,B)-min(R,G,B) over a fixed grid."""
    ys = np.linspace(0, image.height - 1, grid).astype(np.intp)
    xs = np.linspace(0, image.width - 1, grid).astype(np.intp)
    samples = image.pixels[np.ix_(ys, xs)].astype(np.int16)
    spread = samples.max(axis=-1) - samples.min(axis=-1)
    return float(spread.mean())


def split_day_night(
    manifest: Manifest,
    images_root: str | Path,
    grayscale_threshold: float = DEFAULT_GRAYSCALE_THRESHOLD,
) -> Manifest:
    """Tag every record Day or Night.

    Primary rule: infrared night frames are achromatic, so a sampled pixel
    grid with mean channel spread <= threshold*255 means Night. When the
    image cannot be read, fall back to the capture hour (day is [7, 19)).
    """
    images_root = Path(images_root)
    tagged: list[ImageRecord] = []
    unresolved: list[str] = []
    spread_cache: dict[str, float | None] = {}
    for rec in manifest.records:
        if rec.file_path not in spread_cache:
            try:
                spread_cache[rec.file_path] = _grid_spread(
                    load_image(images_root / rec.file_path))
            except OSError:
                spread_cache[rec.file_path] = None
        spread = spread_cache[rec.file_path]
        if spread is not None:
            tag = DayNight.NIGHT if spread <= grayscale_threshold * 255.0 else DayNight.DAY
        elif rec.capture_time is not None:
            tag = DayNight.DAY if 7 <= rec.capture_time.hour < 19 else DayNight.NIGHT
        else:
            unresolved.append(rec.image_id)
            continue
        tagged.append(replace(rec, day_night=tag))
    if unresolved:
        raise ManifestError(
            "cannot resolve day/night (unreadable image, no capture time) for: "
            + ", ".join(unresolved))
    return replace(manifest, records=tuple(tagged))


def subsample_class(manifest: Manifest, class_label: str, n: int, seed: int) -> Manifest:
    """Reduce one class to exactly n records via seeded sampling without
    replacement; every other record is untouched. Record order is preserved."""
    if class_label not in manifest.categories:
        raise ManifestError(f"unknown class label {class_label!r}")
    target_ids = [r.image_id for r in manifest.records if r.class_label == class_label]
    if n > len(target_ids):
        raise ManifestError(
            f"requested {n} records of {class_label!r} but only "
            f"{len(target_ids)} exist")
    keep = set(random.Random(seed).sample(target_ids, n))
    records = tuple(r for r in manifest.records
                    if r.class_label != class_label or r.image_id in keep)
    return replace(manifest, records=records)


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write back as COCO-CameraTraps JSON, deterministically.

    Records are sorted by id and keys are emitted in stable order, so two
    writes of the same manifest are byte-identical.
    """
    cats = sorted(manifest.categories)
    cat_ids = {name: i for i, name in enumerate(cats)}
    images = []
    annotations = []
    for rec in sorted(manifest.records, key=lambda r: r.image_id):
        entry: dict = {"id": rec.image_id, "file_name": rec.file_path,
                       "location": rec.location_id}
        if rec.image_size is not None:
            entry["width"], entry["height"] = rec.image_size
        if rec.capture_time is not None:
            entry["date_captured"] = rec.capture_time.isoformat()
        if rec.day_night is not DayNight.UNKNOWN:
            entry["day_night"] = rec.day_night.value
        images.append(entry)
        ann: dict = {"id": f"{rec.image_id}:0", "image_id": rec.image_id,
                     "category_id": cat_ids[rec.class_label]}
        if rec.bbox is not None:
            ann["bbox"] = list(rec.bbox)
        annotations.append(ann)
    doc = {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": cat_ids[c], "name": c} for c in cats],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
