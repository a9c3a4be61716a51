import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image as PILImage

from domaingap.imageops import Image


def solid_image(rgb, size=(32, 32)) -> Image:
    w, h = size
    px = np.zeros((h, w, 3), dtype=np.uint8)
    px[:] = rgb
    return Image(px)


def save_png(path: Path, pixels: np.ndarray):
    path.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(pixels).save(path)


def write_coco_manifest(path: Path, entries, categories):
    """entries: list of dicts with file_name, label, and optional extras."""
    cat_ids = {name: i + 1 for i, name in enumerate(categories)}
    images, annotations = [], []
    for i, e in enumerate(entries):
        img_id = e.get("id", f"img{i}")
        img = {"id": img_id, "file_name": e["file_name"],
               "location": e.get("location", "loc0")}
        if "size" in e:
            img["width"], img["height"] = e["size"]
        if "date_captured" in e:
            img["date_captured"] = e["date_captured"]
        images.append(img)
        if e.get("label") is not None:
            ann = {"id": f"ann{i}", "image_id": img_id,
                   "category_id": cat_ids[e["label"]]}
            if "bbox" in e:
                ann["bbox"] = list(e["bbox"])
            annotations.append(ann)
    doc = {"images": images, "annotations": annotations,
           "categories": [{"id": v, "name": k} for k, v in cat_ids.items()]}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def synthetic_dataset(tmp_path):
    """Three small collections with analytically known color statistics.

    Day images are solid chromatic colors (red / green), night images are
    solid grays; every image carries a full-frame bbox so crops are exact.
    """
    side = 48
    plan = {
        "syn": [((255, 0, 0), "day"), ((255, 0, 0), "day"),
                ((40, 40, 40), "night"), ((40, 40, 40), "night")],
        "real": [((0, 255, 0), "day"), ((0, 255, 0), "day"),
                 ((60, 60, 60), "night"), ((60, 60, 60), "night")],
        "syn2real": [((255, 0, 0), "day"), ((0, 255, 0), "day"),
                     ((50, 50, 50), "night"), ((60, 60, 60), "night")],
    }
    collections = {}
    for name, images in plan.items():
        root = tmp_path / name
        entries = []
        for i, (rgb, _part) in enumerate(images):
            fname = f"{i}.png"
            save_png(root / fname, solid_image(rgb, (side, side)).pixels)
            entries.append({"file_name": fname, "label": "deer",
                            "bbox": (0, 0, side, side), "size": (side, side)})
        manifest = write_coco_manifest(tmp_path / f"{name}.json", entries, ["deer"])
        collections[name] = {"manifest": str(manifest), "images_root": str(root)}
    return {"dir": tmp_path, "collections": collections, "plan": plan,
            "image_side": side}


def write_gaussian_embeddings(out_dir: Path, depth: int, rng, mean_shift=0.0,
                              scale=1.0, n=96, source="", extractor="test"):
    """Write one EMB1 file of Gaussian rows; returns the float32 payload."""
    from domaingap.fid import write_embeddings

    data = (rng.standard_normal((n, depth)) * scale + mean_shift).astype(np.float32)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_embeddings(out_dir / f"depth_{depth}.emb", data, depth,
                     source_collection=source, extractor_id=extractor)
    return data
