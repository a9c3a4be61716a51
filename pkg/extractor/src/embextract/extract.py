"""Extraction jobs: read a directory of crops, run the tapped network,
and write one EMB1 file per requested depth (atomically)."""

from __future__ import annotations

import json
import os
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .model import DEPTHS, PREPROCESSING, InceptionTaps, preprocess

MAGIC = b"EMB1"

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


@dataclass
class ExtractionJob:
    input_dir: str
    output_dir: str
    extractor_id: str
    depths: tuple[int, ...] = DEPTHS
    source_collection: str = ""
    checkpoint: str | None = None
    seed: int = 0
    batch_size: int = 16

    def __post_init__(self):
        if not self.depths:
            raise ValueError("requested depths must be nonempty")
        if not self.extractor_id:
            raise ValueError("extractor_id must be non-empty")


def write_emb(path: Path, data: np.ndarray) -> None:
    """Write the EMB1 layout via a temp file and an atomic rename."""
    arr = np.ascontiguousarray(data, dtype="<f4")
    n, dim = arr.shape
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", n, dim))
        fh.write(arr.tobytes())
    os.replace(tmp, path)


def list_images(input_dir: str | Path) -> list[Path]:
    paths = [p for p in sorted(Path(input_dir).iterdir())
             if p.suffix.lower() in IMAGE_SUFFIXES]
    if not paths:
        raise FileNotFoundError(f"no images found in {input_dir}")
    return paths


def load_batch(paths: list[Path]) -> tuple[torch.Tensor, list[Path]]:
    """Decode a batch; undecodable files are skipped with a warning."""
    tensors, kept = [], []
    for path in paths:
        try:
            with Image.open(path) as im:
                rgb = np.array(im.convert("RGB"), dtype=np.uint8)
        except OSError as exc:
            warnings.warn(f"skipping undecodable image {path}: {exc}",
                          stacklevel=2)
            continue
        tensors.append(torch.from_numpy(rgb).permute(2, 0, 1))
        kept.append(path)
    if not tensors:
        return torch.empty(0), kept
    return torch.stack(tensors), kept


def extract(job: ExtractionJob) -> dict[int, Path]:
    """Run the job; returns the written embedding file per depth."""
    model = InceptionTaps(job.depths, checkpoint=job.checkpoint, seed=job.seed)
    paths = list_images(job.input_dir)
    rows: dict[int, list[np.ndarray]] = {d: [] for d in job.depths}
    used = 0
    for start in range(0, len(paths), job.batch_size):
        batch, kept = load_batch(paths[start:start + job.batch_size])
        if not kept:
            continue
        used += len(kept)
        activations = model(preprocess(batch))
        for depth, tensor in activations.items():
            rows[depth].append(tensor.numpy().astype(np.float32))
    if used == 0:
        raise FileNotFoundError(f"no decodable images in {job.input_dir}")

    out_dir = Path(job.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for depth in job.depths:
        data = np.concatenate(rows[depth], axis=0)
        assert data.shape == (used, depth)
        path = out_dir / f"depth_{depth}.emb"
        write_emb(path, data)
        sidecar = {
            "depth_label": depth,
            "source_collection": job.source_collection,
            "extractor_id": f"{job.extractor_id}|{PREPROCESSING}",
        }
        path.with_suffix(path.suffix + ".json").write_text(
            json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
        written[depth] = path
    return written
