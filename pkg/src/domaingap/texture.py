"""Gray-level co-occurrence matrices and Haralick-style texture features.

Contrast, homogeneity (inverse difference moment), energy, and entropy
(natural log), computed per patch and averaged over a collection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imageops import Image, Patch, extract_patches, patches_from_list

# Distance-1 offsets at 0/45/90/135 degrees; the symmetrized matrix makes
# the sign convention irrelevant.
DEFAULT_OFFSETS: tuple[tuple[int, int], ...] = ((1, 0), (1, 1), (0, 1), (-1, 1))

DEFAULT_LEVELS = 16


@dataclass(frozen=True)
class Glcm:
    levels: int
    matrix: np.ndarray  # (levels, levels)
    offsets: tuple[tuple[int, int], ...]
    symmetric: bool
    normalized: bool

    def __post_init__(self):
        if self.matrix.shape != (self.levels, self.levels):
            raise ValueError("matrix shape does not match levels")
        if np.any(self.matrix < 0):
            raise ValueError("GLCM entries must be non-negative")
        if self.normalized and abs(self.matrix.sum() - 1.0) > 1e-9:
            raise ValueError(f"normalized GLCM sums to {self.matrix.sum()}")
        if self.symmetric and not np.array_equal(self.matrix, self.matrix.T):
            raise ValueError("symmetric GLCM must equal its transpose")


@dataclass(frozen=True)
class GlcmFeatures:
    contrast: float
    homogeneity: float
    energy: float
    entropy: float
    patch_count: int
    levels: int

    def as_dict(self) -> dict[str, float]:
        return {
            "contrast": self.contrast,
            "homogeneity": self.homogeneity,
            "energy": self.energy,
            "entropy": self.entropy,
        }


def quantize(patch: Patch, levels: int) -> Patch:
    """Reduce gray levels: v -> floor(v * levels / 256)."""
    if not 2 <= levels <= 256:
        raise ValueError("levels must be in [2, 256]")
    q = (patch.pixels.astype(np.uint16) * levels) >> 8
    return Patch(origin=patch.origin, pixels=q.astype(np.uint8))


def glcm(
    patch: Patch,
    offsets: tuple[tuple[int, int], ...] = DEFAULT_OFFSETS,
    levels: int = DEFAULT_LEVELS,
) -> Glcm:
    """Symmetrized, normalized co-occurrence matrix accumulated over offsets."""
    px = patch.pixels.astype(np.intp)
    if px.max() >= levels:
        raise ValueError(f"patch has values >= levels={levels}; quantize first")
    side = patch.side
    counts = np.zeros((levels, levels), dtype=np.float64)
    for dx, dy in offsets:
        if abs(dx) >= side or abs(dy) >= side:
            raise ValueError(f"offset ({dx},{dy}) larger than patch side {side}")
        ys = slice(max(0, -dy), side - max(0, dy))
        xs = slice(max(0, -dx), side - max(0, dx))
        ys2 = slice(max(0, dy), side - max(0, -dy))
        xs2 = slice(max(0, dx), side - max(0, -dx))
        a = px[ys, xs].ravel()
        b = px[ys2, xs2].ravel()
        np.add.at(counts, (a, b), 1.0)
    counts = counts + counts.T
    matrix = counts / counts.sum()
    return Glcm(levels=levels, matrix=matrix, offsets=tuple(offsets),
                symmetric=True, normalized=True)


def glcm_features(g: Glcm) -> GlcmFeatures:
    """Contrast, homogeneity, energy, entropy of a normalized GLCM."""
    if not g.normalized:
        raise ValueError("glcm_features requires a normalized GLCM")
    p = g.matrix
    i, j = np.indices(p.shape)
    d2 = (i - j) ** 2
    contrast = float((p * d2).sum())
    homogeneity = float((p / (1.0 + d2)).sum())
    energy = float((p * p).sum())
    nz = p[p > 0]
    entropy = float(-(nz * np.log(nz)).sum())
    return GlcmFeatures(contrast=contrast, homogeneity=homogeneity,
                        energy=energy, entropy=max(entropy, 0.0),
                        patch_count=1, levels=g.levels)


def patch_features(
    patch: Patch,
    offsets: tuple[tuple[int, int], ...] = DEFAULT_OFFSETS,
    levels: int = DEFAULT_LEVELS,
) -> GlcmFeatures:
    return glcm_features(glcm(quantize(patch, levels), offsets, levels))


def average_features(features: list[GlcmFeatures]) -> GlcmFeatures:
    if not features:
        raise ValueError("no features to average")
    levels = features[0].levels
    n = len(features)
    return GlcmFeatures(
        contrast=sum(f.contrast for f in features) / n,
        homogeneity=sum(f.homogeneity for f in features) / n,
        energy=sum(f.energy for f in features) / n,
        entropy=sum(f.entropy for f in features) / n,
        patch_count=sum(f.patch_count for f in features),
        levels=levels,
    )


def collection_features(
    images: list[Image],
    patches_per_image: int = 4,
    side: int = 20,
    seed: int = 0,
    levels: int = DEFAULT_LEVELS,
    offsets: tuple[tuple[int, int], ...] = DEFAULT_OFFSETS,
    manual_patches: list[list[tuple[int, int, int]] | None] | None = None,
) -> GlcmFeatures:
    """Per-patch features averaged over every patch of every image.

    `manual_patches`, when given, overrides the seeded sampling per image
    with explicit (x, y, side) entries.
    """
    if not images:
        raise ValueError("need at least one image")
    feats: list[GlcmFeatures] = []
    for k, image in enumerate(images):
        override = manual_patches[k] if manual_patches else None
        if override:
            patches = patches_from_list(image, override)
        else:
            # Per-image seed keeps patch positions independent of list order
            # changes elsewhere in the pipeline.
            patches = extract_patches(image, side, patches_per_image,
                                      seed=_image_seed(seed, k))
        feats.extend(patch_features(p, offsets, levels) for p in patches)
    return average_features(feats)


def _image_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def feature_deltas(a: GlcmFeatures, b: GlcmFeatures) -> dict[str, float]:
    """Component-wise absolute differences |a - b|."""
    da, db = a.as_dict(), b.as_dict()
    return {k: abs(da[k] - db[k]) for k in da}
