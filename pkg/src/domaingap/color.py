"""Color-distribution metrics.

Sample-normalized hue (day) and grayscale (night) histograms, their
aggregation over collections, and Pearson correlation between aggregates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .imageops import Image, hue_image


class HistDomain(enum.Enum):
    HUE_DEGREES = "hue_degrees"  # angles in [0, 360)
    GRAY = "gray"  # 8-bit values in [0, 255]


@dataclass(frozen=True)
class NormalizedHistogram:
    """Fixed-bin non-negative weight vector summing to 1 (when support > 0)."""

    domain: HistDomain
    weights: np.ndarray
    support: int  # number of contributing pixels

    def __post_init__(self):
        w = self.weights
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if np.any(w < 0):
            raise ValueError("histogram weights must be non-negative")
        if self.support > 0 and abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {w.sum()}, expected 1")
        if self.support == 0 and np.any(w != 0):
            raise ValueError("zero-support histogram must have all-zero weights")

    @property
    def bin_count(self) -> int:
        return self.weights.shape[0]


def hue_histogram(image: Image, bins: int = 64) -> NormalizedHistogram:
    """Per-sample normalized hue distribution over the chromatic pixels.

    Achromatic pixels carry no hue and are excluded; an image with no
    chromatic pixels yields support 0 and all-zero weights.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    hues, mask = hue_image(image)
    chroma = hues[mask]
    support = chroma.size
    weights = np.zeros(bins, dtype=np.float64)
    if support > 0:
        idx = np.minimum((chroma / 360.0 * bins).astype(np.intp), bins - 1)
        counts = np.bincount(idx, minlength=bins).astype(np.float64)
        weights = counts / support
    return NormalizedHistogram(HistDomain.HUE_DEGREES, weights, int(support))


def gray_histogram(image: Image, bins: int = 256) -> NormalizedHistogram:
    """Per-sample normalized distribution of 8-bit gray values."""
    if not image.is_gray:
        raise ValueError("gray_histogram requires a single-channel image")
    if bins < 2:
        raise ValueError("need at least 2 bins")
    vals = image.pixels.ravel()
    idx = (vals.astype(np.intp) * bins) >> 8  # floor(v * bins / 256)
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    return NormalizedHistogram(HistDomain.GRAY, counts / vals.size, int(vals.size))


def aggregate(histograms: list[NormalizedHistogram]) -> NormalizedHistogram:
    """Unweighted mean of per-sample distributions, renormalized to sum 1.

    Zero-support histograms are excluded: each contributing image counts
    equally regardless of its pixel count.
    """
    if not histograms:
        raise ValueError("nothing to aggregate")
    domain = histograms[0].domain
    bins = histograms[0].bin_count
    for h in histograms:
        if h.domain is not domain or h.bin_count != bins:
            raise ValueError("histograms must share domain and bin count")
    usable = [h for h in histograms if h.support > 0]
    if not usable:
        raise ValueError("all histograms have zero support")
    stacked = np.stack([h.weights for h in usable])
    mean = stacked.mean(axis=0)
    mean = mean / mean.sum()
    return NormalizedHistogram(domain, mean, sum(h.support for h in usable))


def pearson_vec(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation of two paired vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise ValueError("correlation undefined for a constant vector")
    return float(dx @ dy) / math.sqrt(sx * sy)


def pearson(a: NormalizedHistogram, b: NormalizedHistogram) -> float:
    """Pearson correlation between two histograms, bins as paired observations."""
    if a.domain is not b.domain or a.bin_count != b.bin_count:
        raise ValueError("histograms must share domain and bin count")
    return pearson_vec(a.weights, b.weights)


def histogram_to_rows(h: NormalizedHistogram) -> list[tuple[int, float]]:
    """(bin_index, weight) rows for CSV/JSON export."""
    return [(i, float(w)) for i, w in enumerate(h.weights)]
