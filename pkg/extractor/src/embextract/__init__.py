"""Pooled Inception activation extractor.

Taps a pretrained (or deterministically seeded) Inception V3 at the four
canonical feature depths (64, 192, 768, 2048), global-average-pools each
tap, and writes one EMB1 embedding file per depth.
"""

__version__ = "0.1.0"
