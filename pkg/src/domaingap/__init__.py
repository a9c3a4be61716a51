"""Image-collection domain gap measurement toolkit.

Measures the statistical gap between image collections (e.g. rendered,
translated-rendered, and real camera-trap imagery) along three axes:
color-distribution correlation, gray-level co-occurrence texture features,
and Frechet distance between deep-feature Gaussians at several network
depths. A classification error-rate comparison report rounds out the
picture.
"""

__version__ = "0.1.0"
