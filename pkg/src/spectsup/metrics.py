"""Image quality metrics against a reference image."""
from __future__ import annotations

import numpy as np

from .model import ImageGrid


def _flat(x):
    return x.pixels if isinstance(x, ImageGrid) else np.asarray(x, dtype=np.float64).reshape(-1)


def mse(x, reference):
    """Mean square error (1/N) * sum (x_j - ref_j)^2."""
    a = _flat(x)
    r = _flat(reference)
    if a.size != r.size:
        raise ValueError("image shapes differ")
    diff = a - r
    return float(diff @ diff) / a.size


def rmse(x, reference):
    """Relative MSE: sqrt(sum (x - ref)^2 / sum ref^2)."""
    a = _flat(x)
    r = _flat(reference)
    if a.size != r.size:
        raise ValueError("image shapes differ")
    denom = float(r @ r)
    if denom == 0.0:
        raise ValueError("reference image is identically zero")
    diff = a - r
    return float(np.sqrt((diff @ diff) / denom))
