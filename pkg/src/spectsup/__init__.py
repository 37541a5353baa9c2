"""Superiorized EM reconstruction for SPECT.

Forward simulation of attenuated parallel-beam projections, the classic
multiplicative EM (MLEM) iteration, perturbation-resilient superiorized EM
with TV and wavelet-l1 objectives, and a reproducible experiment harness.
"""
from .backend import active_backend
from .model import (
    ImageGrid,
    InfiniteKLError,
    Sinogram,
    SparseSystemMatrix,
    generalized_kl,
    kl_distance,
    project,
)

__version__ = "0.1.0"

__all__ = [
    "ImageGrid",
    "Sinogram",
    "SparseSystemMatrix",
    "InfiniteKLError",
    "project",
    "kl_distance",
    "generalized_kl",
    "active_backend",
    "__version__",
]
