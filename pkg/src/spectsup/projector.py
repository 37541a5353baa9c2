"""Attenuated forward model and the two-step Poisson noise procedure.

The system matrix entry a_ij is the intersection length of ray i with pixel
j, weighted by exp(-integral of mu from the segment midpoint out to the
detector).  One ray is traced per detector bin (perfect parallel
collimator); bin centers span the grid extent exactly, so the bin width is
2*extent/num_bins.  At view angle phi the rays travel along
(-sin phi, cos phi): at phi = 0 the detector sits above the grid and it
sweeps through the left side to the bottom as phi grows to pi, which fixes
the left/right asymmetry of the attenuation blur.
"""
from __future__ import annotations

import numpy as np

from . import backend
from .model import ImageGrid, Sinogram, SparseSystemMatrix
from .phantom import AcquisitionSpec


def build_system_matrix(attenuation, acq):
    """Attenuated system matrix for the given attenuation map and acquisition.

    Rays that miss the grid produce empty rows; pixels no ray touches come
    out masked (H_j = 0).
    """
    if not isinstance(attenuation, ImageGrid):
        raise TypeError("attenuation must be an ImageGrid")
    angles = np.ascontiguousarray(acq.view_angles, dtype=np.float64)
    indptr, indices, values = backend.siddon_build(
        attenuation.as_2d(), attenuation.extent, angles, acq.num_bins
    )
    return SparseSystemMatrix(
        rows=acq.num_views * acq.num_bins,
        cols=attenuation.size,
        indptr=indptr,
        indices=indices,
        data=values,
        num_views=acq.num_views,
        num_bins=acq.num_bins,
        view_angles=angles,
    )


def simulate_counts(noise_free, target_counts, seed):
    """Scale a noise-free sinogram to the target total and Poisson-sample it.

    Step 1 multiplies all values by target_counts/sum so the expected total
    equals target_counts; step 2 replaces each value by a Poisson draw with
    that mean.  Sampling uses numpy's PCG64 generator seeded with ``seed``
    in a single pass over the bins in storage order, so results are
    reproducible bit for bit for a fixed seed and numpy version.
    """
    total = noise_free.values.sum()
    if total <= 0:
        raise ValueError("noise-free sinogram must have positive total")
    if target_counts <= 0:
        raise ValueError("target_counts must be positive")
    means = noise_free.values * (float(target_counts) / total)
    rng = np.random.default_rng(seed)
    counts = rng.poisson(means).astype(np.float64)
    return noise_free.with_values(counts)
