"""File formats: image CSV/PGM, sinogram CSV, system-matrix cache, run logs.

Images round-trip through flat CSV (one image row per line, row-major);
16-bit PGM output is max-scaled and meant for eyeballing only — it is lossy
and never read back.  Sinograms carry a two-line header with the geometry.
The system-matrix cache is a little-endian binary CSR dump keyed by a
content hash of the attenuation map and acquisition parameters.
"""
from __future__ import annotations

import csv
import hashlib
from pathlib import Path

import numpy as np

from .model import ImageGrid, Sinogram, SparseSystemMatrix

_MATRIX_MAGIC = b"SPSUPMAT"


def save_image_csv(image, path):
    arr = image.as_2d() if isinstance(image, ImageGrid) else np.asarray(image)
    np.savetxt(path, arr, delimiter=",", fmt="%.17g")


def load_image_csv(path, extent):
    arr = np.loadtxt(path, delimiter=",", ndmin=2)
    return ImageGrid.from_2d(arr, extent)


def save_image_pgm(image, path):
    """Max-scaled 16-bit binary PGM for visual inspection (lossy)."""
    arr = image.as_2d() if isinstance(image, ImageGrid) else np.asarray(image)
    peak = arr.max()
    scaled = np.zeros_like(arr) if peak <= 0 else arr / peak * 65535.0
    pixels = np.round(scaled).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n65535\n".encode("ascii"))
        fh.write(pixels.tobytes())


def save_sinogram_csv(sino, path):
    with open(path, "w") as fh:
        fh.write(f"views={sino.num_views} bins={sino.num_bins}\n")
        fh.write(",".join(f"{a:.17g}" for a in sino.view_angles) + "\n")
        for row in sino.as_2d():
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_sinogram_csv(path):
    with open(path) as fh:
        header = fh.readline().split()
        num_views = int(header[0].split("=")[1])
        num_bins = int(header[1].split("=")[1])
        angles = np.array([float(t) for t in fh.readline().split(",")])
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    return Sinogram(num_views, num_bins, angles, values.reshape(-1))


def matrix_cache_key(attenuation, acq):
    """Content hash of (attenuation map, acquisition geometry)."""
    h = hashlib.sha256()
    h.update(np.asarray([attenuation.width, attenuation.height], dtype=np.int64).tobytes())
    h.update(np.float64(attenuation.extent).tobytes())
    h.update(attenuation.pixels.tobytes())
    h.update(np.asarray([acq.num_views, acq.num_bins], dtype=np.int64).tobytes())
    h.update(np.float64(acq.angular_range).tobytes())
    return h.hexdigest()[:16]


def save_matrix(matrix, path):
    """Binary CSR dump: magic, M, N, nnz, views, bins (int64 LE), angles,
    then indptr / indices / values."""
    with open(path, "wb") as fh:
        fh.write(_MATRIX_MAGIC)
        np.asarray(
            [matrix.rows, matrix.cols, matrix.nnz, matrix.num_views, matrix.num_bins],
            dtype="<i8",
        ).tofile(fh)
        matrix.view_angles.astype("<f8").tofile(fh)
        matrix.indptr.astype("<i8").tofile(fh)
        matrix.indices.astype("<i8").tofile(fh)
        matrix.data.astype("<f8").tofile(fh)


def load_matrix(path):
    with open(path, "rb") as fh:
        if fh.read(len(_MATRIX_MAGIC)) != _MATRIX_MAGIC:
            raise ValueError(f"{path} is not a system-matrix cache file")
        rows, cols, nnz, num_views, num_bins = np.fromfile(fh, dtype="<i8", count=5)
        angles = np.fromfile(fh, dtype="<f8", count=num_views)
        indptr = np.fromfile(fh, dtype="<i8", count=rows + 1)
        indices = np.fromfile(fh, dtype="<i8", count=nnz)
        values = np.fromfile(fh, dtype="<f8", count=nnz)
    return SparseSystemMatrix(rows, cols, indptr, indices, values,
                              num_views=num_views, num_bins=num_bins,
                              view_angles=angles)


def cached_system_matrix(attenuation, acq, cache_dir):
    """Build the system matrix, reusing a cached copy when one matches."""
    from .projector import build_system_matrix

    if cache_dir is None:
        return build_system_matrix(attenuation, acq)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"{matrix_cache_key(attenuation, acq)}.sysmat"
    if path.exists():
        return load_matrix(path)
    matrix = build_system_matrix(attenuation, acq)
    save_matrix(matrix, path)
    return matrix


TRAJECTORY_COLUMNS = [
    "k", "kl", "tv", "l1", "mse", "beta", "ln1p_beta",
    "inner_tries", "condition_lhs", "condition_rhs", "accepted_variant",
]


def save_trajectory_csv(rows, path):
    """Write per-iteration log rows (dicts keyed by TRAJECTORY_COLUMNS)."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRAJECTORY_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def save_summary_csv(rows, path):
    """Summary table: one row per algorithm with the best-MSE iterate."""
    fields = ["algorithm", "tv", "l1", "mse", "rmse", "iteration"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
