"""Shared data model: images, sinograms, the sparse system matrix and the
Kullback-Leibler distance.

Conventions
-----------
Images are stored flat in row-major order: the pixel in column p and row q
(both 1-based) sits at index j = (q-1)*W + p - 1.  Row 0 is the top of the
image; the physical coordinates of a pixel center are
x = -extent + (p - 1/2)*delta, y = extent_y - (q - 1/2)*delta with
delta = 2*extent/W.  All arrays are float64.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class InfiniteKLError(ArithmeticError):
    """Raised when the K-L distance is +infinity (b_i > 0 with d_i = 0)."""


def _as_float_vector(values, name):
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass
class ImageGrid:
    """Nonnegative 2-D pixel array with a physical extent.

    ``extent`` is the physical half-width in cm; pixels are square with side
    2*extent/width, so the y half-extent is extent*height/width.
    """

    width: int
    height: int
    extent: float
    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = _as_float_vector(self.pixels, "pixels")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        if self.extent <= 0:
            raise ValueError("extent must be positive")
        if self.pixels.size != self.width * self.height:
            raise ValueError(
                f"expected {self.width * self.height} pixels, got {self.pixels.size}"
            )
        if np.any(self.pixels < 0):
            raise ValueError("pixel values must be nonnegative")

    @property
    def size(self):
        return self.width * self.height

    @property
    def pixel_size(self):
        return 2.0 * self.extent / self.width

    def as_2d(self):
        """(height, width) view of the pixel buffer; shares memory."""
        return self.pixels.reshape(self.height, self.width)

    def with_pixels(self, pixels):
        """Same geometry, new pixel values."""
        return ImageGrid(self.width, self.height, self.extent, pixels)

    @classmethod
    def from_2d(cls, array, extent):
        array = np.asarray(array, dtype=np.float64)
        h, w = array.shape
        return cls(w, h, extent, array.reshape(-1).copy())

    @classmethod
    def uniform(cls, width, height, extent, value=0.0):
        return cls(width, height, extent, np.full(width * height, float(value)))


@dataclass
class Sinogram:
    """Per-view, per-bin nonnegative counts, flat row-major by view."""

    num_views: int
    num_bins: int
    view_angles: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.view_angles = _as_float_vector(self.view_angles, "view_angles")
        self.values = _as_float_vector(self.values, "values")
        if self.view_angles.size != self.num_views:
            raise ValueError("number of view angles must equal num_views")
        if self.values.size != self.num_views * self.num_bins:
            raise ValueError(
                f"expected {self.num_views * self.num_bins} values, got {self.values.size}"
            )
        if np.any(self.values < 0):
            raise ValueError("sinogram values must be nonnegative")

    @property
    def size(self):
        return self.num_views * self.num_bins

    def as_2d(self):
        """(num_views, num_bins) view; shares memory."""
        return self.values.reshape(self.num_views, self.num_bins)

    def with_values(self, values):
        return Sinogram(self.num_views, self.num_bins, self.view_angles, values)


class SparseSystemMatrix:
    """Row-compressed nonnegative system matrix with cached column sums.

    Rows index detector bins (view-major), columns index pixels.  Column sums
    H_j = sum_i a_ij are cached at construction together with the mask of
    active columns (H_j > 0); columns outside the mask carry no matrix
    entries at all.
    """

    def __init__(self, rows, cols, indptr, indices, data,
                 num_views=None, num_bins=None, view_angles=None):
        self.rows = int(rows)
        self.cols = int(cols)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if self.indptr.size != self.rows + 1:
            raise ValueError("indptr length must be rows + 1")
        if self.indices.size != self.data.size:
            raise ValueError("indices and data must have equal length")
        if np.any(self.data < 0):
            raise ValueError("matrix entries must be nonnegative")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.cols):
            raise ValueError("column index out of range")
        if num_views is None:
            num_views, num_bins = 1, self.rows
            view_angles = np.zeros(1)
        self.num_views = int(num_views)
        self.num_bins = int(num_bins)
        self.view_angles = _as_float_vector(view_angles, "view_angles")

        self.column_sums = np.bincount(
            self.indices, weights=self.data, minlength=self.cols
        ).astype(np.float64)
        self.active_column_mask = self.column_sums > 0.0
        self._csr = None
        self._csr_t = None
        self._inv_colsum = None

    @property
    def nnz(self):
        return self.data.size

    @classmethod
    def from_dense(cls, dense, **geometry):
        """Build from a dense 2-D array (test helper)."""
        dense = np.asarray(dense, dtype=np.float64)
        m = sp.csr_matrix(dense)
        m.sort_indices()
        return cls(dense.shape[0], dense.shape[1],
                   m.indptr, m.indices, m.data, **geometry)

    def tocsr(self):
        """scipy CSR view of the matrix (cached)."""
        if self._csr is None:
            self._csr = sp.csr_matrix(
                (self.data, self.indices, self.indptr), shape=(self.rows, self.cols)
            )
        return self._csr

    def tocsr_transpose(self):
        """scipy CSR of the transpose, for the back-projection pass (cached)."""
        if self._csr_t is None:
            self._csr_t = self.tocsr().T.tocsr()
        return self._csr_t

    @property
    def inv_column_sums(self):
        """1/H_j on active columns, 0 on masked ones (cached)."""
        if self._inv_colsum is None:
            inv = np.zeros(self.cols)
            np.divide(1.0, self.column_sums, out=inv, where=self.active_column_mask)
            self._inv_colsum = inv
        return self._inv_colsum

    def recomputed_column_sums(self):
        return np.bincount(self.indices, weights=self.data, minlength=self.cols)


def project(matrix, image):
    """Forward projection d(x) with d_i = sum_j a_ij x_j.

    Returns a Sinogram carrying the matrix's acquisition geometry.
    """
    if isinstance(image, ImageGrid):
        x = image.pixels
    else:
        x = _as_float_vector(image, "image")
    if x.size != matrix.cols:
        raise ValueError(
            f"image length {x.size} does not match matrix columns {matrix.cols}"
        )
    if np.any(x < 0):
        raise ValueError("image must be nonnegative")
    values = matrix.tocsr() @ x
    # clip tiny negative round-off from products of nonnegatives (cannot occur
    # mathematically, but keeps the Sinogram invariant airtight)
    np.maximum(values, 0.0, out=values)
    return Sinogram(matrix.num_views, matrix.num_bins, matrix.view_angles, values)


def generalized_kl(p, q):
    """Generalized K-L distance I(p, q) = sum p ln(p/q) - p + q of vectors.

    Entries with p_i = 0 contribute q_i (the 0*ln 0 limit); p_i > 0 with
    q_i = 0 raises InfiniteKLError.
    """
    p = _as_float_vector(p, "p")
    q = _as_float_vector(q, "q")
    if p.size != q.size:
        raise ValueError(f"shape mismatch: {p.size} vs {q.size}")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("K-L distance requires nonnegative inputs")
    pos = p > 0
    if np.any(q[pos] == 0):
        raise InfiniteKLError("p_i > 0 where q_i = 0: K-L distance is infinite")
    pp = p[pos]
    qq = q[pos]
    return float(np.sum(pp * np.log(pp / qq) - pp) + np.sum(q))


def kl_distance(measured, projected):
    """K-L distance between a measured sinogram b and a projection d = Ax."""
    if isinstance(measured, Sinogram) and isinstance(projected, Sinogram):
        if (measured.num_views, measured.num_bins) != (projected.num_views, projected.num_bins):
            raise ValueError("sinogram shapes differ")
        return generalized_kl(measured.values, projected.values)
    b = measured.values if isinstance(measured, Sinogram) else measured
    d = projected.values if isinstance(projected, Sinogram) else projected
    return generalized_kl(b, d)
