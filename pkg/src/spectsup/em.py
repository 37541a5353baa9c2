"""The multiplicative EM operator and the classic EM loop.

The EM operator is P_j(x) = (x_j / H_j) * sum_i a_ij b_i / d_i(x) with
d_i(x) = sum_j a_ij x_j.  Equivalently P_j(x) = x_j * f_j(x) where
f_j(x) = (1/H_j) * sum_i a_ij b_i / d_i(x); a fixed point has f_j = 1 on its
support.  Each step decreases the K-L distance I(b, Ax) and conserves
sum_j H_j x_j = sum_i b_i.

Masked columns (H_j = 0) have no matrix entries; their update is 0/0 in the
exact formula, so they are frozen at zero and excluded from all diagnostics.
Ray sums d_i are floored at a small eps when a row with b_i > 0 would
otherwise divide by ~0; the floor never engages on strictly positive
iterates over active columns.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .model import ImageGrid, Sinogram, SparseSystemMatrix, generalized_kl


def _pixels(x):
    return x.pixels if isinstance(x, ImageGrid) else np.asarray(x, dtype=np.float64)


@dataclass
class EmWorkspace:
    """System matrix + measured data + the eps floor for ray sums."""

    matrix: SparseSystemMatrix
    data: Sinogram
    eps_floor: float = None

    def __post_init__(self):
        if self.data.size != self.matrix.rows:
            raise ValueError(
                f"sinogram size {self.data.size} does not match matrix rows {self.matrix.rows}"
            )
        if self.eps_floor is None:
            # 1e-12 of the mean count per ray; only a guard against 0/0
            self.eps_floor = 1e-12 * self.data.values.sum() / self.matrix.rows
        if self.eps_floor <= 0:
            self.eps_floor = np.finfo(np.float64).tiny

    @property
    def b(self):
        return self.data.values

    def projection(self, x):
        """d(x) = A x as a raw array (no validation; internal fast path)."""
        return self.matrix.tocsr() @ _pixels(x)

    def kl(self, x):
        """I_A^b(x), the K-L distance between the data and the projection."""
        return generalized_kl(self.b, self.projection(x))

    def f_values(self, x):
        """f_j(x) on active columns (0 on masked ones)."""
        d = self.projection(x)
        ratio = np.zeros_like(d)
        pos = self.b > 0
        ratio[pos] = self.b[pos] / np.maximum(d[pos], self.eps_floor)
        return (self.matrix.tocsr_transpose() @ ratio) * self.matrix.inv_column_sums


def em_step(workspace, x):
    """One EM update P(x).  Accepts an ImageGrid or a flat array and returns
    the same kind; raises on negative input entries."""
    arr = _pixels(x)
    if np.any(arr < 0):
        raise ValueError("EM step requires a nonnegative image")
    out = backend.em_sweep(workspace.matrix, workspace.b, arr, workspace.eps_floor)
    if isinstance(x, ImageGrid):
        return x.with_pixels(out)
    return out


def em_step_raw(workspace, x):
    """P(x) on a raw array without validation (loop-internal fast path)."""
    return backend.em_sweep(workspace.matrix, workspace.b, x, workspace.eps_floor)


@dataclass
class EmTrajectory:
    """Iterates x^0..x^K and the K-L value at each."""

    iterates: list
    kl: np.ndarray

    @property
    def final(self):
        return self.iterates[-1]

    def __len__(self):
        return len(self.iterates)


def run_classic_em(workspace, x0, iters):
    """Run the classic EM iteration and record the K-L trajectory."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    x = _pixels(x0).copy()
    if np.any(x < 0):
        raise ValueError("initial image must be nonnegative")
    iterates = [x.copy()]
    kl = [workspace.kl(x)]
    for _ in range(iters):
        x = em_step_raw(workspace, x)
        iterates.append(x)
        kl.append(workspace.kl(x))
    return EmTrajectory(iterates, np.asarray(kl))


def fixed_point_residual(workspace, x):
    """I(P(x), x): zero exactly at fixed points of the EM operator."""
    arr = _pixels(x)
    return generalized_kl(em_step_raw(workspace, arr), arr)


@dataclass
class KTReport:
    """Kuhn-Tucker check: a K-L minimizer has f_j = 1 on its support and
    f_j <= 1 where x_j = 0 (masked columns excluded from both)."""

    max_support_violation: float   # max |f_j - 1| over x_j > tol
    max_zero_violation: float      # max (f_j - 1) over x_j <= tol
    tol: float

    def max_violation(self):
        return max(self.max_support_violation, self.max_zero_violation, 0.0)


def kt_check(workspace, x, tol=1e-8):
    arr = _pixels(x)
    f = workspace.f_values(arr)
    active = workspace.matrix.active_column_mask
    support = active & (arr > tol)
    off = active & (arr <= tol)
    sup_v = float(np.max(np.abs(f[support] - 1.0))) if np.any(support) else 0.0
    off_v = float(np.max(f[off] - 1.0)) if np.any(off) else 0.0
    return KTReport(sup_v, off_v, tol)


def kl_gradient(workspace, x):
    """Gradient of I_A^b at x: dI/dx_j = H_j * (1 - f_j(x)) on active columns."""
    arr = _pixels(x)
    return workspace.matrix.column_sums * (1.0 - workspace.f_values(arr))
