"""Pure numpy/scipy implementations of the hot kernels.

These are the fallback used when the compiled extension is unavailable; the
interfaces match spectsup._kernels exactly.  Both backends must produce the
same results (tested to tight tolerances), and both are deterministic:
reductions run in fixed storage order.
"""
from __future__ import annotations

import numpy as np

_TINY = 1e-12


def em_sweep(matrix, b, x, eps):
    """One fused EM sweep: out_j = x_j/H_j * sum_i a_ij b_i / max(d_i(x), eps).

    Rows with b_i = 0 contribute nothing (their ratio is 0 by the K-L
    convention).  Masked columns (H_j = 0) come out 0.
    """
    d = matrix.tocsr() @ x
    ratio = np.zeros_like(d)
    pos = b > 0
    ratio[pos] = b[pos] / np.maximum(d[pos], eps)
    back = matrix.tocsr_transpose() @ ratio
    return x * back * matrix.inv_column_sums


def _ray_entries(mu2d, ox, oy, dirx, diry, ex, ey, dx):
    """Pixel indices and attenuated intersection weights for a single ray.

    The ray is p(t) = (ox, oy) + t*(dirx, diry) with the detector at
    t = +inf; weights are l_ij * exp(-integral of mu from the segment
    midpoint to the detector side of the grid).
    """
    h, w = mu2d.shape
    tiny = _TINY * dx

    # slab clipping against [-ex, ex] x [-ey, ey]
    t0, t1 = -np.inf, np.inf
    for o, dr, e in ((ox, dirx, ex), (oy, diry, ey)):
        if abs(dr) > _TINY:
            ta = (-e - o) / dr
            tb = (e - o) / dr
            if ta > tb:
                ta, tb = tb, ta
            t0 = max(t0, ta)
            t1 = min(t1, tb)
        elif not (-e <= o <= e):
            return None
    if not (t1 - t0 > tiny):
        return None

    crossings = [np.array([t0, t1])]
    if abs(dirx) > _TINY:
        tx = (np.arange(w + 1) * dx - ex - ox) / dirx
        crossings.append(tx[(tx > t0 + tiny) & (tx < t1 - tiny)])
    if abs(diry) > _TINY:
        ty = (np.arange(h + 1) * dx - ey - oy) / diry
        crossings.append(ty[(ty > t0 + tiny) & (ty < t1 - tiny)])
    ts = np.sort(np.concatenate(crossings))

    lengths = np.diff(ts)
    keep = lengths > tiny
    if not np.any(keep):
        return None
    lengths = lengths[keep]
    tmid = (ts[:-1] + 0.5 * np.diff(ts))[keep]

    cols = np.floor((ox + tmid * dirx + ex) / dx).astype(np.int64)
    rows = np.floor((ey - (oy + tmid * diry)) / dx).astype(np.int64)
    np.clip(cols, 0, w - 1, out=cols)
    np.clip(rows, 0, h - 1, out=rows)
    pix = rows * w + cols

    # merge consecutive duplicate pixels (can arise from near-degenerate
    # crossings at pixel corners)
    if pix.size > 1:
        new_run = np.empty(pix.size, dtype=bool)
        new_run[0] = True
        np.not_equal(pix[1:], pix[:-1], out=new_run[1:])
        if not new_run.all():
            idx = np.flatnonzero(new_run)
            lengths = np.add.reduceat(lengths, idx)
            pix = pix[idx]

    mu_l = mu2d.reshape(-1)[pix] * lengths
    # attenuation from each segment midpoint to the detector (t = +inf side):
    # full mu*l of every later segment plus half of the segment's own
    suffix = np.cumsum(mu_l[::-1])[::-1] - 0.5 * mu_l
    values = lengths * np.exp(-suffix)
    return pix, values


def siddon_build(mu2d, extent, angles, num_bins):
    """Attenuated parallel-beam system matrix in CSR form.

    One ray per detector bin; bin centers span [-extent, extent].  At view
    angle phi rays travel along (-sin phi, cos phi) toward the detector.
    Returns (indptr, indices, values) with column indices sorted per row.
    """
    mu2d = np.ascontiguousarray(mu2d, dtype=np.float64)
    h, w = mu2d.shape
    ex = float(extent)
    dx = 2.0 * ex / w
    ey = 0.5 * dx * h
    ds = 2.0 * ex / num_bins

    indptr = np.zeros(len(angles) * num_bins + 1, dtype=np.int64)
    all_cols = []
    all_vals = []
    row = 0
    for phi in angles:
        cphi, sphi = np.cos(phi), np.sin(phi)
        for m in range(num_bins):
            s = -ex + (m + 0.5) * ds
            hit = _ray_entries(mu2d, s * cphi, s * sphi, -sphi, cphi, ex, ey, dx)
            if hit is not None:
                pix, values = hit
                order = np.argsort(pix, kind="stable")
                all_cols.append(pix[order])
                all_vals.append(values[order])
                indptr[row + 1] = indptr[row] + pix.size
            else:
                indptr[row + 1] = indptr[row]
            row += 1

    if all_cols:
        indices = np.concatenate(all_cols)
        values = np.concatenate(all_vals)
    else:
        indices = np.zeros(0, dtype=np.int64)
        values = np.zeros(0)
    return indptr, indices, values
