# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot kernels (EM sweep, ray tracer).

Mirrors spectsup._kernels_py; the algorithms and the order of floating-point
reductions are kept identical so both backends agree to machine precision.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, fabs, floor, sin

cnp.import_array()



def em_sweep(matrix, cnp.float64_t[::1] b, cnp.float64_t[::1] x, double eps):
    """One fused EM sweep over the CSR matrix; see the pure twin for docs."""
    cdef cnp.int64_t[::1] indptr = matrix.indptr
    cdef cnp.int64_t[::1] indices = matrix.indices
    cdef cnp.float64_t[::1] data = matrix.data
    cdef cnp.float64_t[::1] col_inv = matrix.inv_column_sums
    cdef Py_ssize_t m = matrix.rows
    cdef Py_ssize_t n = matrix.cols
    out = np.zeros(n)
    cdef cnp.float64_t[::1] acc = out
    cdef Py_ssize_t i, p, lo, hi
    cdef double d, r

    for i in range(m):
        if b[i] <= 0.0:
            continue
        lo = indptr[i]
        hi = indptr[i + 1]
        d = 0.0
        for p in range(lo, hi):
            d += data[p] * x[indices[p]]
        if d < eps:
            d = eps
        r = b[i] / d
        for p in range(lo, hi):
            acc[indices[p]] += data[p] * r
    for p in range(n):
        acc[p] = x[p] * acc[p] * col_inv[p]
    return out


cdef Py_ssize_t _trace_ray(const double* mu, Py_ssize_t w, Py_ssize_t h,
                           double ox, double oy, double dirx, double diry,
                           double ex, double ey, double dx,
                           double* ts_buf, double* len_buf,
                           cnp.int64_t* pix_buf, double* val_buf) nogil:
    """Trace one ray; fills pix/val with column-sorted entries, returns count."""
    cdef double tiny = 1e-12 * dx
    cdef double t0 = -1e308
    cdef double t1 = 1e308
    cdef double ta, tb

    if fabs(dirx) > 1e-12:
        ta = (-ex - ox) / dirx
        tb = (ex - ox) / dirx
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    elif ox < -ex or ox > ex:
        return 0
    if fabs(diry) > 1e-12:
        ta = (-ey - oy) / diry
        tb = (ey - oy) / diry
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    elif oy < -ey or oy > ey:
        return 0
    if not (t1 - t0 > tiny):
        return 0

    # merge the two monotone crossing families into ts_buf
    cdef Py_ssize_t nts = 0
    cdef long ix, iy, sx, sy
    cdef long ix_end, iy_end
    cdef double tx, ty
    ts_buf[nts] = t0
    nts += 1
    if fabs(dirx) > 1e-12:
        if dirx > 0:
            ix = 0; ix_end = w + 1; sx = 1
        else:
            ix = w; ix_end = -1; sx = -1
    else:
        ix = 0; ix_end = 0; sx = 1
    if fabs(diry) > 1e-12:
        if diry > 0:
            iy = 0; iy_end = h + 1; sy = 1
        else:
            iy = h; iy_end = -1; sy = -1
    else:
        iy = 0; iy_end = 0; sy = 1

    tx = (ix * dx - ex - ox) / dirx if ix != ix_end else 1e308
    ty = (iy * dx - ey - oy) / diry if iy != iy_end else 1e308
    while ix != ix_end or iy != iy_end:
        if tx <= ty:
            if tx >= t1 - tiny:
                break
            if tx > t0 + tiny:
                ts_buf[nts] = tx
                nts += 1
            ix += sx
            tx = (ix * dx - ex - ox) / dirx if ix != ix_end else 1e308
        else:
            if ty >= t1 - tiny:
                break
            if ty > t0 + tiny:
                ts_buf[nts] = ty
                nts += 1
            iy += sy
            ty = (iy * dx - ey - oy) / diry if iy != iy_end else 1e308
    ts_buf[nts] = t1
    nts += 1

    # segments -> pixel + chord length, merging consecutive duplicates
    cdef Py_ssize_t k, cnt = 0
    cdef double seg, tmid, px, py
    cdef long col, row
    cdef cnp.int64_t pid
    for k in range(nts - 1):
        seg = ts_buf[k + 1] - ts_buf[k]
        if seg <= tiny:
            continue
        tmid = ts_buf[k] + 0.5 * seg
        px = ox + tmid * dirx
        py = oy + tmid * diry
        col = <long>floor((px + ex) / dx)
        row = <long>floor((ey - py) / dx)
        if col < 0:
            col = 0
        elif col > w - 1:
            col = w - 1
        if row < 0:
            row = 0
        elif row > h - 1:
            row = h - 1
        pid = row * w + col
        if cnt > 0 and pix_buf[cnt - 1] == pid:
            len_buf[cnt - 1] += seg
        else:
            pix_buf[cnt] = pid
            len_buf[cnt] = seg
            cnt += 1
    if cnt == 0:
        return 0

    # attenuation: suffix sum of mu*l toward the detector, half of own chord
    cdef double suffix = 0.0
    cdef double ml
    for k in range(cnt - 1, -1, -1):
        ml = mu[pix_buf[k]] * len_buf[k]
        suffix += ml
        val_buf[k] = len_buf[k] * exp(-(suffix - 0.5 * ml))

    # insertion sort by pixel index (entries are few and nearly sorted)
    cdef Py_ssize_t a, bpos
    cdef double v
    for a in range(1, cnt):
        pid = pix_buf[a]
        v = val_buf[a]
        bpos = a
        while bpos > 0 and pix_buf[bpos - 1] > pid:
            pix_buf[bpos] = pix_buf[bpos - 1]
            val_buf[bpos] = val_buf[bpos - 1]
            bpos -= 1
        pix_buf[bpos] = pid
        val_buf[bpos] = v
    return cnt


def siddon_build(cnp.ndarray[cnp.float64_t, ndim=2] mu2d, double extent,
                 cnp.float64_t[::1] angles, int num_bins):
    """Attenuated parallel-beam system matrix; see the pure twin for docs."""
    cdef Py_ssize_t h = mu2d.shape[0]
    cdef Py_ssize_t w = mu2d.shape[1]
    cdef double ex = extent
    cdef double dx = 2.0 * ex / w
    cdef double ey = 0.5 * dx * h
    cdef double ds = 2.0 * ex / num_bins
    cdef Py_ssize_t n_views = angles.shape[0]
    cdef Py_ssize_t n_rays = n_views * num_bins
    cdef Py_ssize_t cap_row = w + h + 3

    mu_arr = np.ascontiguousarray(mu2d)
    cdef cnp.float64_t[::1] mu_flat = mu_arr.reshape(-1)

    indptr_arr = np.zeros(n_rays + 1, dtype=np.int64)
    indices_arr = np.empty(n_rays * cap_row, dtype=np.int64)
    values_arr = np.empty(n_rays * cap_row, dtype=np.float64)
    cdef cnp.int64_t[::1] indptr = indptr_arr
    cdef cnp.int64_t[::1] indices = indices_arr
    cdef cnp.float64_t[::1] values = values_arr

    ts_buf_arr = np.empty(2 * cap_row, dtype=np.float64)
    len_buf_arr = np.empty(2 * cap_row, dtype=np.float64)
    pix_buf_arr = np.empty(2 * cap_row, dtype=np.int64)
    val_buf_arr = np.empty(2 * cap_row, dtype=np.float64)
    cdef cnp.float64_t[::1] ts_buf = ts_buf_arr
    cdef cnp.float64_t[::1] len_buf = len_buf_arr
    cdef cnp.int64_t[::1] pix_buf = pix_buf_arr
    cdef cnp.float64_t[::1] val_buf = val_buf_arr

    cdef Py_ssize_t v, m, row, cnt, k, pos = 0
    cdef double phi, cphi, sphi, s

    for v in range(n_views):
        phi = angles[v]
        cphi = cos(phi)
        sphi = sin(phi)
        for m in range(num_bins):
            s = -ex + (m + 0.5) * ds
            cnt = _trace_ray(&mu_flat[0], w, h, s * cphi, s * sphi,
                             -sphi, cphi, ex, ey, dx,
                             &ts_buf[0], &len_buf[0], &pix_buf[0], &val_buf[0])
            row = v * num_bins + m
            for k in range(cnt):
                indices[pos] = pix_buf[k]
                values[pos] = val_buf[k]
                pos += 1
            indptr[row + 1] = pos

    return indptr_arr, indices_arr[:pos].copy(), values_arr[:pos].copy()
