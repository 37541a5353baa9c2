"""Perturbation generators for the superiorization loops.

Three ways to produce a candidate point y from the current iterate x and a
step length beta:

* TV scheme: y = x + beta*v where v is the l-inf-normalized negative
  (smoothed) subgradient of the total variation at x.
* Wavelet l1 schemes: threshold the wavelet coefficients of x (hard or
  soft) at beta and transform back; the direction is never formed
  explicitly.

Either way, positivity is repaired afterwards: entries of y that came out
<= 0 are replaced by x/2.  The effective direction (y - x)/beta is what the
perturbed-EM theory sees, so the sign sets S- / S+ are bookkept from it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ImageGrid
from .wavelet import CoefficientPyramid, dwt2, idwt2, l1_norm

TV_SMOOTHING_DEFAULT = 1e-8


def _as_2d(x):
    if isinstance(x, ImageGrid):
        return x.as_2d()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a 2-D image")
    return x


def tv_value(x):
    """Total variation: sum over the first H-1 rows and W-1 columns of
    sqrt((x[i+1,j]-x[i,j])^2 + (x[i,j+1]-x[i,j])^2).

    The last row and column contribute no terms of their own, exactly as the
    defining double sum is written.
    """
    img = _as_2d(x)
    dv = img[1:, :-1] - img[:-1, :-1]
    dh = img[:-1, 1:] - img[:-1, :-1]
    return float(np.sqrt(dv * dv + dh * dh).sum())


def tv_direction(x, smoothing_eps=TV_SMOOTHING_DEFAULT):
    """l-inf-normalized descent direction of TV at x.

    The magnitude of each sqrt term is floored at smoothing_eps before
    dividing, which picks one deterministic subgradient element at the
    nondifferentiable points.  Returns a flat array with max |v| = 1, or all
    zeros when TV is already stationary (constant image).
    """
    img = _as_2d(x)
    h, w = img.shape
    dv = img[1:, :-1] - img[:-1, :-1]
    dh = img[:-1, 1:] - img[:-1, :-1]
    mag = np.sqrt(dv * dv + dh * dh)
    np.maximum(mag, smoothing_eps, out=mag)
    gv = dv / mag
    gh = dh / mag
    grad = np.zeros((h, w))
    grad[:-1, :-1] -= gv + gh
    grad[1:, :-1] += gv
    grad[:-1, 1:] += gh
    s = -grad.reshape(-1)
    peak = np.max(np.abs(s))
    if peak == 0.0:
        return s
    return s / peak


def threshold_coeffs(pyramid, beta, mode):
    """Hard or soft thresholding of every coefficient (approximation band
    included) at level beta.  Never increases any |alpha_j|."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if mode == "hard":
        def fn(band):
            return np.where(np.abs(band) >= beta, band, 0.0)
    elif mode == "soft":
        def fn(band):
            return np.where(np.abs(band) >= beta, band - np.sign(band) * beta, 0.0)
    else:
        raise ValueError(f"mode must be 'hard' or 'soft', got {mode!r}")
    return pyramid.map_bands(fn)


def repair_positivity(x, y_raw, active_mask=None):
    """Enforce positivity: where y_raw <= 0, fall back to x/2.

    Masked (inactive) pixels are pinned at 0 when a mask is given.  With
    x > 0 on active pixels the result is strictly positive there.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y_raw, dtype=np.float64).reshape(-1)
    out = np.where(y > 0.0, y, 0.5 * x)
    if active_mask is not None:
        out[~active_mask] = 0.0
    return out


@dataclass
class PerturbationProposal:
    """A candidate perturbed point plus the bookkeeping the Theorem-2
    condition evaluator needs."""

    y: np.ndarray            # proposed point (post positivity repair), flat
    v: np.ndarray            # effective direction (y - x)/beta; zeros if beta = 0
    beta: float
    s_minus: np.ndarray      # indices with v_j < 0
    s_plus: np.ndarray       # indices with v_j > 0
    phi_before: float        # phi(x)
    phi_after: float         # phi(y)


def _finish_proposal(x_flat, y, beta, phi_before, phi_after):
    if beta > 0:
        v = (y - x_flat) / beta
    else:
        v = np.zeros_like(x_flat)
    return PerturbationProposal(
        y=y,
        v=v,
        beta=float(beta),
        s_minus=np.flatnonzero(v < 0),
        s_plus=np.flatnonzero(v > 0),
        phi_before=float(phi_before),
        phi_after=float(phi_after),
    )


def propose_tv(x, beta, smoothing_eps=TV_SMOOTHING_DEFAULT, active_mask=None,
               direction=None, phi_x=None):
    """TV perturbation proposal at step length beta.

    ``direction`` and ``phi_x`` allow the caller to reuse the direction and
    TV value across retries at shrinking beta (both depend on x only).
    """
    img = _as_2d(x)
    h, w = img.shape
    x_flat = img.reshape(-1)
    if direction is None:
        direction = tv_direction(img, smoothing_eps)
    if phi_x is None:
        phi_x = tv_value(img)
    y = repair_positivity(x_flat, x_flat + beta * direction, active_mask)
    phi_y = tv_value(y.reshape(h, w))
    return _finish_proposal(x_flat, y, beta, phi_x, phi_y)


def propose_l1(x, beta, mode, spec, active_mask=None, coeffs=None, phi_x=None):
    """Wavelet-l1 perturbation proposal via hard/soft coefficient
    thresholding at beta.

    ``coeffs`` may carry dwt2(x) precomputed by the caller; phi values are
    l1 norms of wavelet coefficients: phi_before of x, phi_after of the
    repaired y (one extra forward transform).
    """
    img = _as_2d(x)
    h, w = img.shape
    x_flat = img.reshape(-1)
    if coeffs is None:
        coeffs = dwt2(img, spec)
    if phi_x is None:
        phi_x = l1_norm(coeffs)
    y_raw = idwt2(threshold_coeffs(coeffs, beta, mode), spec)
    y = repair_positivity(x_flat, y_raw, active_mask)
    phi_y = l1_norm(dwt2(y.reshape(h, w), spec))
    return _finish_proposal(x_flat, y, beta, phi_x, phi_y)
