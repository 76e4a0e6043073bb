"""Empirical mode decomposition by envelope sifting.

Envelopes are natural cubic splines through the local extrema, with the two
outermost extrema at each end mirrored about the signal boundary. Sifting of
one IMF stops on the aggregate Cauchy criterion
``sum((h_prev - h)^2) / sum(h_prev^2) < tol`` or after ``max_iter`` passes.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

__all__ = ["natural_spline", "find_extrema", "mean_envelope", "sift_imf", "emd", "emd_keep_from"]


def find_extrema(x):
    """Indices of interior maxima and minima; a flat run reports its first sample."""
    d = np.diff(x)
    maxima = np.flatnonzero((d[:-1] > 0) & (d[1:] <= 0)) + 1
    minima = np.flatnonzero((d[:-1] < 0) & (d[1:] >= 0)) + 1
    return maxima, minima


def natural_spline(knots, values, at):
    """Natural cubic spline through ``(knots, values)`` evaluated at ``at``.

    Same curve as ``scipy.interpolate.CubicSpline(..., bc_type="natural")``,
    solved directly as one tridiagonal system; that avoids the per-call
    overhead which dominates when thousands of short envelopes are built.
    """
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(values, dtype=float)
    h = np.diff(knots)
    slope = np.diff(values) / h
    n = len(knots)
    second = np.zeros(n)
    if n > 2:
        ab = np.zeros((3, n - 2))
        ab[0, 1:] = h[1:-1]
        ab[1] = 2.0 * (h[:-1] + h[1:])
        ab[2, :-1] = h[1:-1]
        second[1:-1] = solve_banded((1, 1), ab, 6.0 * np.diff(slope))
    seg = np.clip(np.searchsorted(knots, at, side="right") - 1, 0, n - 2)
    t = at - knots[seg]
    hs = h[seg]
    m0, m1 = second[seg], second[seg + 1]
    return (values[seg] + t * (slope[seg] - hs * (2 * m0 + m1) / 6.0)
            + t * t * m0 / 2.0 + t ** 3 * (m1 - m0) / (6.0 * hs))


def _envelope(x, locs, n_mirror=2):
    n = len(x)
    vals = x[locs]
    left = -locs[:n_mirror][::-1]
    right = 2 * (n - 1) - locs[-n_mirror:][::-1]
    knots = np.concatenate([left, locs, right])
    kvals = np.concatenate([vals[:n_mirror][::-1], vals, vals[-n_mirror:][::-1]])
    knots, first = np.unique(knots, return_index=True)
    kvals = kvals[first]
    if len(knots) < 2:
        return np.full(n, float(kvals[0]))
    return natural_spline(knots, kvals, np.arange(n, dtype=float))


def mean_envelope(x):
    """Mean of the upper and lower spline envelopes, or None if too few extrema."""
    maxima, minima = find_extrema(x)
    if len(maxima) < 1 or len(minima) < 1 or len(maxima) + len(minima) < 3:
        return None
    return 0.5 * (_envelope(x, maxima) + _envelope(x, minima))


def sift_imf(x, tol: float = 0.2, max_iter: int = 100):
    """Extract one IMF from ``x``; returns None when ``x`` has too few extrema."""
    h = np.array(x, dtype=float)
    if mean_envelope(h) is None:
        return None
    for _ in range(max_iter):
        m = mean_envelope(h)
        if m is None:
            break
        h_next = h - m
        denom = np.sum(h * h)
        sd = np.sum(m * m) / denom if denom > 0 else 0.0
        h = h_next
        if sd < tol:
            break
    return h


def emd(x, max_imfs: int | None = None, tol: float = 0.2, max_iter: int = 100):
    """Decompose ``x`` into IMFs plus a residual.

    Returns ``(imfs, residual)`` where ``imfs`` has shape ``(K, len(x))`` and
    ``imfs.sum(0) + residual`` reproduces ``x`` up to rounding.
    """
    x = np.asarray(x, dtype=float)
    residual = x.copy()
    imfs = []
    while max_imfs is None or len(imfs) < max_imfs:
        imf = sift_imf(residual, tol=tol, max_iter=max_iter)
        if imf is None:
            break
        imfs.append(imf)
        residual = residual - imf
    return np.array(imfs).reshape(len(imfs), len(x)), residual


def emd_keep_from(x, keep_from: int, tol: float = 0.2, max_iter: int = 100):
    """``sum(IMF_k for k >= keep_from) + residual`` (IMFs are 1-indexed).

    Only the first ``keep_from - 1`` IMFs are actually sifted: the kept part
    is ``x`` minus the discarded modes. When the decomposition has fewer
    than ``keep_from`` IMFs, the highest-index IMF is kept with the residual.
    """
    if keep_from < 1:
        raise ValueError("keep_from must be >= 1")
    x = np.asarray(x, dtype=float)
    if keep_from == 1:
        return x.copy()
    imfs, residual = emd(x, max_imfs=keep_from - 1, tol=tol, max_iter=max_iter)
    k = len(imfs)
    if k == 0:
        return x.copy()
    if k == keep_from - 1 and mean_envelope(residual) is not None:
        # residual still oscillates, so IMF_{keep_from} onward all live in it
        return residual
    return imfs[-1] + residual
