import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.interpolate import CubicSpline

from twrhar.emd import emd, emd_keep_from, find_extrema, mean_envelope, natural_spline


@given(st.integers(3, 30), st.integers(0, 2**32 - 1))
def test_natural_spline_matches_scipy(n, seed):
    rng = np.random.default_rng(seed)
    knots = np.cumsum(rng.uniform(0.2, 3.0, n))
    values = rng.normal(size=n)
    at = np.linspace(knots[0] - 1, knots[-1] + 1, 97)
    ref = CubicSpline(knots, values, bc_type="natural")(at)
    assert np.allclose(natural_spline(knots, values, at), ref, atol=1e-10, rtol=1e-10)


def test_natural_spline_two_knots_is_linear():
    out = natural_spline([0.0, 2.0], [1.0, 5.0], np.array([0.0, 0.5, 2.0]))
    assert np.allclose(out, [1.0, 2.0, 5.0])


def test_find_extrema_small_case():
    x = np.array([0, 2, 1, 3, 0, 0, 1])
    mx, mn = find_extrema(x)
    assert list(mx) == [1, 3]
    # the flat run 0,0 reports its first sample
    assert list(mn) == [2, 4]


def test_mean_envelope_none_for_monotone():
    assert mean_envelope(np.arange(20.0)) is None


@given(arrays(float, st.integers(16, 120), elements=st.floats(-5, 5, allow_nan=False)))
def test_emd_completeness(x):
    imfs, residual = emd(x, tol=0.2, max_iter=50)
    recon = imfs.sum(axis=0) + residual
    scale = max(np.linalg.norm(x), 1e-12)
    assert np.linalg.norm(recon - x) / scale <= 1e-6


def test_emd_constant_has_no_imfs():
    imfs, residual = emd(np.full(64, 3.5))
    assert imfs.shape == (0, 64)
    assert np.array_equal(residual, np.full(64, 3.5))
    assert np.array_equal(emd_keep_from(np.full(64, 3.5), 3), np.full(64, 3.5))


def test_keep_from_one_returns_input():
    x = np.random.default_rng(3).normal(size=100)
    assert np.array_equal(emd_keep_from(x, 1), x)


def test_keep_from_rejects_zero():
    with pytest.raises(ValueError):
        emd_keep_from(np.zeros(10), 0)


def test_keep_two_removes_jitter():
    rng = np.random.default_rng(11)
    t = np.arange(256)
    clean = np.sin(2 * np.pi * t / 64)
    noisy = clean + 0.3 * rng.normal(size=t.size)
    kept = emd_keep_from(noisy, 2)
    assert np.corrcoef(kept, clean)[0, 1] > np.corrcoef(noisy, clean)[0, 1]


def test_keep_from_equals_full_decomposition_tail():
    # the shortcut agrees with sifting everything and summing the tail
    x = np.random.default_rng(5).normal(size=200).cumsum()
    imfs, residual = emd(x)
    assert len(imfs) >= 3
    tail = imfs[2:].sum(axis=0) + residual
    assert np.allclose(emd_keep_from(x, 3), tail, atol=1e-9)
