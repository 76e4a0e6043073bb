"""Range-time and Doppler-time maps from a pulse-compressed echo.

Processing chain: MTI first difference along slow time, modulus (RTM), EMD
denoising of every range bin's slow-time series, summation over range and a
Hann-windowed STFT (DTM), and bilinear resizing to the working scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .echo import EchoMatrix, RadarParams
from .emd import emd_keep_from

__all__ = [
    "RadarMap",
    "EmdConfig",
    "StftConfig",
    "mti_filter",
    "rtm_from_echo",
    "emd_denoise",
    "stft_magnitude",
    "dtm_from_rtm",
    "stft_frame_count",
    "resize_map",
    "echo_to_map",
]


@dataclass
class RadarMap:
    """Real nonnegative image with axis metadata.

    ``kind`` is ``"rtm"`` (rows are range in meters) or ``"dtm"`` (rows are
    Doppler frequency in Hz); columns are slow time in seconds.
    """

    pixels: np.ndarray
    row_axis: np.ndarray
    col_axis: np.ndarray
    kind: str = "rtm"

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 2:
            raise ValueError("map pixels must be 2-D")
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("map contains non-finite pixels")
        if np.any(self.pixels < 0):
            raise ValueError("map pixels must be nonnegative")
        self.row_axis = np.asarray(self.row_axis, dtype=float)
        self.col_axis = np.asarray(self.col_axis, dtype=float)
        if self.row_axis.shape != (self.pixels.shape[0],):
            raise ValueError("row_axis length must equal the number of rows")
        if self.col_axis.shape != (self.pixels.shape[1],):
            raise ValueError("col_axis length must equal the number of columns")
        if self.kind not in ("rtm", "dtm"):
            raise ValueError(f"unknown map kind {self.kind!r}")

    @property
    def shape(self):
        return self.pixels.shape


@dataclass(frozen=True)
class EmdConfig:
    max_imfs: int = 10
    keep_from: int = 3
    sift_stop_tolerance: float = 0.2
    max_sift_iterations: int = 100

    def __post_init__(self):
        if not 1 <= self.keep_from <= self.max_imfs:
            raise ValueError("need 1 <= keep_from <= max_imfs")
        if self.sift_stop_tolerance <= 0 or self.max_sift_iterations < 1:
            raise ValueError("invalid sifting stop settings")


@dataclass(frozen=True)
class StftConfig:
    window_len_s: float = 0.5
    hop_s: float = 0.05
    window_shape: str = field(default="hann")

    def __post_init__(self):
        if not 0 < self.hop_s <= self.window_len_s:
            raise ValueError("need 0 < hop_s <= window_len_s")
        if self.window_shape not in ("hann", "hanning"):
            raise ValueError("only the Hann window is supported")

    def samples(self, pri_s: float) -> tuple[int, int]:
        length = int(round(self.window_len_s / pri_s))
        hop = max(1, int(round(self.hop_s / pri_s)))
        if length < 4:
            raise ValueError(f"window spans {length} pulses; need at least 4")
        return length, hop


def mti_filter(echo: EchoMatrix) -> EchoMatrix:
    """Slow-time first difference; column 0 is zero."""
    y = echo.data
    if y.shape[1] < 2:
        raise ValueError("MTI needs at least two pulses")
    out = np.zeros_like(y)
    out[:, 1:] = y[:, 1:] - y[:, :-1]
    return EchoMatrix(out, echo.params)


def rtm_from_echo(echo: EchoMatrix) -> RadarMap:
    p = echo.params
    return RadarMap(np.abs(echo.data), p.range_axis(), p.slow_time_axis(), kind="rtm")


def emd_denoise(rtm: RadarMap, cfg: EmdConfig = EmdConfig()) -> RadarMap:
    """Drop IMFs ``1..keep_from-1`` from every range bin's slow-time series.

    The reconstruction is clipped at zero to keep the map nonnegative.
    """
    pix = rtm.pixels
    if pix.shape[1] < 8:
        raise ValueError("EMD needs at least 8 slow-time samples per range bin")
    out = np.empty_like(pix)
    for n, series in enumerate(pix):
        if np.ptp(series) == 0:
            out[n] = series
            continue
        out[n] = emd_keep_from(series, cfg.keep_from, tol=cfg.sift_stop_tolerance,
                               max_iter=cfg.max_sift_iterations)
    np.maximum(out, 0.0, out=out)
    return replace(rtm, pixels=out)


def stft_frame_count(n_samples: int, length: int, hop: int) -> int:
    return (n_samples - length) // hop + 1


def stft_magnitude(signal, pri_s: float, cfg: StftConfig = StftConfig()):
    """Hann-windowed STFT magnitude of a real slow-time signal.

    Frame ``k`` covers pulses ``[k P, k P + L)``. Returns ``(magnitude,
    doppler_hz, frame_centers_s)``; ``magnitude`` has one row per Doppler
    bin on the centered grid ``[-f_r/2, f_r/2)`` and one column per frame.
    """
    s = np.asarray(signal, dtype=float)
    length, hop = cfg.samples(pri_s)
    if len(s) < length:
        raise ValueError(f"window of {length} pulses is longer than the {len(s)}-pulse signal")
    n_frames = stft_frame_count(len(s), length, hop)
    starts = np.arange(n_frames) * hop
    frames = s[starts[:, None] + np.arange(length)[None, :]] * np.hanning(length)[None, :]
    spectra = np.fft.fftshift(np.fft.fft(frames, axis=1), axes=1)
    doppler = np.fft.fftshift(np.fft.fftfreq(length, d=pri_s))
    centers = (starts + (length - 1) / 2) * pri_s
    return np.abs(spectra).T, doppler, centers


def dtm_from_rtm(rtm: RadarMap, params: RadarParams, cfg: StftConfig = StftConfig()) -> RadarMap:
    """Doppler-time map: STFT magnitude of the range-summed RTM."""
    mag, doppler, centers = stft_magnitude(rtm.pixels.sum(axis=0), params.pri_s, cfg)
    t0 = rtm.col_axis[0] if len(rtm.col_axis) else 0.0
    return RadarMap(mag, doppler, t0 + centers, kind="dtm")


def _interp_coords(n_in: int, n_out: int):
    # half-pixel-centered sampling positions, clamped to the valid range
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0, n_in - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, pos - lo


def _resize_2d(img, target_n, target_m):
    r0, r1, wr = _interp_coords(img.shape[0], target_n)
    c0, c1, wc = _interp_coords(img.shape[1], target_m)
    rows = img[r0] * (1 - wr)[:, None] + img[r1] * wr[:, None]
    return rows[:, c0] * (1 - wc)[None, :] + rows[:, c1] * wc[None, :]


def resize_map(rmap, target_n: int, target_m: int):
    """Bilinear resize of a :class:`RadarMap` (or bare 2-D array).

    Output values are convex combinations of input pixels, so the range of
    the map can only shrink.
    """
    if target_n < 2 or target_m < 2:
        raise ValueError("target dimensions must be >= 2")
    if not isinstance(rmap, RadarMap):
        return _resize_2d(np.asarray(rmap, dtype=float), target_n, target_m)
    if rmap.shape == (target_n, target_m):
        return replace(rmap, pixels=rmap.pixels.copy())
    pix = _resize_2d(rmap.pixels, target_n, target_m)
    rows = _resize_2d(rmap.row_axis[:, None].repeat(2, 1), target_n, 2)[:, 0]
    cols = _resize_2d(rmap.col_axis[:, None].repeat(2, 1), target_m, 2)[:, 0]
    return RadarMap(pix, rows, cols, kind=rmap.kind)


def echo_to_map(echo: EchoMatrix, kind: str = "rtm", emd_cfg: EmdConfig = EmdConfig(),
                stft_cfg: StftConfig = StftConfig(), size: tuple[int, int] | None = None) -> RadarMap:
    """Full chain echo -> MTI -> RTM -> EMD -> (DTM) -> resize."""
    if kind not in ("rtm", "dtm"):
        raise ValueError(f"unknown map kind {kind!r}")
    rtm = emd_denoise(rtm_from_echo(mti_filter(echo)), emd_cfg)
    out = rtm if kind == "rtm" else dtm_from_rtm(rtm, echo.params, stft_cfg)
    if size is not None:
        out = resize_map(out, *size)
    return out
