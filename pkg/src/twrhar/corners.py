"""Seed points for the active contour from scale-space corners.

The working map is truncated to a binary image at a fraction of its maximum,
difference-of-Gaussian keypoints are located on that binary image, and two
seeds are derived from the corner set: the pixel nearest the corner centroid
(foreground) and the pixel with the largest mean distance to all corners
(background).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .maps import RadarMap

__all__ = [
    "BinaryMap",
    "SiftConfig",
    "CornerSet",
    "SeedPoints",
    "NoCornersError",
    "EmptySceneError",
    "threshold_truncate",
    "gaussian_pyramid",
    "dog_pyramid",
    "detect_corners",
    "seed_points",
    "fallback_seeds",
    "find_seeds",
]


class EmptySceneError(ValueError):
    """Raised when a map has no positive pixel to threshold against."""


class NoCornersError(RuntimeError):
    """Raised when no keypoint survives pruning."""


@dataclass
class BinaryMap:
    pixels: np.ndarray
    threshold_used: float

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if not np.isin(self.pixels, (0, 1)).all():
            raise ValueError("binary map pixels must be 0 or 1")

    @property
    def shape(self):
        return self.pixels.shape


@dataclass(frozen=True)
class SiftConfig:
    base_sigma: float = 1.6
    levels_per_octave: int = 3
    octave_count: int = 3
    contrast_threshold: float = 0.03
    hessian_edge_ratio_max: float = 10.0
    max_corners: int = 30
    min_separation: float = 3.0
    double_input: bool = True

    def __post_init__(self):
        if self.levels_per_octave < 1:
            raise ValueError("levels_per_octave must be >= 1")
        if self.octave_count < 1:
            raise ValueError("octave_count must be >= 1")
        if self.base_sigma <= 0:
            raise ValueError("base_sigma must be positive")
        if self.max_corners < 1:
            raise ValueError("max_corners must be >= 1")
        if self.hessian_edge_ratio_max <= 0:
            raise ValueError("hessian_edge_ratio_max must be positive")

    @property
    def scale_factor(self) -> float:
        return 2.0 ** (1.0 / self.levels_per_octave)


@dataclass
class CornerSet:
    """Corner pixel coordinates ``(n, m)`` with their ``|DoG|`` responses."""

    points: np.ndarray
    responses: np.ndarray

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class SeedPoints:
    near: tuple[int, int]
    far: tuple[int, int]
    centroid: tuple[float, float]


def threshold_truncate(rmap, cut: float = 0.3) -> BinaryMap:
    """Binarize at ``cut * max(map)``: 1 where pixel >= threshold."""
    if not 0 < cut < 1:
        raise ValueError("cut must lie in (0, 1)")
    pix = rmap.pixels if isinstance(rmap, RadarMap) else np.asarray(rmap, dtype=float)
    if pix.size == 0:
        raise ValueError("empty map")
    peak = float(pix.max())
    if peak <= 0:
        raise EmptySceneError("empty scene: map maximum is not positive")
    threshold = cut * peak
    return BinaryMap((pix >= threshold).astype(np.uint8), threshold)


def gaussian_pyramid(image, cfg: SiftConfig):
    """Per-octave stacks of ``levels_per_octave + 3`` blurred images.

    The first octave's level ``s`` is the input blurred at ``sigma * k**s``;
    each later octave starts from the previous octave's level
    ``levels_per_octave`` (twice the base blur) decimated by two. With
    ``double_input`` the first octave works on a bilinear upsampling in which
    input pixel ``i`` lands on sample ``2 i``, so features smaller than
    ``sigma`` still peak inside the scale stack.
    """
    k = cfg.scale_factor
    sigma = cfg.base_sigma
    n_levels = cfg.levels_per_octave + 3
    octaves = []
    image = np.asarray(image, dtype=float)
    if cfg.double_input:
        shape = tuple(2 * d - 1 for d in image.shape)
        image = ndimage.zoom(image, np.divide(shape, image.shape), order=1, output=float,
                             grid_mode=False)
    base = ndimage.gaussian_filter(image, sigma, mode="nearest")
    for o in range(cfg.octave_count):
        if o > 0:
            base = octaves[-1][cfg.levels_per_octave][::2, ::2]
            if min(base.shape) < 3:
                break
        levels = [base]
        for s in range(1, n_levels):
            extra = sigma * np.sqrt(k ** (2 * s) - 1.0)
            levels.append(ndimage.gaussian_filter(base, extra, mode="nearest"))
        octaves.append(np.stack(levels))
    return octaves


def dog_pyramid(image, cfg: SiftConfig):
    """Adjacent differences ``Gauss(k sigma) - Gauss(sigma)`` per octave."""
    return [np.diff(g, axis=0) for g in gaussian_pyramid(image, cfg)]


_CUBE = np.ones((3, 3, 3), dtype=bool)
_CUBE[1, 1, 1] = False


def _strict_extrema(dog):
    # value strictly above (or below) all 26 neighbors, interior voxels only
    hi = ndimage.maximum_filter(dog, footprint=_CUBE, mode="nearest")
    lo = ndimage.minimum_filter(dog, footprint=_CUBE, mode="nearest")
    ext = (dog > hi) | (dog < lo)
    ext[0] = ext[-1] = False
    ext[:, 0] = ext[:, -1] = False
    ext[:, :, 0] = ext[:, :, -1] = False
    return ext


def _edge_like(d, s, n, m, r):
    dnn = d[s, n + 1, m] + d[s, n - 1, m] - 2 * d[s, n, m]
    dmm = d[s, n, m + 1] + d[s, n, m - 1] - 2 * d[s, n, m]
    dnm = (d[s, n + 1, m + 1] - d[s, n + 1, m - 1] - d[s, n - 1, m + 1] + d[s, n - 1, m - 1]) / 4
    tr = dnn + dmm
    det = dnn * dmm - dnm * dnm
    return (det <= 0) | (tr * tr * r >= (r + 1) ** 2 * det)


def detect_corners(binary, cfg: SiftConfig = SiftConfig()) -> CornerSet:
    """Scale-space extrema of the DoG stack that pass contrast and edge tests.

    The image is scaled to a unit maximum first. Candidates from every
    octave are mapped back to full-resolution pixels; responses are
    ``|DoG|``. Among candidates closer than ``min_separation`` pixels only
    the strongest is kept, and at most ``max_corners`` are returned.
    """
    img = binary.pixels if isinstance(binary, BinaryMap) else np.asarray(binary)
    img = np.asarray(img, dtype=float)
    if img.ndim != 2 or min(img.shape) < 16:
        raise ValueError("corner detection needs an image of at least 16x16")
    peak = img.max()
    if peak <= 0:
        raise NoCornersError("no corners: blank image")
    img = img / peak

    pts, resp = [], []
    for o, dog in enumerate(dog_pyramid(img, cfg)):
        s, n, m = np.nonzero(_strict_extrema(dog))
        if len(s) == 0:
            continue
        val = np.abs(dog[s, n, m])
        keep = val >= cfg.contrast_threshold
        s, n, m, val = s[keep], n[keep], m[keep], val[keep]
        keep = ~_edge_like(dog, s, n, m, cfg.hessian_edge_ratio_max)
        scale = 2.0 ** (o - 1) if cfg.double_input else 2.0 ** o
        pts.append(np.stack([n[keep], m[keep]], axis=1) * scale)
        resp.append(val[keep])
    if not pts or sum(len(p) for p in pts) == 0:
        raise NoCornersError("no corners survived pruning")
    pts = np.concatenate(pts)
    resp = np.concatenate(resp)
    pts = np.clip(np.rint(pts), 0, np.array(img.shape) - 1)

    order = np.lexsort((pts[:, 1], pts[:, 0], -resp))
    chosen = []
    for idx in order:
        p = pts[idx]
        if all(np.hypot(*(p - pts[j])) >= cfg.min_separation for j in chosen):
            chosen.append(idx)
            if len(chosen) == cfg.max_corners:
                break
    chosen = np.array(chosen)
    return CornerSet(pts[chosen].astype(int), resp[chosen])


def seed_points(corners, dims) -> SeedPoints:
    """Foreground/background seeds over the full pixel grid.

    ``far`` maximizes the mean Euclidean distance to the corners and ``near``
    minimizes the distance to their centroid; ties go to the first pixel in
    row-major order.
    """
    pts = corners.points if isinstance(corners, CornerSet) else np.asarray(corners)
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("seed_points needs at least one corner")
    n_rows, n_cols = dims
    centroid = pts.mean(axis=0)
    nn, mm = np.mgrid[0:n_rows, 0:n_cols]
    mean_dist = np.zeros((n_rows, n_cols))
    for cn, cm in pts:
        mean_dist += np.sqrt((nn - cn) ** 2 + (mm - cm) ** 2)
    mean_dist /= len(pts)
    d_centroid = np.sqrt((nn - centroid[0]) ** 2 + (mm - centroid[1]) ** 2)
    far = np.unravel_index(np.argmax(mean_dist), dims)
    near = np.unravel_index(np.argmin(d_centroid), dims)
    return SeedPoints(near=(int(near[0]), int(near[1])), far=(int(far[0]), int(far[1])),
                      centroid=(float(centroid[0]), float(centroid[1])))


def fallback_seeds(dims) -> SeedPoints:
    """Seeds used when the scene yields no corners: center and origin."""
    center = (dims[0] // 2, dims[1] // 2)
    return SeedPoints(near=center, far=(0, 0), centroid=(float(center[0]), float(center[1])))


def find_seeds(rmap, cut: float = 0.3, cfg: SiftConfig = SiftConfig()):
    """Threshold, detect corners and derive seeds, falling back on empty scenes.

    Returns ``(seeds, corners)``; ``corners`` is None when the fallback was used.
    """
    pix = rmap.pixels if isinstance(rmap, RadarMap) else np.asarray(rmap, dtype=float)
    try:
        corners = detect_corners(threshold_truncate(pix, cut), cfg)
    except (EmptySceneError, NoCornersError):
        return fallback_seeds(pix.shape), None
    return seed_points(corners, pix.shape), corners
