"""Contour point clouds and Mapper-cover edge similarity.

Two clouds are compared on a shared rectangular cover spanning their joint
bounding box. An edge between neighboring cover cells is present for a cloud
when at least one of its points lies in the cells' overlap rectangle
(closed intervals). Similarity is the Jaccard index of the two edge sets,
and a cloud is assigned the class whose templates sum to the highest
similarity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from skimage import measure

__all__ = [
    "PointCloud",
    "MapperCover",
    "EdgeSet",
    "TemplateLibrary",
    "EmptyContourError",
    "contour_pointcloud",
    "build_cover",
    "edge_set",
    "jaccard_similarity",
    "similarity",
    "classify",
]


class EmptyContourError(ValueError):
    """The level set has no zero crossing."""


@dataclass
class PointCloud:
    """Ordered 2-D points ``(x, y)``: x is the column, y the row coordinate."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(self.points) < 1:
            raise ValueError("a point cloud needs at least one point")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("point cloud has non-finite coordinates")

    def __len__(self):
        return len(self.points)

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]


def contour_pointcloud(phi1) -> PointCloud:
    """Zero-level marching-squares contour of ``phi1`` as one point cloud.

    Vertices of every contour piece are concatenated in traversal order.
    """
    phi1 = np.asarray(phi1, dtype=float)
    if not (np.any(phi1 >= 0) and np.any(phi1 < 0)):
        raise EmptyContourError("empty contour: level set has no sign change")
    pieces = measure.find_contours(phi1, 0.0)
    if not pieces:
        raise EmptyContourError("empty contour: no zero-level crossing found")
    rc = np.concatenate(pieces)
    return PointCloud(rc[:, ::-1])


@dataclass(frozen=True)
class MapperCover:
    grid_counts: tuple[int, int]
    overlap_factor: float
    bounds: tuple[float, float, float, float]

    def __post_init__(self):
        n_x, n_y = self.grid_counts
        if n_x < 2 or n_y < 2:
            raise ValueError("cover needs at least 2 cells per axis")
        if self.overlap_factor <= 1:
            raise ValueError("overlap factor must exceed 1")
        min_x, max_x, min_y, max_y = self.bounds
        if not (max_x > min_x and max_y > min_y):
            raise ValueError("cover bounds must have positive extent")

    @property
    def steps(self) -> tuple[float, float]:
        min_x, max_x, min_y, max_y = self.bounds
        n_x, n_y = self.grid_counts
        return (max_x - min_x) / (n_x - 1), (max_y - min_y) / (n_y - 1)

    @property
    def cell_sizes(self) -> tuple[float, float]:
        step_x, step_y = self.steps
        return step_x * self.overlap_factor, step_y * self.overlap_factor

    @property
    def n_edges(self) -> int:
        n_x, n_y = self.grid_counts
        return (n_x - 1) * n_y + n_x * (n_y - 1)

    def horizontal_id(self, i, j):
        return np.asarray(i) * self.grid_counts[1] + np.asarray(j)

    def vertical_id(self, i, j):
        n_x, n_y = self.grid_counts
        return (n_x - 1) * n_y + np.asarray(i) * (n_y - 1) + np.asarray(j)

    def decode(self, edge_id: int):
        """``("h" | "v", i, j)`` for an integer edge id."""
        n_x, n_y = self.grid_counts
        n_h = (n_x - 1) * n_y
        if edge_id < n_h:
            return ("h", edge_id // n_y, edge_id % n_y)
        k = edge_id - n_h
        return ("v", k // (n_y - 1), k % (n_y - 1))


def build_cover(pc_a: PointCloud, pc_b: PointCloud, n_x: int = 100, n_y: int = 100,
                of: float = 1.5) -> MapperCover:
    """Cover of the joint bounding box; a flat axis is widened by +-0.5."""
    pts = np.concatenate([pc_a.points, pc_b.points])
    min_x, min_y = pts.min(axis=0)
    max_x, max_y = pts.max(axis=0)
    if max_x == min_x:
        min_x, max_x = min_x - 0.5, max_x + 0.5
    if max_y == min_y:
        min_y, max_y = min_y - 0.5, max_y + 0.5
    return MapperCover((int(n_x), int(n_y)), float(of),
                       (float(min_x), float(max_x), float(min_y), float(max_y)))


@dataclass(frozen=True)
class EdgeSet:
    """Sorted unique integer edge ids together with the cover they refer to."""

    ids: np.ndarray
    cover: MapperCover

    def __len__(self):
        return len(self.ids)

    def as_tuples(self) -> set:
        return {self.cover.decode(int(e)) for e in self.ids}


def _members(u, coord, lo_shift, half, count, origin, step, size):
    """Cell indices ``i`` whose interval ``[origin + (i + lo_shift) step - size/2,
    origin + i step + size/2]`` contains ``coord``.

    The index range follows from the scaled coordinate ``u``; only the two
    candidates at each end are rechecked against the exact interval bounds,
    so points on a boundary are decided the same way as by a direct test.
    Returns ``(index, valid)`` arrays, one row per point.
    """
    c = coord
    # smallest i with origin + i step + size/2 >= c
    first = np.floor(u - half).astype(np.int64) - 1
    first += ~(origin + first * step + size / 2 >= c)
    first += ~(origin + first * step + size / 2 >= c)
    # largest i with origin + (i + lo_shift) step - size/2 <= c
    last = np.floor(u - lo_shift + half).astype(np.int64) + 1
    last -= ~(origin + (last + lo_shift) * step - size / 2 <= c)
    last -= ~(origin + (last + lo_shift) * step - size / 2 <= c)
    first = np.maximum(first, 0)
    last = np.minimum(last, count - 1)
    n_ok = np.maximum(last - first + 1, 0)
    k = max(int(n_ok.max(initial=0)), 1)
    offsets = np.arange(k)[None, :]
    return first[:, None] + offsets, offsets < n_ok[:, None]


def _pairs(a_idx, a_ok, b_idx, b_ok):
    both = a_ok[:, :, None] & b_ok[:, None, :]
    p, i, j = np.nonzero(both)
    return a_idx[p, i], b_idx[p, j]


def edge_set(pc: PointCloud, cover: MapperCover) -> EdgeSet:
    """Edges whose overlap rectangle contains at least one cloud point."""
    n_x, n_y = cover.grid_counts
    min_x, _, min_y, _ = cover.bounds
    step_x, step_y = cover.steps
    s_x, s_y = cover.cell_sizes
    x, y = pc.x, pc.y
    ux = (x - min_x) / step_x
    uy = (y - min_y) / step_y
    half = cover.overlap_factor / 2

    # horizontal (i, j) -> (i + 1, j): x in the shifted overlap, y in cell j
    hx = _members(ux, x, 1.0, half, n_x - 1, min_x, step_x, s_x)
    cy = _members(uy, y, 0.0, half, n_y, min_y, step_y, s_y)
    horizontal = cover.horizontal_id(*_pairs(*hx, *cy))
    # vertical (i, j) -> (i, j + 1): x in cell i, y in the shifted overlap
    cx = _members(ux, x, 0.0, half, n_x, min_x, step_x, s_x)
    vy = _members(uy, y, 1.0, half, n_y - 1, min_y, step_y, s_y)
    vertical = cover.vertical_id(*_pairs(*cx, *vy))
    return EdgeSet(np.unique(np.concatenate([horizontal, vertical])).astype(np.int64), cover)


def jaccard_similarity(e1: EdgeSet, e2: EdgeSet) -> float:
    """``|e1 & e2| / |e1 | e2|``; two empty sets count as identical."""
    if e1.cover != e2.cover:
        raise ValueError("edge sets were built on different covers")
    if len(e1) == 0 and len(e2) == 0:
        return 1.0
    inter = len(np.intersect1d(e1.ids, e2.ids, assume_unique=True))
    union = len(e1) + len(e2) - inter
    return inter / union


def similarity(pc_a: PointCloud, pc_b: PointCloud, n_x: int = 100, n_y: int = 100,
               of: float = 1.5) -> float:
    cover = build_cover(pc_a, pc_b, n_x, n_y, of)
    return jaccard_similarity(edge_set(pc_a, cover), edge_set(pc_b, cover))


@dataclass
class TemplateLibrary:
    """Per-class template point clouds, all extracted with one configuration."""

    classes: dict
    map_type: str = "rtm"
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.map_type not in ("rtm", "dtm"):
            raise ValueError(f"unknown map type {self.map_type!r}")
        self.classes = {int(k): [c if isinstance(c, PointCloud) else PointCloud(c) for c in v]
                        for k, v in sorted(self.classes.items())}
        counts = {len(v) for v in self.classes.values()}
        if len(counts) > 1:
            raise ValueError(f"classes hold different template counts: {sorted(counts)}")
        if counts == {0}:
            raise ValueError("every class needs at least one template")

    @property
    def labels(self) -> list:
        return list(self.classes)

    @property
    def per_class(self) -> int:
        return len(next(iter(self.classes.values()))) if self.classes else 0

    def __len__(self):
        return sum(len(v) for v in self.classes.values())

    def save(self, directory) -> Path:
        """Write ``manifest.json`` plus ``class_<label>/template_<i>.csv`` files."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        files = {}
        for label, clouds in self.classes.items():
            sub = directory / f"class_{label:02d}"
            sub.mkdir(exist_ok=True)
            names = []
            for i, pc in enumerate(clouds):
                name = f"class_{label:02d}/template_{i:03d}.csv"
                np.savetxt(directory / name, pc.points, delimiter=",", fmt="%.10g",
                           header="x,y", comments="")
                names.append(name)
            files[str(label)] = names
        manifest = {"map_type": self.map_type, "labels": self.labels,
                    "per_class": self.per_class, "hyperparameters": self.hyperparameters,
                    "files": files}
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
        return directory

    @classmethod
    def load(cls, directory) -> "TemplateLibrary":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        classes = {}
        for label, names in manifest["files"].items():
            classes[int(label)] = [
                PointCloud(np.loadtxt(directory / n, delimiter=",", skiprows=1, ndmin=2))
                for n in names]
        return cls(classes, manifest["map_type"], manifest.get("hyperparameters", {}))


def classify(pc: PointCloud, library: TemplateLibrary, n_x: int = 100, n_y: int = 100,
             of: float = 1.5):
    """Label with the largest class-summed similarity; ties go to the smaller label.

    Returns ``(label, scores)`` where ``scores`` maps each label to the list
    of per-template similarities.
    """
    if library is None or len(library) == 0:
        raise ValueError("template library is empty")
    scores = {label: [similarity(pc, t, n_x, n_y, of) for t in templates]
              for label, templates in library.classes.items()}
    best, best_sum = None, -np.inf
    for label in sorted(scores):
        total = float(np.sum(scores[label]))
        if total > best_sum:
            best, best_sum = label, total
    return best, scores
