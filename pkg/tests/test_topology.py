import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from twrhar.topology import (
    EdgeSet,
    EmptyContourError,
    MapperCover,
    PointCloud,
    TemplateLibrary,
    build_cover,
    classify,
    contour_pointcloud,
    edge_set,
    jaccard_similarity,
    similarity,
)


def brute_edges(points, cover):
    # every edge's overlap rectangle checked against every point
    n_x, n_y = cover.grid_counts
    min_x, _, min_y, _ = cover.bounds
    sx, sy = cover.steps
    cx, cy = cover.cell_sizes
    found = set()
    for i in range(n_x - 1):
        for j in range(n_y):
            x0, x1 = min_x + (i + 1) * sx - cx / 2, min_x + i * sx + cx / 2
            y0, y1 = min_y + j * sy - cy / 2, min_y + j * sy + cy / 2
            if any(x0 <= x <= x1 and y0 <= y <= y1 for x, y in points):
                found.add(("h", i, j))
    for i in range(n_x):
        for j in range(n_y - 1):
            x0, x1 = min_x + i * sx - cx / 2, min_x + i * sx + cx / 2
            y0, y1 = min_y + (j + 1) * sy - cy / 2, min_y + j * sy + cy / 2
            if any(x0 <= x <= x1 and y0 <= y <= y1 for x, y in points):
                found.add(("v", i, j))
    return found


def brute_jaccard(a, b):
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def disk_phi(size, centre, radius):
    nn, mm = np.mgrid[0:size, 0:size]
    return np.where((nn - centre[0]) ** 2 + (mm - centre[1]) ** 2 < radius ** 2, 1.0, -1.0)


def test_disk_contour_radius():
    rho = 20.0
    pc = contour_pointcloud(disk_phi(64, (32, 30), rho))
    r = np.hypot(pc.x - 30, pc.y - 32)
    assert np.all(np.abs(r - rho) <= 1.0)
    assert abs(r.mean() - rho) <= 0.02 * rho


def test_all_positive_phi_has_no_contour():
    with pytest.raises(EmptyContourError):
        contour_pointcloud(np.ones((10, 10)))


def test_linear_field_contour():
    xx = np.tile(np.arange(10.0), (10, 1))
    pc = contour_pointcloud(xx - 5.5)
    assert np.all((pc.x > 5) & (pc.x < 6))
    assert np.allclose(pc.x, 5.5)
    assert pc.y.min() == 0 and pc.y.max() == 9


def test_point_cloud_validation():
    with pytest.raises(ValueError):
        PointCloud(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        PointCloud([[np.nan, 1.0]])


def test_cover_arithmetic():
    a = PointCloud([[0.0, 0.0], [1.0, 1.0]])
    cover = build_cover(a, a, 100, 100, 1.5)
    assert cover.steps == pytest.approx((1 / 99, 1 / 99))
    assert cover.cell_sizes == pytest.approx((1.5 / 99, 1.5 / 99))
    assert cover.n_edges == 99 * 100 + 100 * 99


def test_cover_absorbs_inner_cloud():
    outer = PointCloud([[0.0, -2.0], [10.0, 4.0], [3.0, 3.0]])
    inner = PointCloud([[1.0, 0.0], [2.0, 1.0]])
    assert build_cover(inner, outer).bounds == (0.0, 10.0, -2.0, 4.0)


def test_cover_widens_flat_axis():
    pc = PointCloud([[3.0, 1.0], [3.0, 5.0]])
    assert build_cover(pc, pc, 4, 4).bounds == (2.5, 3.5, 1.0, 5.0)


def test_cover_validation():
    with pytest.raises(ValueError):
        MapperCover((1, 5), 1.5, (0, 1, 0, 1))
    with pytest.raises(ValueError):
        MapperCover((5, 5), 1.0, (0, 1, 0, 1))


@given(st.integers(0, 2**32 - 1))
def test_every_point_in_some_cell(seed):
    rng = np.random.default_rng(seed)
    a = PointCloud(rng.normal(size=(30, 2)) * 4)
    b = PointCloud(rng.uniform(-3, 3, size=(20, 2)))
    cover = build_cover(a, b, 7, 9, 1.5)
    min_x, _, min_y, _ = cover.bounds
    sx, sy = cover.steps
    cx, cy = cover.cell_sizes
    for x, y in np.concatenate([a.points, b.points]):
        hit = any(abs(x - (min_x + i * sx)) <= cx / 2 and abs(y - (min_y + j * sy)) <= cy / 2
                  for i in range(7) for j in range(9))
        assert hit


def test_edge_ids_round_trip():
    cover = MapperCover((5, 4), 1.5, (0, 1, 0, 1))
    ids = {cover.decode(e) for e in range(cover.n_edges)}
    assert len(ids) == cover.n_edges
    assert cover.decode(int(cover.horizontal_id(3, 2))) == ("h", 3, 2)
    assert cover.decode(int(cover.vertical_id(4, 2))) == ("v", 4, 2)


def test_dense_cloud_has_every_edge():
    g = np.linspace(0, 1, 60)
    pc = PointCloud(np.array(np.meshgrid(g, g)).reshape(2, -1).T)
    cover = build_cover(pc, pc, 10, 10, 1.5)
    assert len(edge_set(pc, cover)) == cover.n_edges


def test_point_on_overlap_boundary_included():
    cover = MapperCover((3, 3), 1.5, (0.0, 2.0, 0.0, 2.0))
    # horizontal edge (0,0): x in [1 - 0.75, 0 + 0.75] = [0.25, 0.75], y in [-0.75, 0.75]
    pc = PointCloud([[0.75, 0.75]])
    assert ("h", 0, 0) in edge_set(pc, cover).as_tuples()
    outside = PointCloud([[0.7500001, 0.0]])
    assert ("h", 0, 0) not in edge_set(outside, cover).as_tuples()


def test_interior_point_may_have_no_edges():
    cover = MapperCover((3, 3), 1.2, (0.0, 2.0, 0.0, 2.0))
    pc = PointCloud([[0.0, 0.0]])
    assert edge_set(pc, cover).as_tuples() == brute_edges(pc.points, cover) == set()


@pytest.mark.parametrize("seed", range(100))
def test_edges_and_jaccard_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    of = float(rng.uniform(1.01, 3.0))
    a = PointCloud(rng.integers(0, 6, (int(rng.integers(1, 20)), 2)) * rng.choice([1, 0.5, 1 / 3]))
    b = PointCloud(rng.normal(size=(int(rng.integers(1, 20)), 2)) * 3)
    cover = build_cover(a, b, n, n, of)
    ea, eb = edge_set(a, cover), edge_set(b, cover)
    ba, bb = brute_edges(a.points, cover), brute_edges(b.points, cover)
    assert ea.as_tuples() == ba and eb.as_tuples() == bb
    assert jaccard_similarity(ea, eb) == brute_jaccard(ba, bb)
    assert similarity(a, b, n, n, of) == brute_jaccard(ba, bb)


def test_jaccard_examples():
    cover = MapperCover((5, 5), 1.5, (0, 1, 0, 1))
    es = lambda ids: EdgeSet(np.array(sorted(ids), dtype=np.int64), cover)
    assert jaccard_similarity(es({1, 2}), es({1, 2})) == 1.0
    assert jaccard_similarity(es({1, 2}), es({3})) == 0.0
    assert jaccard_similarity(es({1, 2, 3}), es({2, 3, 4})) == 0.5
    assert jaccard_similarity(es(set()), es(set())) == 1.0
    assert jaccard_similarity(es(set()), es({4})) == 0.0
    other = MapperCover((6, 5), 1.5, (0, 1, 0, 1))
    with pytest.raises(ValueError):
        jaccard_similarity(es({1}), EdgeSet(np.array([1]), other))


clouds = arrays(float, st.tuples(st.integers(1, 25), st.just(2)),
                elements=st.floats(-50, 50, allow_nan=False))


@given(clouds, clouds)
def test_similarity_symmetric_and_bounded(a, b):
    pa, pb = PointCloud(a), PointCloud(b)
    s = similarity(pa, pb, 12, 12)
    assert s == similarity(pb, pa, 12, 12)
    assert 0.0 <= s <= 1.0


@given(clouds)
def test_self_similarity(a):
    pa = PointCloud(a)
    assert similarity(pa, pa, 12, 12) == 1.0


def ring(cx, cy, r, n=80):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return PointCloud(np.c_[cx + r * np.cos(t), cy + r * np.sin(t)])


def line(n=60, slope=1.0):
    x = np.linspace(0, 30, n)
    return PointCloud(np.c_[x, slope * x])


def test_classify_picks_identical_template():
    probe = ring(10, 10, 6)
    lib = TemplateLibrary({1: [line()], 3: [ring(10, 10, 6)], 5: [line(slope=-0.5)]})
    label, scores = classify(probe, lib, 20, 20)
    assert label == 3
    assert scores[3] == [1.0]
    # brute-force scoring agrees
    assert max(scores, key=lambda k: (sum(scores[k]), -k)) == 3


def test_classify_single_class():
    lib = TemplateLibrary({7: [line()]})
    assert classify(ring(0, 0, 3), lib, 10, 10)[0] == 7


def test_classify_tie_goes_to_smaller_label():
    t = ring(0, 0, 5)
    lib = TemplateLibrary({4: [t], 2: [t]})
    label, scores = classify(ring(0, 0, 5), lib, 10, 10)
    assert scores[2] == scores[4]
    assert label == 2


def test_classify_deterministic():
    rng = np.random.default_rng(0)
    lib = TemplateLibrary({k: [PointCloud(rng.normal(size=(40, 2))) for _ in range(3)]
                           for k in (1, 2, 3)})
    probe = PointCloud(rng.normal(size=(40, 2)))
    assert classify(probe, lib) == classify(probe, lib)


def test_library_validation():
    with pytest.raises(ValueError):
        TemplateLibrary({1: [line()], 2: [line(), line()]})
    with pytest.raises(ValueError):
        TemplateLibrary({1: [line()]}, map_type="xyz")
    with pytest.raises(ValueError):
        classify(line(), None)


def test_library_round_trip(tmp_path):
    lib = TemplateLibrary({1: [line(), ring(1, 2, 3)], 12: [ring(0, 0, 1), line(slope=2)]},
                          "dtm", {"n_x": 100, "note": "x"})
    lib.save(tmp_path / "lib")
    back = TemplateLibrary.load(tmp_path / "lib")
    assert back.labels == [1, 12] and back.map_type == "dtm" and back.per_class == 2
    assert back.hyperparameters == {"n_x": 100, "note": "x"}
    for k in lib.classes:
        for a, b in zip(lib.classes[k], back.classes[k]):
            assert np.allclose(a.points, b.points, rtol=1e-9)


@pytest.mark.parametrize("seed", range(40))
def test_points_on_interval_ends_match_brute_force(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(2, 9))
    of = float(rng.uniform(1.01, 3.0))
    anchor = PointCloud(rng.uniform(0, 1, (2, 2)))
    cover = build_cover(anchor, anchor, n, n, of)
    min_x, max_x, min_y, max_y = cover.bounds
    sx, sy = cover.steps
    cx, cy = cover.cell_sizes
    xs = [min_x + i * sx + k * cx / 2 for i in range(n) for k in (-1, 1)]
    xs += [min_x + (i + 1) * sx - cx / 2 for i in range(n)]
    ys = [min_y + j * sy + k * cy / 2 for j in range(n) for k in (-1, 1)]
    ys += [min_y + (j + 1) * sy - cy / 2 for j in range(n)]
    pts = [(x, y) for x in xs for y in ys if min_x <= x <= max_x and min_y <= y <= max_y]
    pc = PointCloud(np.vstack([np.array(pts).reshape(-1, 2), anchor.points]))
    assert edge_set(pc, cover).as_tuples() == brute_edges(pc.points, cover)
