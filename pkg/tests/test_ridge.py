import numpy as np
import pytest
from _util import arc_positions

from ambivoice.density import DensityField, KdeConfig, build_field
from ambivoice.exceptions import InvalidArgument, NoRidge
from ambivoice.pca import fit_pca
from ambivoice.ridge import NEIGHBORS, RidgePath, export_path, export_samples, extract_ridge, sample_equidistant


def raw_field(pa, xs=None, ys=None):
    pa = np.asarray(pa, dtype=float)
    xs = np.arange(pa.shape[0], dtype=float) if xs is None else xs
    ys = np.arange(pa.shape[1], dtype=float) if ys is None else ys
    return DensityField(xs, ys, pa, pa, pa, None, np.empty((0, 2)), np.empty((0, 2)))


def path_of(points):
    pts = np.asarray(points, dtype=float)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    return RidgePath(pts, np.concatenate([[0.0], np.cumsum(seg)]))


def test_straight_segment_samples():
    s = sample_equidistant(path_of([[0, 0], [9, 0]]), 10)
    assert [i for i, _ in s] == list(range(1, 11))
    np.testing.assert_allclose([p for _, p in s], [[k, 0] for k in range(10)], atol=1e-12)


def test_single_sample_is_midpoint():
    assert sample_equidistant(path_of([[0, 0], [4, 0]]), 1) == [(1, (2.0, 0.0))]


def test_l_shape_samples():
    s = sample_equidistant(path_of([[0, 0], [1, 0], [1, 1]]), 3)
    np.testing.assert_allclose([p for _, p in s], [[0, 0], [1, 0], [1, 1]], atol=1e-12)


def test_degenerate_single_point_path():
    s = sample_equidistant(path_of([[2, 3]]), 4)
    assert s == [(i, (2.0, 3.0)) for i in range(1, 5)]
    with pytest.raises(InvalidArgument):
        sample_equidistant(path_of([[2, 3]]), 0)


def test_valley_ridge_on_raw_field():
    # crest along j = 5, peak at the middle column
    i, j = np.meshgrid(np.arange(21), np.arange(11), indexing="ij")
    pa = np.exp(-((j - 5) ** 2)) * np.exp(-((i - 10) ** 2) / 200.0)
    path = extract_ridge(raw_field(pa), tau=0.05, smooth_window=1)
    assert all(n[1] == 5 for n in path.nodes)
    assert path.nodes[0] == (0, 5) and path.nodes[-1] == (20, 5)
    np.testing.assert_allclose(path.arclen, np.arange(21))


def test_step_log_picks_best_admissible():
    rng = np.random.default_rng(4)
    i, j = np.meshgrid(np.arange(40), np.arange(40), indexing="ij")
    pa = np.exp(-((i - j) ** 2) / 8.0) * (1 + 0.05 * rng.random((40, 40)))
    path = extract_ridge(raw_field(pa), tau=0.05)
    assert path.steps
    for step in path.steps:
        assert step.value == max(v for _, v in step.candidates)
        assert step.value == pa[step.dst]
        first = next(n for n, v in step.candidates if v == step.value)
        assert first == step.dst
        assert max(abs(step.dst[0] - step.src[0]), abs(step.dst[1] - step.src[1])) == 1
    nodes = path.nodes
    assert len(set(nodes)) == len(nodes)


def test_tie_breaking_order():
    assert NEIGHBORS[:4] == ((1, 0), (0, 1), (-1, 0), (0, -1))
    pa = np.ones((5, 5))
    pa[2, 2] = 2.0
    path = extract_ridge(raw_field(pa), tau=0.05, smooth_window=1)
    # flat surroundings: every step resolves by neighbor order
    for step in path.steps:
        vals = [v for _, v in step.candidates]
        assert step.dst == step.candidates[vals.index(max(vals))][0]


def test_tau_one_gives_single_node():
    pa = np.zeros((9, 9))
    pa[4, 4] = 1.0
    pa[3:6, 3:6] += 0.1
    path = extract_ridge(raw_field(pa), tau=1.0)
    assert path.nodes == ((4, 4),)
    np.testing.assert_array_equal(path.arclen, [0.0])
    assert path.length == 0.0


def test_zero_field():
    with pytest.raises(NoRidge):
        extract_ridge(raw_field(np.zeros((4, 4))))


def test_rejects_bad_arguments():
    pa = np.ones((4, 4))
    with pytest.raises(InvalidArgument):
        extract_ridge(raw_field(pa), tau=0.0)
    with pytest.raises(InvalidArgument):
        extract_ridge(raw_field(pa), smooth_window=4)


def test_smoothing_keeps_endpoints():
    i, j = np.meshgrid(np.arange(30), np.arange(30), indexing="ij")
    pa = np.exp(-((j - 0.4 * i - 5) ** 2) / 3.0)
    raw = extract_ridge(raw_field(pa), smooth_window=1)
    smooth = extract_ridge(raw_field(pa), smooth_window=5)
    assert raw.nodes == smooth.nodes
    np.testing.assert_array_equal(smooth.points[0], raw.points[0])
    np.testing.assert_array_equal(smooth.points[-1], raw.points[-1])


def test_mirror_symmetric_data(mirror_set):
    pca = fit_pca(mirror_set)
    for n in (64, 128):
        field = build_field(mirror_set, pca, KdeConfig(0.3), (n, n, 0.1))
        path = extract_ridge(field)
        axis = 0 if abs(pca.components_[0, 0]) > 0.5 else 1
        cell = field.dx if axis == 0 else field.dy
        assert np.abs(path.points[:, axis]).max() <= cell


def test_reflection_equivariance():
    rng = np.random.default_rng(12)
    i, j = np.meshgrid(np.arange(33), np.arange(25), indexing="ij")
    pa = np.exp(-((i - 16) ** 2) / 10.0) * (1 + 0.2 * np.sin(j / 3.0)) + 0.01 * rng.random((33, 25))
    xs = np.linspace(-1, 1, 33)
    a = extract_ridge(raw_field(pa, xs=xs))
    b = extract_ridge(raw_field(pa[::-1], xs=xs))
    mirrored = {(32 - p, q) for p, q in b.nodes}
    assert set(a.nodes) == mirrored


def test_samples_equidistant_on_real_field(small_set):
    pca = fit_pca(small_set)
    field = build_field(small_set, pca, KdeConfig(0.05), (64, 64, 0.1))
    path = extract_ridge(field).with_samples(10)
    pts = np.array([p for _, p in path.samples])
    gaps = np.diff(arc_positions(path, pts))
    np.testing.assert_allclose(gaps, path.length / 9, rtol=1e-6)
    assert len(path.samples) == 10
    np.testing.assert_allclose(pts[0], path.points[0])
    np.testing.assert_allclose(pts[-1], path.points[-1])
    again = extract_ridge(field).with_samples(10)
    assert again.samples == path.samples
    assert again.points.tobytes() == path.points.tobytes()


def test_exports(tmp_path):
    path = path_of([[0, 0], [3, 4]]).with_samples(2)
    export_path(path, tmp_path / "p.csv")
    export_samples(path.samples, tmp_path / "s.csv")
    assert (tmp_path / "p.csv").read_text() == "i,x,y,arclen\n0,0.0,0.0,0.0\n1,3.0,4.0,5.0\n"
    assert (tmp_path / "s.csv").read_text() == "index,x,y\n1,0.0,0.0\n2,3.0,4.0\n"
