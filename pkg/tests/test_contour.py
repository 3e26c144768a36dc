import numpy as np
import pytest

from godrons.contour import (
    hausdorff,
    inside,
    marching_squares,
    point_polyline_distance,
    polish_points,
    segment_intersection,
    sign_changes_on_circle,
    window_diagonal,
    window_grid,
)


def grid(f, window, n):
    xs, ys = window_grid(window, n)
    X, Y = np.meshgrid(xs, ys)
    return f(X, Y), xs, ys


def test_window_helpers():
    xs, ys = window_grid((0, 1, -1, 1), 4)
    assert len(xs) == len(ys) == 5 and ys[0] == -1
    assert window_diagonal((0, 3, 0, 4)) == 5
    assert inside((0, 1, 0, 1), 1.05, 0.5, pad=0.1) and not inside((0, 1, 0, 1), 1.05, 0.5)
    with pytest.raises(ValueError):
        window_grid((1, 0, 0, 1), 4)


def test_circle_is_one_closed_loop():
    f = lambda x, y: x * x + y * y - 0.5
    polys = marching_squares(*grid(f, (-1, 1, -1, 1), 64), f)
    assert len(polys) == 1 and polys[0].closed
    r = np.hypot(*polys[0].points.T)
    assert np.max(np.abs(r - np.sqrt(0.5))) < 5e-3


def test_open_line_reaches_the_boundary():
    f = lambda x, y: y - 0.3 * x - 0.1
    (poly,) = marching_squares(*grid(f, (-1, 1, -1, 1), 32))
    assert not poly.closed
    assert np.allclose(poly.points[:, 1], 0.3 * poly.points[:, 0] + 0.1)


def test_two_circles():
    f = lambda x, y: ((x - 0.5) ** 2 + y * y - 0.1) * ((x + 0.5) ** 2 + y * y - 0.1)
    polys = marching_squares(*grid(f, (-1, 1, -1, 1), 64), f)
    assert len(polys) == 2 and all(p.closed for p in polys)


def test_polish_projects_to_circle():
    f = lambda x, y: x * x + y * y - 1
    g = lambda x, y: (2 * x, 2 * y)
    pts = np.array([[1.1, 0.0], [0.0, -0.95], [0.7, 0.7]])
    out, ok = polish_points(pts, f, g, 1e-12)
    assert ok.all() and np.allclose(np.hypot(*out.T), 1)
    _, ok = polish_points(pts, f, g, 1e-12, max_move=0.06)
    assert ok.tolist() == [False, True, True]


def test_point_polyline_distance():
    poly = np.array([[0, 0], [1, 0], [1, 1]])
    d = point_polyline_distance(np.array([[0.5, 0.2], [2, 0.5], [-1, 0]]), poly)
    assert d == pytest.approx([0.2, 1.0, 1.0])
    assert point_polyline_distance([[3, 4]], [[0, 0]]) == pytest.approx([5])


def test_hausdorff_of_offset_segments():
    a = [np.array([[0, 0], [1, 0]])]
    b = [np.array([[0, 0.1], [1, 0.1]])]
    assert hausdorff(a, b) == pytest.approx(0.1)
    assert hausdorff(a, a) == 0
    # a longer curve is far from the shorter one only at its extra end
    c = [np.array([[0, 0], [2, 0]])]
    assert hausdorff(a, c) == pytest.approx(1.0)


def test_segment_intersection():
    assert segment_intersection((0, 0), (1, 1), (0, 1), (1, 0)) == pytest.approx((0.5, 0.5))
    assert segment_intersection((0, 0), (1, 0), (0, 1), (1, 1)) is None
    assert segment_intersection((0, 0), (1, 0), (2, -1), (2, 1)) is None


def test_sign_changes_on_circle():
    assert sign_changes_on_circle(lambda x, y: x * y, (0, 0), 0.1) == 4
    assert sign_changes_on_circle(lambda x, y: x * x + y * y, (0, 0), 0.1) == 0
    assert sign_changes_on_circle(lambda x, y: y - x * x, (0, 0), 0.1) == 2
    assert sign_changes_on_circle(lambda x, y: x**3 - 3 * x * y * y, (0, 0), 0.1) == 6
