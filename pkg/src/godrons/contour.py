"""Zero-set extraction on grids, Newton polishing and point-set distances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ResolutionTooCoarse

Window = tuple[float, float, float, float]


def window_grid(window: Window, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    x0, x1, y0, y1 = window
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate window {window}")
    return np.linspace(x0, x1, resolution + 1), np.linspace(y0, y1, resolution + 1)


def window_diagonal(window: Window) -> float:
    return float(np.hypot(window[1] - window[0], window[3] - window[2]))


def inside(window: Window, x: float, y: float, pad: float = 0.0) -> bool:
    return window[0] - pad <= x <= window[1] + pad and window[2] - pad <= y <= window[3] + pad


@dataclass
class Polyline:
    points: np.ndarray
    closed: bool


# corner order: 0 = (i, j), 1 = (i, j+1), 2 = (i+1, j+1), 3 = (i+1, j)
# cell edges:   0 = bottom (0-1), 1 = right (1-2), 2 = top (3-2), 3 = left (0-3)
_EDGE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))


def _edge_key(i: int, j: int, e: int) -> tuple:
    if e == 0:
        return ("h", i, j)
    if e == 2:
        return ("h", i + 1, j)
    if e == 3:
        return ("v", i, j)
    return ("v", i, j + 1)


def marching_squares(
    values: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    func: Callable | None = None,
    max_subdivision: int = 4,
) -> list[Polyline]:
    """Zero contour of ``values[i, j] = F(xs[j], ys[i])`` as linked polylines.

    Saddle cells are disambiguated with ``func`` (evaluated at the cell centre
    and, if that is inconclusive, along the cell diagonals at up to
    ``max_subdivision`` levels of refinement).  Without ``func`` the mean of
    the corners is used.
    """
    v = np.array(values, dtype=float)
    v[v == 0.0] = np.finfo(float).tiny
    pos = v > 0
    ny, nx = v.shape
    c0, c1, c2, c3 = pos[:-1, :-1], pos[:-1, 1:], pos[1:, 1:], pos[1:, :-1]
    code = c0.astype(int) | (c1.astype(int) << 1) | (c2.astype(int) << 2) | (c3.astype(int) << 3)
    cells = np.argwhere((code != 0) & (code != 15))
    scale = float(np.max(np.abs(v))) if v.size else 1.0

    def crossing(key):
        kind, i, j = key
        if kind == "h":
            a, b = v[i, j], v[i, j + 1]
            t = a / (a - b)
            return (xs[j] + t * (xs[j + 1] - xs[j]), ys[i])
        a, b = v[i, j], v[i + 1, j]
        t = a / (a - b)
        return (xs[j], ys[i] + t * (ys[i + 1] - ys[i]))

    segments: list[tuple[tuple, tuple]] = []
    for i, j in cells:
        corner = (pos[i, j], pos[i, j + 1], pos[i + 1, j + 1], pos[i + 1, j])
        edges = [e for e, (a, b) in enumerate(_EDGE_CORNERS) if corner[a] != corner[b]]
        if len(edges) == 2:
            segments.append((_edge_key(i, j, edges[0]), _edge_key(i, j, edges[1])))
            continue
        # saddle: corners 0 and 2 share a sign, 1 and 3 the other
        joined = _saddle_diagonal(v, xs, ys, i, j, func, max_subdivision, scale)
        if joined == 0:
            # region of corner 0 connects to corner 2: cut off corners 1 and 3
            pairs = ((0, 1), (2, 3))
        else:
            pairs = ((3, 0), (1, 2))
        for a, b in pairs:
            segments.append((_edge_key(i, j, a), _edge_key(i, j, b)))

    return _link(segments, crossing)


def _saddle_diagonal(v, xs, ys, i, j, func, levels, scale) -> int:
    """0 if corners (0, 2) are connected through the cell, 1 if corners (1, 3) are."""
    s0 = v[i, j] > 0
    if func is None:
        centre = 0.25 * (v[i, j] + v[i, j + 1] + v[i + 1, j + 1] + v[i + 1, j])
        return 0 if (centre > 0) == s0 else 1
    xm = 0.5 * (xs[j] + xs[j + 1])
    ym = 0.5 * (ys[i] + ys[i + 1])
    centre = float(func(xm, ym))
    if abs(centre) > 1e-13 * scale:
        return 0 if (centre > 0) == s0 else 1
    for level in range(1, levels + 1):
        t = np.linspace(0.0, 1.0, 2**level + 3)[1:-1]
        d0 = func(xs[j] + t * (xs[j + 1] - xs[j]), ys[i] + t * (ys[i + 1] - ys[i]))
        d1 = func(xs[j + 1] + t * (xs[j] - xs[j + 1]), ys[i] + t * (ys[i + 1] - ys[i]))
        ok0 = np.all((np.asarray(d0) > 0) == s0)
        ok1 = np.all((np.asarray(d1) > 0) != s0)
        if ok0 and not ok1:
            return 0
        if ok1 and not ok0:
            return 1
    raise ResolutionTooCoarse(f"ambiguous saddle cell at ({xm:.6g}, {ym:.6g})")


def _link(segments, crossing) -> list[Polyline]:
    adj: dict[tuple, list[int]] = {}
    for k, (a, b) in enumerate(segments):
        adj.setdefault(a, []).append(k)
        adj.setdefault(b, []).append(k)
    used = np.zeros(len(segments), dtype=bool)
    out: list[Polyline] = []

    def walk(start_seg: int, start_key: tuple) -> list[tuple]:
        chain = [start_key]
        seg, key = start_seg, start_key
        while True:
            used[seg] = True
            a, b = segments[seg]
            nxt = b if a == key else a
            chain.append(nxt)
            cand = [s for s in adj[nxt] if not used[s]]
            if not cand:
                return chain
            seg, key = cand[0], nxt

    # open chains start at edge keys with a single incident segment
    ends = sorted(k for k, segs in adj.items() if len(segs) == 1)
    for key in ends:
        seg = adj[key][0]
        if used[seg]:
            continue
        chain = walk(seg, key)
        out.append(Polyline(np.array([crossing(k) for k in chain]), False))
    for seg in range(len(segments)):
        if used[seg]:
            continue
        chain = walk(seg, segments[seg][0])
        closed = chain[0] == chain[-1]
        out.append(Polyline(np.array([crossing(k) for k in chain]), closed))
    return out


def polish_points(
    pts: np.ndarray,
    func: Callable,
    grad: Callable,
    tol: float,
    max_iter: int = 8,
    max_move: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Project points onto ``func = 0`` by Newton steps along the gradient.

    Returns the projected points and a mask of points that converged to
    ``|func| <= tol`` without moving more than ``max_move``.
    """
    p = np.array(pts, dtype=float, copy=True)
    start = p.copy()
    for _ in range(max_iter):
        f = np.asarray(func(p[:, 0], p[:, 1]), dtype=float)
        if np.all(np.abs(f) <= tol):
            break
        gx, gy = grad(p[:, 0], p[:, 1])
        g2 = np.asarray(gx) ** 2 + np.asarray(gy) ** 2
        g2 = np.where(g2 > 0, g2, np.inf)
        p[:, 0] -= f * gx / g2
        p[:, 1] -= f * gy / g2
    f = np.asarray(func(p[:, 0], p[:, 1]), dtype=float)
    ok = np.abs(f) <= tol
    if max_move is not None:
        ok &= np.hypot(*(p - start).T) <= max_move
    return p, ok


def point_polyline_distance(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest segment of a polyline."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.atleast_2d(np.asarray(poly, dtype=float))
    if len(poly) == 1:
        return np.linalg.norm(points - poly[0], axis=1)
    a = poly[:-1]
    d = poly[1:] - a
    dd = np.einsum("ij,ij->i", d, d)
    dd = np.where(dd > 0, dd, 1.0)
    out = np.empty(len(points))
    for k, p in enumerate(points):
        t = np.clip(np.einsum("ij,ij->i", p - a, d) / dd, 0.0, 1.0)
        proj = a + t[:, None] * d
        out[k] = np.sqrt(np.min(np.einsum("ij,ij->i", p - proj, p - proj)))
    return out


def hausdorff(a_curves: list[np.ndarray], b_curves: list[np.ndarray]) -> float:
    """Symmetric point-to-polyline Hausdorff distance between curve families."""

    def directed(src, dst):
        worst = 0.0
        for pts in src:
            if len(pts) == 0:
                continue
            best = np.full(len(pts), np.inf)
            for poly in dst:
                if len(poly):
                    best = np.minimum(best, point_polyline_distance(pts, poly))
            worst = max(worst, float(np.max(best)))
        return worst

    return max(directed(a_curves, b_curves), directed(b_curves, a_curves))


def segment_intersection(p1, p2, q1, q2) -> tuple[float, float] | None:
    """Parameters (s, t) in [0, 1]^2 where segments p1p2 and q1q2 cross, if any."""
    d1 = np.subtract(p2, p1)
    d2 = np.subtract(q2, q1)
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if den == 0.0:
        return None
    r = np.subtract(q1, p1)
    s = (r[0] * d2[1] - r[1] * d2[0]) / den
    t = (r[0] * d1[1] - r[1] * d1[0]) / den
    if 0.0 <= s <= 1.0 and 0.0 <= t <= 1.0:
        return float(s), float(t)
    return None


def sign_changes_on_circle(func: Callable, centre, radius: float, n: int = 720) -> int:
    """Number of sign changes of ``func`` around a circle (germ classification)."""
    a = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    vals = np.asarray(func(centre[0] + radius * np.cos(a), centre[1] + radius * np.sin(a)))
    s = np.sign(vals)
    s = s[s != 0]
    if len(s) == 0:
        return 0
    return int(np.count_nonzero(s != np.roll(s, 1)))
