"""Tangential (Legendre) map, dual curves, q-contours and tangent sections.

The tangential map of a graph z = f(x, y) sends a point to the coordinates of
its tangent plane z = p x + q y - r, namely (f_x, f_y, x f_x + y f_y - f).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classify import ClassLabels
from .contour import Window, marching_squares, point_polyline_distance, window_grid
from .godron import GodronContext, GodronRecord, LocalBranches, cr_invariant, g_contour_local, godron_context
from .surface import PlanarCurve, PolySurface, SpaceCurve

ROLES = ("generic", "cuspidal-edge", "self-intersection", "flecnodal", "swallowtail-vertex")
_CURVE_ROLES = {"parabolic": "cuspidal-edge", "conodal": "self-intersection", "flecnodal": "flecnodal"}


@dataclass(frozen=True)
class DualSample:
    source: tuple[float, float]
    dual_point: tuple[float, float, float]
    role: str = "generic"


@dataclass(frozen=True)
class SwallowtailRecord:
    vertex: tuple[float, float, float]
    source: tuple[float, float]
    labels: ClassLabels | None
    kind: str
    curves: dict = field(default_factory=dict)


def legendre_dual_point(s: PolySurface, pt) -> np.ndarray:
    """Image of (x, y) (or arrays of them, stacked on the last axis) under the tangential map."""
    p = np.asarray(pt, dtype=float)
    x, y = p[..., 0], p[..., 1]
    fx = s.derivative(1, 0)(x, y)
    fy = s.derivative(0, 1)(x, y)
    return np.stack([fx, fy, x * fx + y * fy - s(x, y)], axis=-1)


def dual_curve(s: PolySurface, c: PlanarCurve) -> SpaceCurve:
    return SpaceCurve(legendre_dual_point(s, c.samples), c.params, c.closed, c.tag)


def dual_parabola_oracle(rho: float, c: float, t):
    """Closed-form dual image of the parabola v = c u^2 on the quartic normal form."""
    t = np.asarray(t, dtype=float)
    return np.stack(
        [2 * (rho - c) * t**3, (c - 1) * t**2, (0.5 * c * c - 2 * c + 1.5 * rho) * t**4],
        axis=-1,
    )


def dual_samples(s: PolySurface, pts, role: str = "generic") -> list[DualSample]:
    if role not in ROLES:
        raise ValueError(f"unknown role {role!r}")
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    img = legendre_dual_point(s, pts)
    return [DualSample((float(a), float(b)), tuple(float(z) for z in q), role) for (a, b), q in zip(pts, img)]


def _point3(s: PolySurface, q) -> tuple[float, float, float]:
    if len(q) == 3:
        return float(q[0]), float(q[1]), float(q[2])
    return float(q[0]), float(q[1]), float(s(float(q[0]), float(q[1])))


def q_contour_function(s: PolySurface, q):
    """Vectorised scalar whose zero set is the q-contour: <(x, y, f) - q, (-f_x, -f_y, 1)>."""
    qx, qy, qz = _point3(s, q)
    fx, fy = s.derivative(1, 0), s.derivative(0, 1)

    def phi(x, y):
        return -(x - qx) * fx(x, y) - (y - qy) * fy(x, y) + s(x, y) - qz

    return phi


def tangent_section_function(s: PolySurface, q):
    qx, qy, qz = _point3(s, q)
    a = float(s.derivative(1, 0)(qx, qy))
    b = float(s.derivative(0, 1)(qx, qy))

    def psi(x, y):
        return s(x, y) - qz - a * (x - qx) - b * (y - qy)

    return psi


def _zero_set(func, window: Window, resolution: int, tag: str) -> list[PlanarCurve]:
    xs, ys = window_grid(window, resolution)
    X, Y = np.meshgrid(xs, ys)
    polys = marching_squares(func(X, Y), xs, ys, func)
    return [PlanarCurve(p.points, closed=p.closed, tag=tag) for p in polys]


def q_contour(s: PolySurface, q, window: Window, resolution: int = 256) -> list[PlanarCurve]:
    """Points whose tangent plane passes through q, traced in the source plane."""
    return _zero_set(q_contour_function(s, q), window, resolution, "q-contour")


def tangent_section(s: PolySurface, q, window: Window, resolution: int = 256) -> list[PlanarCurve]:
    """Intersection of the surface with its tangent plane at q, traced in the source plane."""
    return _zero_set(tangent_section_function(s, q), window, resolution, "tangent-section")


# ---------------------------------------------------------------------------
# duality check

def _chart_radius(ctx: GodronContext, pts: np.ndarray) -> np.ndarray:
    u, v = ctx.chart.to_chart(pts[:, 0], pts[:, 1])
    return np.hypot(u, v)


def _runs(pts: np.ndarray, keep: np.ndarray) -> list[np.ndarray]:
    out, start = [], None
    for k, flag in enumerate(list(keep) + [False]):
        if flag and start is None:
            start = k
        elif not flag and start is not None:
            out.append(pts[start:k])
            start = None
    return out


def q_contour_duality_check(
    s: PolySurface,
    g,
    window: Window,
    step: float = 1e-3,
    radius: float | None = None,
    margin: float = 0.85,
) -> float:
    """Hausdorff residual between two images of the godron's q-contour in dual space.

    Side A: the local contour branches solved as polynomial roots in the
    adapted chart, pushed to the source plane and through the tangential map.
    Side B: the section of the dual surface by its tangent plane at the dual
    point of the godron, pulled back through the tangential map and traced by
    marching squares on an ambient grid of spacing ``step``.  Both are
    restricted to the image of a chart disc; points closer than ``margin`` of
    the radius are compared against the full other side.  Two trivial germs
    give 0.
    """
    r = radius if radius is not None else 0.1 * math.hypot(window[1] - window[0], window[3] - window[2])
    ctx = godron_context(s, g, window, radius=1.15 * r)
    qx, qy = ctx.point.x, ctx.point.y
    qd = legendre_dual_point(s, (qx, qy))
    rho, _, _, _ = cr_invariant(s, godron_context(s, g, window))

    side_a: list[np.ndarray] = []
    branches: LocalBranches = g_contour_local(s, ctx, rho)
    for c in branches.curves:
        amb = ctx.to_ambient(c).samples
        side_a.append(amb)

    # side B: plane of the dual space tangent at the dual point of q
    qz = float(s(qx, qy))

    def section(x, y):
        d = legendre_dual_point(s, np.stack([x, y], axis=-1))
        # planes through q: r = p qx + q qy - qz
        return d[..., 2] - d[..., 0] * qx - d[..., 1] * qy + qz

    corners = np.array([[np.cos(a), np.sin(a)] for a in np.linspace(0, 2 * np.pi, 64, endpoint=False)]) * 1.1 * r
    amb = np.array(ctx.chart.to_ambient(corners[:, 0], corners[:, 1])).T
    lo, hi = amb.min(axis=0), amb.max(axis=0)
    n = int(max(np.ceil((hi - lo).max() / step), 16))
    box = (qx - 0.5 * n * step, qx + 0.5 * n * step, qy - 0.5 * n * step, qy + 0.5 * n * step)
    side_b = [c.samples for c in _zero_set(section, box, n, "dual-section")]

    def restrict(curves, rmax):
        out = []
        for pts in curves:
            out.extend(_runs(pts, _chart_radius(ctx, pts) <= rmax))
        return out

    full_a = [legendre_dual_point(s, p) for p in restrict(side_a, 1.1 * r)]
    full_b = [legendre_dual_point(s, p) for p in restrict(side_b, 1.1 * r)]
    inner_a = [legendre_dual_point(s, p) for p in restrict(side_a, margin * r)]
    inner_b = [legendre_dual_point(s, p) for p in restrict(side_b, margin * r)]

    if branches.trivial:
        # the dual section is the isolated point q*: measure any spurious set against it
        pts = [p for p in inner_b if len(p)]
        if not pts:
            return 0.0
        return float(max(np.max(np.linalg.norm(p - qd, axis=1)) for p in pts))
    if not any(len(p) for p in inner_b):
        return float(max(np.max(np.linalg.norm(p - qd, axis=1)) for p in inner_a if len(p)))
    return max(_directed(inner_a, full_b), _directed(inner_b, full_a))


def _directed(src: list[np.ndarray], dst: list[np.ndarray]) -> float:
    """Largest distance from a point of ``src`` to the polylines of ``dst``."""
    worst = 0.0
    targets = [d for d in dst if len(d)]
    for pts in src:
        if not len(pts):
            continue
        best = np.full(len(pts), np.inf)
        for poly in targets:
            best = np.minimum(best, point_polyline_distance(pts, poly))
        worst = max(worst, float(np.max(best)))
    return worst


# ---------------------------------------------------------------------------
# swallowtails

def classify_swallowtail(s: PolySurface, g: GodronRecord) -> SwallowtailRecord:
    """Dual picture of a godron: vertex, labels and images of its local curves."""
    x, y = g.location
    vertex = tuple(float(z) for z in legendre_dual_point(s, (x, y)))
    curves = {}
    for name, c in g.local_curves.items():
        u, v = c.samples[:, 0], c.samples[:, 1]
        ax, ay = g.chart.to_ambient(u, v)
        amb = PlanarCurve(np.column_stack([ax, ay]), c.params, c.closed, _CURVE_ROLES.get(name, name))
        curves[name] = dual_curve(s, amb)
    kind = "elliptic" if g.index > 0 else "hyperbolic"
    return SwallowtailRecord(vertex, (float(x), float(y)), g.labels, kind, curves)
