"""Asymptote equation, parabolic curves, the lifted field and asymptotic curves."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contour import Window, inside, marching_squares, polish_points, window_grid
from .errors import DegenerateFrame, DegenerateJet, OffSurface
from .forms import Forms, angle_of, slope_of
from .surface import Jet, PlanarCurve, PolySurface, SpaceCurve, eval_jet

SWAP_SLOPE = 1.5


@dataclass(frozen=True)
class LiftedPoint:
    x: float
    y: float
    slope: float
    chart: str = "P"

    def __post_init__(self):
        if self.chart not in ("P", "Q"):
            raise ValueError(f"unknown chart {self.chart!r}")

    @property
    def theta(self) -> float:
        return angle_of(self.slope, self.chart)

    @property
    def direction(self) -> tuple[float, float]:
        t = self.theta
        return math.cos(t), math.sin(t)

    @classmethod
    def from_angle(cls, x: float, y: float, theta: float, prev_chart: str | None = None) -> "LiftedPoint":
        slope, chart = slope_of(theta, prev_chart, SWAP_SLOPE)
        return cls(float(x), float(y), float(slope), chart)


@dataclass(frozen=True)
class ParabolicTrace:
    curve: PlanarCurve
    jordan: bool
    hyperbolic_side: str


@dataclass(frozen=True)
class LiftedVector:
    dx: float
    dy: float
    dslope: float


# ---------------------------------------------------------------------------
# pointwise quantities

def asymptote_eval(j: Jet, slope: float, chart: str = "P") -> float:
    """A = f_xx + 2 f_xy p + f_yy p^2 (P chart) or f_yy + 2 f_xy q + f_xx q^2 (Q chart)."""
    fxx, fxy, fyy = j[(2, 0)], j[(1, 1)], j[(0, 2)]
    if chart == "P":
        return fxx + 2 * fxy * slope + fyy * slope**2
    return fyy + 2 * fxy * slope + fxx * slope**2


def hessian_det(s: PolySurface, pt) -> float:
    """f_xx f_yy - f_xy^2 (negative on the hyperbolic domain)."""
    p = s.partials_at(float(pt[0]), float(pt[1]), 2)
    return p[(2, 0)] * p[(0, 2)] - p[(1, 1)] ** 2


def hessian_det_grid(s: PolySurface, x, y):
    return s.derivative(2, 0)(x, y) * s.derivative(0, 2)(x, y) - s.derivative(1, 1)(x, y) ** 2


def hessian_det_gradient(s: PolySurface, x, y):
    fxx, fxy, fyy = s.derivative(2, 0)(x, y), s.derivative(1, 1)(x, y), s.derivative(0, 2)(x, y)
    dx = s.derivative(3, 0)(x, y) * fyy + fxx * s.derivative(1, 2)(x, y) - 2 * fxy * s.derivative(2, 1)(x, y)
    dy = s.derivative(2, 1)(x, y) * fyy + fxx * s.derivative(0, 3)(x, y) - 2 * fxy * s.derivative(1, 2)(x, y)
    return dx, dy


def hessian_scale(s: PolySurface, x, y):
    """Squared size of the Hessian, the natural scale of its determinant."""
    return (np.abs(s.derivative(2, 0)(x, y)) + 2 * np.abs(s.derivative(1, 1)(x, y)) + np.abs(s.derivative(0, 2)(x, y))) ** 2


def gaussian_curvature(s: PolySurface, pt) -> float:
    p = s.partials_at(float(pt[0]), float(pt[1]), 2)
    det = p[(2, 0)] * p[(0, 2)] - p[(1, 1)] ** 2
    return det / (1.0 + p[(1, 0)] ** 2 + p[(0, 1)] ** 2) ** 2


def asymptotic_slopes(s: PolySurface, pt, tol: float = 1e-10) -> list[tuple[float, str, int]]:
    """Real asymptotic directions at ``pt`` as (slope, chart, multiplicity).

    Each slope is reported in the chart where its absolute value is at most 1.
    """
    j = eval_jet(s, pt, 2)
    hess = j.hessian
    scale = float(np.abs(hess).max())
    if scale < tol:
        raise DegenerateJet(f"second derivatives vanish at {tuple(pt)}")
    evals, evecs = np.linalg.eigh(hess)
    det = evals[0] * evals[1]
    out = []
    if abs(det) <= tol * scale**2:
        k = int(np.argmin(np.abs(evals)))
        out.append((*_chart_slope(evecs[:, k]), 2))
    elif det < 0:
        lo, hi = evals
        for sign in (1.0, -1.0):
            v = math.sqrt(hi) * evecs[:, 0] + sign * math.sqrt(-lo) * evecs[:, 1]
            out.append((*_chart_slope(v), 1))
    return sorted(out, key=lambda t: (t[1], t[0]))


def _chart_slope(v) -> tuple[float, str]:
    vx, vy = float(v[0]), float(v[1])
    if abs(vy) <= abs(vx):
        return vy / vx, "P"
    return vx / vy, "Q"


def lifted_field_eval(s: PolySurface, lp: LiftedPoint, tol: float = 1e-8) -> LiftedVector:
    """Lifted field (A_p, p A_p, -(A_x + p A_y)) in the P chart, or its Q-chart analogue."""
    j = eval_jet(s, (lp.x, lp.y), 3)
    fxx, fxy, fyy = j[(2, 0)], j[(1, 1)], j[(0, 2)]
    a = asymptote_eval(j, lp.slope, lp.chart)
    if abs(a) > tol * max(abs(fxx) + abs(fxy) + abs(fyy), 1e-300) * (1 + lp.slope**2):
        raise OffSurface(f"|A| = {abs(a):.3e} at {lp}")
    p = lp.slope
    if lp.chart == "P":
        a_p = 2 * fxy + 2 * fyy * p
        a_x = j[(3, 0)] + 2 * j[(2, 1)] * p + j[(1, 2)] * p**2
        a_y = j[(2, 1)] + 2 * j[(1, 2)] * p + j[(0, 3)] * p**2
        return LiftedVector(a_p, p * a_p, -(a_x + p * a_y))
    a_q = 2 * fxy + 2 * fxx * p
    a_x = j[(1, 2)] + 2 * j[(2, 1)] * p + j[(3, 0)] * p**2
    a_y = j[(0, 3)] + 2 * j[(1, 2)] * p + j[(2, 1)] * p**2
    return LiftedVector(p * a_q, a_q, -(a_y + p * a_x))


# ---------------------------------------------------------------------------
# parabolic curves

def trace_parabolic(s: PolySurface, window: Window, resolution: int = 256, rel_tol: float = 1e-9) -> list[ParabolicTrace]:
    """Zero set of the Hessian determinant, polished and split into components."""
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    xs, ys = window_grid(window, resolution)
    X, Y = np.meshgrid(xs, ys)
    det = hessian_det_grid(s, X, Y)
    if not np.any(det < 0) or not np.any(det > 0):
        return []

    def f(x, y):
        return hessian_det_grid(s, x, y)

    def g(x, y):
        return hessian_det_gradient(s, x, y)

    cell = max(xs[1] - xs[0], ys[1] - ys[0])
    out = []
    for poly in marching_squares(det, xs, ys, func=f):
        pts = poly.points
        if poly.closed:
            pts = pts[:-1]
        scale = hessian_scale(s, pts[:, 0], pts[:, 1])
        tol = rel_tol * np.maximum(scale, 1e-300)
        for _ in range(3):
            pts, _ok = polish_points(pts, f, g, tol=float(np.min(tol)), max_iter=6, max_move=2 * cell)
        pts = _dedupe(pts, 1e-9 * cell)
        if len(pts) < 2:
            continue
        if poly.closed:
            pts = np.vstack([pts, pts[:1]])
        side = _hyperbolic_side(s, pts, cell)
        out.append(ParabolicTrace(PlanarCurve(pts, closed=poly.closed, tag="parabolic"), poly.closed, side))
    out.sort(key=lambda t: tuple(t.curve.samples[0]))
    return out


def _dedupe(pts: np.ndarray, eps: float) -> np.ndarray:
    keep = [0]
    for k in range(1, len(pts)):
        if np.hypot(*(pts[k] - pts[keep[-1]])) > eps:
            keep.append(k)
    return pts[keep]


def _hyperbolic_side(s: PolySurface, pts: np.ndarray, cell: float) -> str:
    votes = 0
    for k in range(len(pts) - 1):
        d = pts[k + 1] - pts[k]
        n = np.array([-d[1], d[0]])
        nn = np.hypot(*n)
        if nn == 0:
            continue
        m = 0.5 * (pts[k] + pts[k + 1])
        left = m + 0.25 * cell * n / nn
        votes += 1 if hessian_det(s, left) < 0 else -1
    return "left" if votes >= 0 else "right"


# ---------------------------------------------------------------------------
# asymptotic curve integration

_DP_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_DP_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass(frozen=True)
class AsymptoticCurve:
    space: SpaceCurve
    planar: PlanarCurve
    lifted: list[LiftedPoint]
    angles: np.ndarray
    stop_reason: str
    singular: bool


def _unit_field(s: PolySurface, y: np.ndarray, scale: float) -> np.ndarray:
    fm = Forms.at(s, y[0], y[1], y[2], order=3)
    dx, dy, dt = fm.field()
    v = np.array([dx, dy, dt])
    n = float(np.linalg.norm(v))
    if n <= 1e-13 * scale:
        raise _Singular()
    return v / n


class _Singular(Exception):
    pass


def project_angle(s: PolySurface, x: float, y: float, theta: float, tol: float = 1e-14) -> float:
    """Newton in t on A(x, y, t) = 0, starting from ``theta``."""
    for _ in range(20):
        fm = Forms.at(s, x, y, theta, order=2)
        a, at = fm.A, fm.A_t
        if at == 0.0:
            break
        step = a / at
        step = max(-0.2, min(0.2, step))
        theta -= step
        if abs(step) < tol:
            break
    return theta


def integrate_asymptotic(
    s: PolySurface,
    seed: LiftedPoint,
    arc_length: float,
    output_step: float = 5e-4,
    rtol: float = 1e-12,
    window: Window | None = None,
    stop_at_fold: bool = True,
    max_steps: int = 200000,
) -> AsymptoticCurve:
    """Integrate the lifted field from ``seed`` over a lifted arclength ``arc_length``.

    The parameter is arclength in (x, y, t)-space, output on a uniform grid of
    spacing ``output_step`` (negative ``arc_length`` integrates backwards).
    After every accepted step the angle is projected back onto A = 0.
    """
    direction = 1.0 if arc_length >= 0 else -1.0
    total = abs(arc_length)
    j = eval_jet(s, (seed.x, seed.y), 2)
    scale = max(float(np.abs(j.hessian).max()), 1e-300)
    y = np.array([seed.x, seed.y, project_angle(s, seed.x, seed.y, seed.theta)])

    def rhs(v):
        return direction * _unit_field(s, v, scale)

    t = 0.0
    h = min(output_step, 1e-3)
    out_t = [0.0]
    out_y = [y.copy()]
    next_out = output_step
    reason = "length"
    singular = False
    prev_sign = 0
    try:
        k1 = rhs(y)
        steps = 0
        while t < total - 1e-15:
            steps += 1
            if steps > max_steps:
                reason = "max-steps"
                break
            h = min(h, next_out - t, total - t)
            ks = [k1]
            for i in range(1, 7):
                yi = y + h * sum(a * k for a, k in zip(_DP_A[i], ks))
                ks.append(rhs(yi))
            y5 = y + h * sum(b * k for b, k in zip(_DP_B5, ks))
            y4 = y + h * sum(b * k for b, k in zip(_DP_B4, ks))
            err = float(np.max(np.abs(y5 - y4) / (rtol + rtol * np.abs(y5))))
            if err > 1.0:
                h *= max(0.1, 0.9 * err ** -0.2)
                if h < 1e-14:
                    reason = "step-underflow"
                    break
                continue
            t += h
            y5[2] = project_angle(s, y5[0], y5[1], y5[2])
            y = y5
            k1 = rhs(y)
            if window is not None and not inside(window, y[0], y[1]):
                reason = "window"
                break
            fm = Forms.at(s, y[0], y[1], y[2], order=2)
            at = fm.A_t
            sg = int(np.sign(at)) if abs(at) > 1e-9 * scale else 0
            if stop_at_fold and prev_sign and sg and sg != prev_sign:
                reason = "fold"
                break
            if sg:
                prev_sign = sg
            if abs(t - next_out) < 1e-12 * max(1.0, total):
                out_t.append(next_out)
                out_y.append(y.copy())
                next_out += output_step
            h = min(h * min(5.0, 0.9 * max(err, 1e-10) ** -0.2), 0.5 * output_step)
    except _Singular:
        reason = "singular"
        singular = True

    arr = np.array(out_y)
    z = s(arr[:, 0], arr[:, 1])
    params = direction * np.array(out_t)
    lifted = []
    chart = None
    for x_, y_, th in arr:
        lp = LiftedPoint.from_angle(x_, y_, th, chart)
        chart = lp.chart
        lifted.append(lp)
    return AsymptoticCurve(
        SpaceCurve(np.column_stack([arr[:, :2], z]), params, tag="asymptotic"),
        PlanarCurve(arr[:, :2], params, tag="asymptotic"),
        lifted,
        arr[:, 2],
        reason,
        singular,
    )


# ---------------------------------------------------------------------------
# torsion

def frame_derivatives(c: SpaceCurve, index: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """First three derivatives by central differences on a uniform parameter grid."""
    pts = c.samples
    n = len(pts)
    if index < 2 or index > n - 3:
        raise DegenerateFrame(f"need two samples on each side of index {index}")
    if c.params is not None:
        h = float(c.params[index + 1] - c.params[index])
        steps = np.diff(c.params[index - 2 : index + 3])
        if not np.allclose(steps, h, rtol=1e-6, atol=0):
            raise DegenerateFrame("non-uniform parameter spacing")
    else:
        h = 1.0
    g = pts[index - 2 : index + 3]
    d1 = (g[0] - 8 * g[1] + 8 * g[3] - g[4]) / (12 * h)
    d2 = (-g[0] + 16 * g[1] - 30 * g[2] + 16 * g[3] - g[4]) / (12 * h * h)
    d3 = (-g[0] + 2 * g[1] - 2 * g[3] + g[4]) / (2 * h**3)
    return d1, d2, d3


def frenet_torsion(c: SpaceCurve, index: int) -> float:
    d1, d2, d3 = frame_derivatives(c, index)
    cr = np.cross(d1, d2)
    n2 = float(cr @ cr)
    if math.sqrt(n2) <= 1e-12 * float(np.linalg.norm(d1) * np.linalg.norm(d2)) or n2 == 0.0:
        raise DegenerateFrame(f"first and second derivatives parallel at index {index}")
    return float(cr @ d3) / n2
