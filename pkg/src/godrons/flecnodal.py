"""Flecnodal curves, left/right labels, hyperbonodes and biflecnodes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .asymptotic import LiftedPoint, frame_derivatives
from .contour import Window, inside, marching_squares, segment_intersection, window_diagonal, window_grid
from .errors import DegenerateFrame
from .forms import Forms, wrap_angle
from .surface import Jet, PlanarCurve, PolySurface, SpaceCurve, eval_jet

LEFT, RIGHT, FLAT = "Left", "Right", "Flattening"


@dataclass(frozen=True)
class FlecnodalTrace:
    lifted: list[LiftedPoint]
    projected: PlanarCurve
    angles: np.ndarray
    labels: list[str] = field(default_factory=list)
    closed: bool = False
    tag: str = ""
    stop_reason: str = ""


@dataclass(frozen=True)
class Hyperbonode:
    location: tuple[float, float]
    branches: tuple[tuple[int, int], tuple[int, int]]
    labels: tuple[str, str]
    angle: float


@dataclass(frozen=True)
class Biflecnode:
    location: tuple[float, float]
    slope: float
    chart: str
    side: str
    trace: int = -1


# ---------------------------------------------------------------------------
# pointwise

def inflection_eval(j: Jet, slope: float, chart: str = "P") -> float:
    """I = A_x + p A_y in the P chart (A_y + q A_x in the Q chart)."""
    if chart == "P":
        return j.form(3, (1.0, slope))
    return j.form(3, (slope, 1.0))


def contact_order(s: PolySurface, pt, direction, max_order: int = 6, rel_tol: float = 1e-8) -> int:
    """Order of vanishing of the height over the tangent plane along a tangent line.

    Returns ``max_order + 1`` when every coefficient up to ``max_order``
    vanishes (contact of order at least that).
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    j = eval_jet(s, pt, max_order)
    scale = max(abs(v) for (a, b), v in j.partials.items() if 2 <= a + b) or 1.0
    for k in range(2, max_order + 1):
        if abs(j.form(k, d)) > rel_tol * scale:
            return k
    return max_order + 1


def torsion_value(s: PolySurface, x: float, y: float, theta: float) -> float:
    """Torsion of the asymptotic curve through (x, y) tangent to angle ``theta``.

    Closed form in the 2-jet of f: with a = f_x, b = f_y and v the direction,
    the torsion is H(v, u) / (W^2 |T|^2) where
    u = (-ab v1 - (1 + b^2) v2, (1 + a^2) v1 + ab v2), W^2 = 1 + a^2 + b^2
    and T = (v1, v2, a v1 + b v2) is the lifted tangent.
    """
    p = s.partials_at(float(x), float(y), 2)
    a, b = p[(1, 0)], p[(0, 1)]
    v1, v2 = math.cos(theta), math.sin(theta)
    u1 = -a * b * v1 - (1 + b * b) * v2
    u2 = (1 + a * a) * v1 + a * b * v2
    hvu = p[(2, 0)] * v1 * u1 + p[(1, 1)] * (v1 * u2 + v2 * u1) + p[(0, 2)] * v2 * u2
    w2 = 1 + a * a + b * b
    t2 = v1 * v1 + v2 * v2 + (a * v1 + b * v2) ** 2
    return hvu / (w2 * t2)


def torsion_label(s: PolySurface, x: float, y: float, theta: float, rel_tol: float = 1e-11) -> str:
    p = s.partials_at(float(x), float(y), 2)
    scale = abs(p[(2, 0)]) + 2 * abs(p[(1, 1)]) + abs(p[(0, 2)]) or 1.0
    t = torsion_value(s, x, y, theta)
    if abs(t) <= rel_tol * scale:
        return FLAT
    return RIGHT if t > 0 else LEFT


def left_right_label(c: SpaceCurve, index: int, rel_tol: float = 1e-9) -> str:
    """Frame sign of the first three derivatives of a sampled space curve."""
    d1, d2, d3 = frame_derivatives(c, index)
    det = float(np.linalg.det(np.array([d1, d2, d3])))
    scale = float(np.linalg.norm(d1) * np.linalg.norm(d2) * np.linalg.norm(d3))
    if scale == 0.0:
        raise DegenerateFrame(f"vanishing derivative at index {index}")
    if abs(det) <= rel_tol * scale:
        return FLAT
    return RIGHT if det > 0 else LEFT


# ---------------------------------------------------------------------------
# seeding

def binary_resultant_grid(s: PolySurface, X, Y) -> np.ndarray:
    """Resultant of the binary forms D^2 f and D^3 f, vectorised over a grid.

    It vanishes exactly over points where the two forms share a root, so its
    real zero set contains the projection of the flecnodal curve.
    """
    d = {(i, j): s.derivative(i, j)(X, Y) for i in range(4) for j in range(4) if 2 <= i + j <= 3}
    a = [d[(2, 0)], 2 * d[(1, 1)], d[(0, 2)]]
    b = [d[(3, 0)], 3 * d[(2, 1)], 3 * d[(1, 2)], d[(0, 3)]]
    shape = np.shape(X)
    m = np.zeros(shape + (5, 5))
    for r in range(3):
        for k in range(3):
            m[..., r, r + k] = a[k]
    for r in range(2):
        for k in range(4):
            m[..., 3 + r, r + k] = b[k]
    return np.linalg.det(m)


# ---------------------------------------------------------------------------
# continuation

class _Tracer:
    def __init__(self, s: PolySurface, window: Window, step: float, kappa: float):
        self.s = s
        self.window = window
        self.h0 = step
        self.kappa = kappa

    def system(self, w):
        x, y, t = w[0], w[1], w[2] / self.kappa
        fm = Forms.at(self.s, x, y, t, order=4)
        p = fm.p
        scale = abs(p[(2, 0)]) + 2 * abs(p[(1, 1)]) + abs(p[(0, 2)]) + 1e-300
        F = np.array([fm.A, fm.I]) / scale
        J = np.array(
            [
                [fm.form(2, 0, (1, 0)), fm.form(2, 0, (0, 1)), fm.form(2, 1) / self.kappa],
                [fm.form(3, 0, (1, 0)), fm.form(3, 0, (0, 1)), fm.form(3, 1) / self.kappa],
            ]
        ) / scale
        return F, J

    def correct(self, w, tol=1e-12, iters=12):
        moved = 0.0
        for _ in range(iters):
            F, J = self.system(w)
            if np.max(np.abs(F)) < tol:
                return w, moved, True
            dw = -np.linalg.pinv(J) @ F
            w = w + dw
            moved += float(np.linalg.norm(dw))
        F, _ = self.system(w)
        return w, moved, bool(np.max(np.abs(F)) < tol)

    def tangent(self, w, prev=None):
        _, J = self.system(w)
        t = np.cross(J[0], J[1])
        n = np.linalg.norm(t)
        if n == 0:
            return None
        t = t / n
        if prev is not None and t @ prev < 0:
            t = -t
        return t

    def run(self, w0, t0, max_steps):
        """March from w0 along t0 until the window boundary, loop closure or failure."""
        pts = [w0]
        w, t = w0, t0
        h = self.h0
        reason = "max-steps"
        for n in range(max_steps):
            ok = False
            while h >= self.h0 / 64:
                wp, moved, conv = self.correct(w + h * t)
                if conv and moved < 0.5 * h:
                    tn = self.tangent(wp, t)
                    if tn is not None and tn @ t > math.cos(0.3):
                        ok = True
                        break
                h *= 0.5
            if not ok:
                reason = "step-failure"
                break
            w, t = wp, tn
            if not inside(self.window, w[0], w[1]):
                reason = "window"
                break
            pts.append(w)
            if n >= 8 and self._near(w, w0):
                pts.append(w0.copy())
                reason = "closed"
                break
            h = min(self.h0, 1.5 * h)
        return pts, reason

    def _near(self, w, w0):
        dxy = math.hypot(w[0] - w0[0], w[1] - w0[1])
        dth = abs(float(wrap_angle((w[2] - w0[2]) / self.kappa))) * self.kappa
        return dxy < 2 * self.h0 and dth < 2 * self.h0


def _lift_seed(s: PolySurface, x: float, y: float) -> float | None:
    j = eval_jet(s, (x, y), 3)
    h = j.hessian
    ev, vec = np.linalg.eigh(h)
    if ev[0] * ev[1] > 0:
        return None
    lo, hi = abs(ev[0]), abs(ev[1])
    best, best_i = None, math.inf
    for sign in (1.0, -1.0):
        v = math.sqrt(hi) * vec[:, 0] + sign * math.sqrt(lo) * vec[:, 1]
        v = v / np.linalg.norm(v)
        val = abs(j.form(3, v))
        if val < best_i:
            best, best_i = math.atan2(v[1], v[0]) % math.pi, val
    return best


def trace_flecnodal(
    s: PolySurface,
    window: Window,
    resolution: int = 256,
    label: bool = True,
    max_steps: int = 20000,
) -> list[FlecnodalTrace]:
    """Components of {A = 0, I = 0} traced by pseudo-arclength continuation."""
    xs, ys = window_grid(window, resolution)
    X, Y = np.meshgrid(xs, ys)
    R = binary_resultant_grid(s, X, Y)
    if not np.any(R > 0) or not np.any(R < 0):
        return []
    diag = window_diagonal(window)
    kappa = diag / math.pi
    step = diag / 512
    tracer = _Tracer(s, window, step, kappa)
    seeds = []
    for poly in marching_squares(R, xs, ys):
        pts = poly.points
        stride = max(1, len(pts) // 16)
        seeds.extend(pts[::stride].tolist())
    seeds.sort()

    traces: list[FlecnodalTrace] = []
    covered: list[np.ndarray] = []
    tree = None
    for sx, sy in seeds:
        th = _lift_seed(s, sx, sy)
        if th is None:
            continue
        w, _, conv = tracer.correct(np.array([sx, sy, th * kappa]))
        if not conv or not inside(window, w[0], w[1]):
            continue
        if tree is not None and tree.query(_embed(w, kappa), distance_upper_bound=4 * step)[0] < 4 * step:
            continue
        t0 = tracer.tangent(w)
        if t0 is None:
            continue
        fwd, r1 = tracer.run(w, t0, max_steps)
        if r1 == "closed":
            path, closed, reason = fwd, True, r1
        else:
            bwd, r2 = tracer.run(w, -t0, max_steps)
            path, closed, reason = bwd[::-1] + fwd[1:], False, f"{r2}/{r1}"
        if len(path) < 3:
            continue
        arr = np.array(path)
        covered.append(np.array([_embed(p, kappa) for p in arr]))
        tree = cKDTree(np.vstack(covered))
        traces.append(_make_trace(arr, kappa, closed, reason))

    traces.sort(key=lambda t: tuple(np.round(t.projected.samples[0], 12)))
    if label:
        traces = [label_branches(t, s) for t in traces]
    return traces


def _embed(w, kappa):
    t = 2 * w[2] / kappa
    r = 0.5 * kappa
    return np.array([w[0], w[1], r * math.cos(t), r * math.sin(t)])


def _make_trace(arr: np.ndarray, kappa: float, closed: bool, reason: str) -> FlecnodalTrace:
    angles = arr[:, 2] / kappa
    lifted = []
    chart = None
    for (x, y), th in zip(arr[:, :2], angles):
        lp = LiftedPoint.from_angle(x, y, th, chart)
        chart = lp.chart
        lifted.append(lp)
    d = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(arr[:, :2], axis=0).T))])
    return FlecnodalTrace(lifted, PlanarCurve(arr[:, :2], d, closed, "flecnodal"), angles, [], closed, "", reason)


def label_branches(t: FlecnodalTrace, s: PolySurface) -> FlecnodalTrace:
    """Left/Right/Flattening label of the asymptotic curve along each flecnodal sample."""
    labels = [torsion_label(s, p[0], p[1], th) for p, th in zip(t.projected.samples, t.angles)]
    return replace(t, labels=labels)


def label_flips(labels: list[str]) -> int:
    seq = [l for l in labels if l != FLAT]
    return sum(1 for a, b in zip(seq, seq[1:]) if a != b)


# ---------------------------------------------------------------------------
# hyperbonodes

def _segment_label(labels, k):
    for idx in (k, k + 1, k - 1, k + 2):
        if 0 <= idx < len(labels) and labels[idx] != FLAT:
            return labels[idx]
    return FLAT


def find_hyperbonodes(traces: list[FlecnodalTrace], dedup: float | None = None) -> tuple[list[Hyperbonode], list[Hyperbonode]]:
    """Transverse crossings of projected flecnodal traces.

    Returns (hyperbonodes, anomalies): Left x Right crossings and same-label
    crossings respectively.
    """
    segs = []
    for ti, tr in enumerate(traces):
        pts = tr.projected.samples
        for k in range(len(pts) - 1):
            segs.append((ti, k, pts[k], pts[k + 1]))
    if not segs:
        return [], []
    if dedup is None:
        lens = [np.hypot(*(b - a)) for _, _, a, b in segs]
        dedup = 3 * float(np.median(lens))
    lo = np.array([np.minimum(a, b) for _, _, a, b in segs])
    hi = np.array([np.maximum(a, b) for _, _, a, b in segs])
    order = np.argsort(lo[:, 0])
    found: list[Hyperbonode] = []
    anomalies: list[Hyperbonode] = []
    for ii, i in enumerate(order):
        ti, ki, a1, a2 = segs[i]
        for j in order[ii + 1 :]:
            if lo[j, 0] > hi[i, 0]:
                break
            if lo[j, 1] > hi[i, 1] or hi[j, 1] < lo[i, 1]:
                continue
            tj, kj, b1, b2 = segs[j]
            if ti == tj and abs(ki - kj) <= 1:
                continue
            if ti == tj and traces[ti].closed and abs(ki - kj) == len(traces[ti].projected.samples) - 2:
                continue
            hit = segment_intersection(a1, a2, b1, b2)
            if hit is None:
                continue
            p = a1 + hit[0] * (a2 - a1)
            da, db = a2 - a1, b2 - b1
            ang = abs(math.atan2(da[0] * db[1] - da[1] * db[0], da @ db))
            ang = min(ang, math.pi - ang)
            if ang < 1e-3:
                continue
            la = _segment_label(traces[ti].labels, ki)
            lb = _segment_label(traces[tj].labels, kj)
            rec = Hyperbonode((float(p[0]), float(p[1])), ((ti, ki), (tj, kj)), (la, lb), float(ang))
            target = found if {la, lb} == {LEFT, RIGHT} else anomalies
            if any(math.hypot(p[0] - q.location[0], p[1] - q.location[1]) < dedup for q in target):
                continue
            target.append(rec)
    found.sort(key=lambda h: h.location)
    anomalies.sort(key=lambda h: h.location)
    return found, anomalies


# ---------------------------------------------------------------------------
# biflecnodes

def biflecnode_residual(s: PolySurface, x: float, y: float, theta: float) -> float:
    """D^4 f [v, v, v, v]: the next coefficient of the height along a flecnodal line."""
    return Forms.at(s, x, y, theta, order=4).form(4)


def find_biflecnodes(t: FlecnodalTrace, s: PolySurface, trace_index: int = -1) -> tuple[list[Biflecnode], bool]:
    """Zeros of the fourth-order residual along a trace.

    Returns (biflecnodes, ruled) where ``ruled`` flags a trace along which the
    residual vanishes identically (a line contained in the surface).
    """
    pts = t.projected.samples
    th = t.angles
    q = np.array([biflecnode_residual(s, x, y, a) for (x, y), a in zip(pts, th)])
    scale4 = max(
        max(abs(v) for (i, j), v in s.partials_at(float(x), float(y), 4).items() if i + j == 4) for x, y in pts[:: max(1, len(pts) // 8)]
    )
    scale4 = scale4 or 1.0
    small = np.abs(q) <= 1e-9 * scale4
    run = 0
    ruled = False
    for flag in small:
        run = run + 1 if flag else 0
        if run >= 3:
            ruled = True
            break
    if ruled:
        return [], True
    out = []
    w_prev = None
    for k in range(len(q) - 1):
        if q[k] == 0.0 or np.sign(q[k]) != np.sign(q[k + 1]):
            a = np.array([*pts[k], th[k]])
            b = np.array([*pts[k + 1], th[k + 1]])
            b[2] = a[2] + float(wrap_angle(b[2] - a[2]))

            def g(u):
                w = _reproject(s, a + u * (b - a), b - a)
                return biflecnode_residual(s, w[0], w[1], w[2])

            if q[k] == 0.0:
                u = 0.0
            else:
                u = brentq(g, 0.0, 1.0, xtol=1e-14)
            w = _reproject(s, a + u * (b - a), b - a)
            if w_prev is not None and np.hypot(*(w[:2] - w_prev[:2])) < 1e-9:
                continue
            w_prev = w
            lp = LiftedPoint.from_angle(w[0], w[1], w[2])
            out.append(Biflecnode((float(w[0]), float(w[1])), lp.slope, lp.chart, torsion_label(s, w[0], w[1], w[2]), trace_index))
    return out, False


def _reproject(s: PolySurface, w: np.ndarray, along: np.ndarray) -> np.ndarray:
    """Newton onto {A = 0, I = 0} within the plane orthogonal to ``along``."""
    w = w.copy()
    d = along / (np.linalg.norm(along) or 1.0)
    for _ in range(12):
        fm = Forms.at(s, w[0], w[1], w[2], order=4)
        F = np.array([fm.A, fm.I, 0.0])
        J = np.array(
            [
                [fm.form(2, 0, (1, 0)), fm.form(2, 0, (0, 1)), fm.form(2, 1)],
                [fm.form(3, 0, (1, 0)), fm.form(3, 0, (0, 1)), fm.form(3, 1)],
                d,
            ]
        )
        try:
            dw = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        w += dw
        if np.linalg.norm(dw) < 1e-15:
            break
    return w
