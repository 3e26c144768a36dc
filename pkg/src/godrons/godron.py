"""Godron detection and local analysis in adapted charts."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import root

from .asymptotic import LiftedPoint, ParabolicTrace, trace_parabolic
from .classify import DEGENERACY_EPS, ClassLabels, classify_godron
from .contour import Window, inside, window_diagonal
from .errors import (
    BranchTraceFailure,
    DegenerateRho,
    IndeterminateIndex,
    InsufficientSamples,
    NewtonDivergence,
    NoSignChange,
    SeedFailure,
)
from .forms import Forms
from .surface import AffineChart, PlanarCurve, PolySurface, adapted_chart

log = logging.getLogger(__name__)

ROUTE_TOL = 1e-3
ROUTE_FAIL = 0.05


# ---------------------------------------------------------------------------
# records

@dataclass(frozen=True)
class FitResult:
    value: float
    error: float
    h: float
    linear: float


@dataclass(frozen=True)
class CanonicalCoefficients:
    cF: float | None = None
    cP: float | None = None
    cD: float | None = None
    cS: float | None = None
    cTminus: float | None = None
    cTplus: float | None = None
    cCminus: float | None = None
    cCplus: float | None = None
    errors: dict = field(default_factory=dict)

    def ratios(self) -> dict[str, float | None]:
        names = ("cF", "cP", "cD", "cTminus", "cTplus", "cCminus", "cCplus")
        if not self.cS:
            return {n: None for n in names}
        return {n: (None if getattr(self, n) is None else getattr(self, n) / self.cS) for n in names}

    def as_dict(self) -> dict:
        names = ("cF", "cP", "cD", "cS", "cTminus", "cTplus", "cCminus", "cCplus")
        return {n: getattr(self, n) for n in names}


@dataclass(frozen=True)
class RhoDiagnostics:
    routes: dict[str, float | None]
    max_deviation: float
    flags: tuple[str, ...]


@dataclass(frozen=True)
class LocalBranches:
    trivial: bool
    c_minus: float | None = None
    c_plus: float | None = None
    curves: tuple[PlanarCurve, ...] = ()
    sign_changes: int = 0


@dataclass(frozen=True)
class IndexResult:
    index: int
    winding: int
    determinant: float
    radius: float


@dataclass(frozen=True)
class GodronRecord:
    location: tuple[float, float]
    slope: float
    chart_flag: str
    chart: AffineChart
    rho: float
    diagnostics: RhoDiagnostics
    index: int
    index_detail: IndexResult | None
    coeffs: CanonicalCoefficients
    labels: ClassLabels | None
    flags: tuple[str, ...]
    local_curves: dict = field(default_factory=dict)
    section: LocalBranches | None = None
    contour: LocalBranches | None = None


@dataclass
class GodronContext:
    """A godron in its adapted chart: ``h`` is the chart height polynomial."""

    point: LiftedPoint
    chart: AffineChart
    h: PolySurface
    radius: float

    def to_ambient(self, curve: PlanarCurve) -> PlanarCurve:
        x, y = self.chart.to_ambient(curve.samples[:, 0], curve.samples[:, 1])
        return PlanarCurve(np.column_stack([x, y]), curve.params, curve.closed, curve.tag)


def godron_context(s: PolySurface, g: LiftedPoint, window: Window | None = None, radius: float | None = None) -> GodronContext:
    chart, _ = adapted_chart(s, (g.x, g.y), _slope_dy_dx(g), parabolic_tol=1e-6)
    h = chart.pullback(s)
    if radius is None:
        radius = 0.05 * window_diagonal(window) if window is not None else 0.05
    return GodronContext(g, chart, h, radius)


def _slope_dy_dx(g: LiftedPoint) -> float:
    if g.chart == "P":
        return g.slope
    return math.inf if g.slope == 0 else 1.0 / g.slope


# ---------------------------------------------------------------------------
# detection

def _godron_system(s: PolySurface, w: np.ndarray):
    fm = Forms.at(s, w[0], w[1], w[2], order=4)
    p = fm.p
    scale = abs(p[(2, 0)]) + 2 * abs(p[(1, 1)]) + abs(p[(0, 2)]) + 1e-300
    F = np.array([fm.A, fm.A_t, fm.I]) / scale
    J = np.array(
        [
            [fm.form(2, 0, (1, 0)), fm.form(2, 0, (0, 1)), fm.form(2, 1)],
            [fm.form(2, 1, (1, 0)), fm.form(2, 1, (0, 1)), fm.form(2, 2)],
            [fm.form(3, 0, (1, 0)), fm.form(3, 0, (0, 1)), fm.form(3, 1)],
        ]
    ) / scale
    return F, J


def polish_godron(s: PolySurface, x: float, y: float, theta: float, tol: float = 1e-10, max_iter: int = 30) -> np.ndarray:
    w = np.array([x, y, theta], dtype=float)
    step0 = None
    for _ in range(max_iter):
        F, J = _godron_system(s, w)
        if np.max(np.abs(F)) < 1e-3 * tol:
            return w
        try:
            dw = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise NewtonDivergence("singular Jacobian") from exc
        if step0 is None:
            step0 = np.linalg.norm(dw)
        w = w + dw
        if np.linalg.norm(dw) < 1e-15 * (1 + np.linalg.norm(w)):
            break
    F, _ = _godron_system(s, w)
    if np.max(np.abs(F)) > tol:
        raise NewtonDivergence(f"residual {np.max(np.abs(F)):.3e} after {max_iter} iterations")
    return w


def _kernel_angle(s: PolySurface, x: float, y: float) -> tuple[np.ndarray, float]:
    p = s.partials_at(x, y, 2)
    h = np.array([[p[(2, 0)], p[(1, 1)]], [p[(1, 1)], p[(0, 2)]]])
    ev, vec = np.linalg.eigh(h)
    k = vec[:, int(np.argmin(np.abs(ev)))]
    return k, math.atan2(k[1], k[0]) % math.pi


def godron_candidates(s: PolySurface, traces: list[ParabolicTrace]) -> list[tuple[float, float, float]]:
    """Sign changes of the tangency function along parabolic traces."""
    from .asymptotic import hessian_det_gradient

    out = []
    for tr in traces:
        pts = tr.curve.samples
        if tr.jordan:
            pts = pts[:-1]
        gx, gy = hessian_det_gradient(s, pts[:, 0], pts[:, 1])
        ks = []
        prev = None
        for x, y in pts:
            k, _ = _kernel_angle(s, float(x), float(y))
            if prev is not None and k @ prev < 0:
                k = -k
            ks.append(k)
            prev = k
        ks = np.array(ks)
        G = gx * ks[:, 0] + gy * ks[:, 1]
        n = len(pts)
        pairs = [(i, i + 1) for i in range(n - 1)]
        if tr.jordan:
            pairs.append((n - 1, 0))
        for i, j in pairs:
            gi, gj = G[i], G[j]
            if j == 0 and ks[n - 1] @ ks[0] < 0:
                gj = -gj
            if gi == 0.0 or gi * gj < 0:
                t = 0.0 if gi == 0.0 else gi / (gi - gj)
                x, y = pts[i] + t * (pts[j] - pts[i])
                _, th = _kernel_angle(s, float(x), float(y))
                out.append((float(x), float(y), th))
    return out


def find_godrons(
    s: PolySurface,
    window: Window,
    resolution: int = 256,
    traces: list[ParabolicTrace] | None = None,
) -> list[LiftedPoint]:
    """Godrons in the window as lifted points (location and double slope), sorted by (x, y)."""
    if traces is None:
        traces = trace_parabolic(s, window, resolution)
    diag = window_diagonal(window)
    found: list[np.ndarray] = []
    for x, y, th in godron_candidates(s, traces):
        try:
            w = polish_godron(s, x, y, th)
        except NewtonDivergence as exc:
            log.info("godron seed at (%.6g, %.6g) skipped: %s", x, y, exc)
            continue
        if not inside(window, w[0], w[1]):
            continue
        if math.hypot(w[0] - x, w[1] - y) > 0.05 * diag:
            continue
        w[2] = w[2] % math.pi
        if any(math.hypot(w[0] - v[0], w[1] - v[1]) < 1e-7 * diag for v in found):
            continue
        found.append(w)
    found.sort(key=lambda v: (round(v[0], 12), round(v[1], 12)))
    return [LiftedPoint.from_angle(v[0], v[1], v[2]) for v in found]


# ---------------------------------------------------------------------------
# index

def _solve_v(h: PolySurface, u: float, theta: float, v0: float) -> float | None:
    v = v0
    for _ in range(40):
        fm = Forms.at(h, u, v, theta, order=3)
        a = fm.A
        av = fm.form(2, 0, (0, 1))
        if av == 0:
            return None
        dv = a / av
        v -= dv
        if abs(dv) < 1e-15 * (1 + abs(v)):
            return v
    fm = Forms.at(h, u, v, theta, order=2)
    return v if abs(fm.A) < 1e-10 else None


def _chart_field(h: PolySurface, u: float, theta: float, v0: float = 0.0):
    v = _solve_v(h, u, theta, v0)
    if v is None:
        return None
    fm = Forms.at(h, u, v, theta, order=3)
    return np.array([fm.A_t * math.cos(theta), -fm.I]), v


def _winding(h: PolySurface, r: float, n: int = 256) -> int | None:
    for _ in range(4):
        a = np.linspace(0.0, 2 * math.pi, n + 1)
        ang = []
        v0 = 0.0
        for t in a:
            res = _chart_field(h, r * math.cos(t), r * math.sin(t), v0)
            if res is None:
                return None
            vec, v0 = res
            if np.hypot(*vec) == 0.0:
                return None
            ang.append(math.atan2(vec[1], vec[0]))
        d = np.diff(np.unwrap(ang))
        if np.max(np.abs(d)) < 0.5 * math.pi:
            return int(round((np.unwrap(ang)[-1] - ang[0]) / (2 * math.pi)))
        n *= 2
    return None


def godron_index(s: PolySurface, g: LiftedPoint | GodronContext, r0: float = 1e-3) -> IndexResult:
    """Index of the lifted field at a godron: winding number, cross-checked with the linearisation."""
    ctx = g if isinstance(g, GodronContext) else godron_context(s, g)
    h = ctx.h
    eps = 1e-5
    jac = np.zeros((2, 2))
    for k, (du, dt) in enumerate(((eps, 0.0), (0.0, eps))):
        fp = _chart_field(h, du, dt)
        fm = _chart_field(h, -du, -dt)
        if fp is None or fm is None:
            raise IndeterminateIndex(0, float("nan"))
        jac[:, k] = (fp[0] - fm[0]) / (2 * eps)
    det = float(np.linalg.det(jac))
    history = []
    r = r0
    winding = None
    for _ in range(12):
        w = _winding(h, r)
        history.append(w)
        if len(history) >= 3 and history[-1] is not None and history[-1] == history[-2] == history[-3]:
            winding = history[-1]
            break
        r *= 2
    if winding is None:
        winding = next((w for w in history if w is not None), 0)
    if winding not in (1, -1) or det == 0 or int(np.sign(det)) != winding:
        raise IndeterminateIndex(int(winding), det)
    return IndexResult(int(winding), int(winding), det, r)


# ---------------------------------------------------------------------------
# canonical coefficients

def canonical_fit(curve: PlanarCurve, order: int = 2, h: float | None = None) -> FitResult:
    """Coefficient of u^order of a curve through the chart origin tangent to the u-axis.

    Least-squares polynomial of degree order + 3 over |u| <= h and |u| <= h/2,
    combined by Richardson extrapolation on the leading truncation term; the
    error estimate is the size of the extrapolation correction.  ``h`` is
    clipped to the symmetric part of the sampled range.
    """
    pts = np.asarray(curve.samples, dtype=float)
    span = float(min(pts[:, 0].max(), -pts[:, 0].min()))
    if span <= 0:
        raise InsufficientSamples("curve samples do not straddle the origin")
    h = span if h is None else min(float(h), span)
    deg = order + 3
    # first neglected power with the parity of ``order``
    k = deg + 1 if (deg + 1 - order) % 2 == 0 else deg + 2
    gain = 2.0 ** (k - order)

    def fit(hw):
        sel = np.abs(pts[:, 0]) <= hw * (1 + 1e-12)
        if np.count_nonzero(sel) < deg + 4:
            raise InsufficientSamples(f"{np.count_nonzero(sel)} samples within |u| <= {hw:.3g}")
        u, v = pts[sel, 0], pts[sel, 1]
        coef = np.polynomial.polynomial.polyfit(u / hw, v, deg)
        return coef[order] / hw**order, coef[1] / hw

    c1, lin = fit(h)
    c2, _ = fit(0.5 * h)
    value = (gain * c2 - c1) / (gain - 1)
    return FitResult(float(value), float(abs(c2 - c1) / (gain - 1)), float(h), float(lin))


def _u_grid(radius: float, n: int = 101) -> np.ndarray:
    return np.linspace(-radius, radius, 2 * n + 1)


def _continue_from_origin(solver, us: np.ndarray, start):
    """Solve along u from the origin outward, using the last solution as guess."""
    mid = len(us) // 2
    out = {mid: start}
    for rng in (range(mid + 1, len(us)), range(mid - 1, -1, -1)):
        prev2 = prev = start
        for i in rng:
            guess = 2 * np.asarray(prev) - np.asarray(prev2)
            sol = solver(us[i], guess)
            if sol is None:
                return None
            out[i] = sol
            prev2, prev = prev, sol
    return [out[i] for i in range(len(us))]


def local_parabolic(ctx: GodronContext, radius: float | None = None) -> PlanarCurve:
    h = ctx.h
    r = radius or ctx.radius
    us = _u_grid(r)
    d20, d11, d02 = h.derivative(2, 0), h.derivative(1, 1), h.derivative(0, 2)
    d30, d21, d12, d03 = h.derivative(3, 0), h.derivative(2, 1), h.derivative(1, 2), h.derivative(0, 3)

    def solve(u, v0):
        v = float(v0)
        for _ in range(40):
            a, b, c = d20(u, v), d11(u, v), d02(u, v)
            f = a * c - b * b
            fv = d21(u, v) * c + a * d03(u, v) - 2 * b * d12(u, v)
            if fv == 0:
                return None
            dv = f / fv
            v -= dv
            if abs(dv) < 1e-16 * (1 + abs(v)) + 1e-300:
                break
        scale = (abs(d20(u, v)) + 2 * abs(d11(u, v)) + abs(d02(u, v))) ** 2
        ok = abs(d20(u, v) * d02(u, v) - d11(u, v) ** 2) <= 1e-9 * scale
        return v if ok else None

    vs = _continue_from_origin(solve, us, 0.0)
    if vs is None:
        raise BranchTraceFailure("parabolic curve lost near the godron")
    return PlanarCurve(np.column_stack([us, vs]), us, tag="parabolic-local")


def local_flecnodal(ctx: GodronContext, radius: float | None = None) -> tuple[PlanarCurve, np.ndarray]:
    h = ctx.h
    r = radius or ctx.radius
    us = _u_grid(r)

    def solve(u, z0):
        v, t = float(z0[0]), float(z0[1])
        for _ in range(40):
            fm = Forms.at(h, u, v, t, order=4)
            F = np.array([fm.A, fm.I])
            J = np.array([[fm.form(2, 0, (0, 1)), fm.form(2, 1)], [fm.form(3, 0, (0, 1)), fm.form(3, 1)]])
            try:
                d = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                return None
            v, t = v + d[0], t + d[1]
            if np.max(np.abs(d)) < 1e-16:
                break
        fm = Forms.at(h, u, v, t, order=3)
        sc = abs(fm.p[(2, 0)]) + 2 * abs(fm.p[(1, 1)]) + abs(fm.p[(0, 2)]) + 1e-300
        if max(abs(fm.A), abs(fm.I)) > 1e-10 * sc:
            return None
        return np.array([v, t])

    zs = _continue_from_origin(solve, us, np.array([0.0, 0.0]))
    if zs is None:
        raise BranchTraceFailure("flecnodal curve lost near the godron")
    zs = np.array(zs)
    return PlanarCurve(np.column_stack([us, zs[:, 0]]), us, tag="flecnodal-local"), zs[:, 1]


def separating_jet(s: PolySurface | None, ctx: GodronContext, bracket: tuple[float, float] = (-4.0, 4.0)) -> float:
    """Separating 2-jet c_S by bisection on the cusp side of the dual image of v = c u^2.

    The cusp side is the sign of the t^2 coefficient of h_v(t, c t^2), the
    component of the dual curve along the normal to the common tangent line.
    """
    hv = ctx.h.derivative(0, 1)

    def side(c: float) -> float:
        return sum(float(k) * (c**j) for (i, j), k in hv.terms.items() if i + 2 * j == 2)

    lo, hi = bracket
    for _ in range(8):
        if side(lo) * side(hi) < 0:
            break
        lo, hi = 8 * lo, 8 * hi
    else:
        raise NoSignChange(f"no sign change of the cusp side in [{lo}, {hi}]")
    flo = side(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = side(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def trace_conodal_local(
    s: PolySurface | None,
    ctx: GodronContext,
    c_d_guess: float,
    radius: float | None = None,
    n: int = 96,
) -> PlanarCurve:
    """Contact points of bitangent planes near the godron, by continuation in the half-distance.

    Unknowns for a half-distance d: the midpoint abscissa m and the ordinates of
    a = (m + d, a_v) and b = (m - d, b_v).  Equations: equal gradients at a and b
    and the tangent planes coincide.
    """
    h = ctx.h
    r = radius or ctx.radius
    d0 = r / 64
    hu, hv = h.derivative(1, 0), h.derivative(0, 1)
    huu, huv, hvv = h.derivative(2, 0), h.derivative(1, 1), h.derivative(0, 2)

    def system(z, d):
        m, av, bv = z
        au, bu = m + d, m - d
        ga = np.array([hu(au, av), hv(au, av)])
        gb = np.array([hu(bu, bv), hv(bu, bv)])
        Ha = np.array([[huu(au, av), huv(au, av)], [huv(au, av), hvv(au, av)]])
        Hb = np.array([[huu(bu, bv), huv(bu, bv)], [huv(bu, bv), hvv(bu, bv)]])
        delta = np.array([2 * d, av - bv])
        gs = 0.5 * (ga + gb)
        F = np.array([ga[0] - gb[0], ga[1] - gb[1], h(au, av) - h(bu, bv) - gs @ delta])
        J = np.zeros((3, 3))
        J[0] = [Ha[0, 0] - Hb[0, 0], Ha[0, 1], -Hb[0, 1]]
        J[1] = [Ha[1, 0] - Hb[1, 0], Ha[1, 1], -Hb[1, 1]]
        J[2, 0] = ga[0] - gb[0] - 0.5 * (Ha[:, 0] + Hb[:, 0]) @ delta
        J[2, 1] = ga[1] - 0.5 * Ha[:, 1] @ delta - gs[1]
        J[2, 2] = -gb[1] - 0.5 * Hb[:, 1] @ delta + gs[1]
        # rows scaled to comparable orders in d
        sc = np.array([d, d, d**3]) + 1e-300
        return F / sc[:, None].ravel(), J / sc[:, None]

    sols: list[np.ndarray] = []
    dd: list[float] = []
    step = (r - d0) / n
    d = d0
    z = np.array([0.0, c_d_guess * d0**2, c_d_guess * d0**2])
    while d <= r * (1 + 1e-12):
        if len(sols) >= 2:
            z = sols[-1] + (sols[-1] - sols[-2]) * (d - dd[-1]) / (dd[-1] - dd[-2])
        res = root(lambda zz: system(zz, d), z, jac=True, method="hybr", options={"xtol": 1e-14})
        F, _ = system(res.x, d)
        if (res.success or np.max(np.abs(F)) <= 1e-9) and abs(res.x[0]) <= d + r:
            sols.append(res.x.copy())
            dd.append(d)
            step = min(step * 1.5, (r - d0) / n)
            d += step
            continue
        if not sols:
            raise SeedFailure(f"bitangency system unsolved at d = {d:.3g}: {res.message}")
        step *= 0.5
        if step < (r - d0) / n / 32:
            break
        d = dd[-1] + step
    if len(sols) < 8:
        raise SeedFailure("conodal continuation stopped after too few steps")
    sols = np.array(sols)
    dd = np.array(dd)
    pa = np.column_stack([sols[:, 0] + dd, sols[:, 1]])
    pb = np.column_stack([sols[:, 0] - dd, sols[:, 2]])
    pts = np.vstack([pb[::-1], [[0.0, 0.0]], pa])
    order = np.argsort(pts[:, 0], kind="stable")
    pts = pts[order]
    return PlanarCurve(pts, pts[:, 0], tag="conodal-local")


# ---------------------------------------------------------------------------
# tangent section and g-contour

def _branch_roots(poly2d: np.ndarray, us: np.ndarray, bound: float) -> list[list[float]]:
    """Real roots v with |v| <= bound * u^2 of the polynomial sum c_ij u^i v^j, per u."""
    out = []
    for u in us:
        cv = np.polynomial.polynomial.polyval(u, poly2d)  # coefficients in v
        cv = np.trim_zeros(np.atleast_1d(cv), "b")
        if len(cv) < 2:
            out.append([])
            continue
        rts = np.polynomial.polynomial.polyroots(cv)
        real = [float(z.real) for z in rts if abs(z.imag) <= 1e-7 * (abs(z.real) + u * u) and abs(z.real) <= bound * u * u]
        out.append(sorted(real))
    return out


def _polar_constant_sign(f: PolySurface, r: float, nr: int = 24, na: int = 256) -> tuple[bool, int]:
    rr = np.linspace(r / nr, r, nr)
    aa = np.linspace(0, 2 * math.pi, na, endpoint=False)
    R, A = np.meshgrid(rr, aa)
    vals = f(R * np.cos(A), R * np.sin(A))
    pos, neg = np.count_nonzero(vals > 0), np.count_nonzero(vals < 0)
    vals_c = f(r * np.cos(aa), r * np.sin(aa))
    sg = np.sign(vals_c)
    sg = sg[sg != 0]
    changes = int(np.count_nonzero(sg != np.roll(sg, 1))) if len(sg) else 0
    return (pos == 0 or neg == 0), changes


def _local_branches(f: PolySurface, ctx: GodronContext, expect_trivial: bool, bound: float, tag: str) -> LocalBranches:
    r = ctx.radius
    for _ in range(6):
        trivial, changes = _polar_constant_sign(f, r)
        if expect_trivial:
            if trivial:
                return LocalBranches(True, sign_changes=changes)
            r *= 0.5
            continue
        us = _u_grid(r)
        us = us[us != 0.0]
        roots = _branch_roots(f.coeffs, us, bound)
        if all(len(z) == 2 for z in roots):
            lo = np.array([[u, z[0]] for u, z in zip(us, roots)])
            hi = np.array([[u, z[1]] for u, z in zip(us, roots)])
            lo = np.vstack([lo[us < 0], [[0, 0]], lo[us > 0]])
            hi = np.vstack([hi[us < 0], [[0, 0]], hi[us > 0]])
            c_lo = canonical_fit(PlanarCurve(lo, lo[:, 0]), 2, r)
            c_hi = canonical_fit(PlanarCurve(hi, hi[:, 0]), 2, r)
            return LocalBranches(
                False,
                c_lo.value,
                c_hi.value,
                (PlanarCurve(lo, lo[:, 0], tag=f"{tag}-minus"), PlanarCurve(hi, hi[:, 0], tag=f"{tag}-plus")),
                changes,
            )
        r *= 0.5
    raise BranchTraceFailure(f"{tag}: branch structure not resolved near the godron")


def tangent_section_local(s: PolySurface | None, ctx: GodronContext, rho: float) -> LocalBranches:
    """Zero set of the chart height near the godron: trivial iff rho > 1."""
    c_s = separating_jet(s, ctx)
    return _local_branches(ctx.h, ctx, rho > 1, 8 * (abs(c_s) + 1), "section")


def contour_function(h: PolySurface) -> PolySurface:
    """Phi = h - u h_u - v h_v: the tangent plane at (u, v) passes through the chart origin."""
    terms = {}
    for (i, j), c in h.terms.items():
        k = 1 - i - j
        if k:
            terms[(i, j)] = c * k
    return PolySurface(terms)


def g_contour_local(s: PolySurface | None, ctx: GodronContext, rho: float) -> LocalBranches:
    """Contact locus of tangent planes through the godron: trivial iff rho > 4/3."""
    c_s = separating_jet(s, ctx)
    return _local_branches(contour_function(ctx.h), ctx, rho > 4 / 3, 16 * (abs(c_s) + 1), "contour")


# ---------------------------------------------------------------------------
# cr-invariant

def rho_routes(c_p: float | None, c_f: float | None, c_d: float | None, c_s: float) -> dict[str, float | None]:
    r1 = None if c_p is None else (c_p / c_s + 2) / 3
    r2 = None
    if c_f is not None:
        q = c_f / c_s
        disc = max(1 + 8 * q, 0.0)
        cands = [(1 + math.sqrt(disc)) / 4, (1 - math.sqrt(disc)) / 4]
        ref = r1 if r1 is not None else cands[0]
        r2 = min(cands, key=lambda z: abs(z - ref))
    r3 = None
    if None not in (c_p, c_f, c_d) and c_p != c_d:
        r3 = (c_f - c_d) / (c_p - c_d)
    return {"parabolic": r1, "flecnodal": r2, "crossRatio": r3}


def cr_invariant(s: PolySurface | None, ctx: GodronContext) -> tuple[float, RhoDiagnostics, CanonicalCoefficients, dict]:
    """rho from the canonical coefficients; returns (rho, diagnostics, coefficients, local curves)."""
    c_s = separating_jet(s, ctx)
    curves: dict[str, PlanarCurve] = {}
    errors: dict[str, float] = {}
    flags: list[str] = []
    par = local_parabolic(ctx)
    fp = canonical_fit(par, 2, ctx.radius)
    curves["parabolic"] = par
    c_p, errors["cP"] = fp.value, fp.error
    c_f = None
    try:
        fl, _ = local_flecnodal(ctx)
        ff = canonical_fit(fl, 2, ctx.radius)
        curves["flecnodal"] = fl
        c_f, errors["cF"] = ff.value, ff.error
    except BranchTraceFailure:
        flags.append("flecnodal-local-failed")
    routes = rho_routes(c_p, c_f, None, c_s)
    rho1 = routes["parabolic"]
    c_d = None
    if abs(rho1) > DEGENERACY_EPS and abs(rho1 - 1) > DEGENERACY_EPS:
        try:
            cd_curve = trace_conodal_local(s, ctx, rho1 * c_s)
            fd = canonical_fit(cd_curve, 2, ctx.radius)
            curves["conodal"] = cd_curve
            c_d, errors["cD"] = fd.value, fd.error
        except (SeedFailure, InsufficientSamples) as exc:
            flags.append("conodal-failed")
            log.info("conodal continuation failed: %s", exc)
    routes = rho_routes(c_p, c_f, c_d, c_s)
    vals = [v for v in routes.values() if v is not None]
    dev = max((abs(a - b) for a in vals for b in vals), default=0.0)
    if dev > ROUTE_TOL:
        flags.append("route-deviation")
    if dev > ROUTE_FAIL:
        flags.append("inconsistent-routes")
    rho = routes["crossRatio"] if routes["crossRatio"] is not None else rho1
    coeffs = CanonicalCoefficients(c_f, c_p, c_d, c_s, errors=errors)
    return float(rho), RhoDiagnostics(routes, float(dev), tuple(flags)), coeffs, curves


# ---------------------------------------------------------------------------
# full record

def analyze_godron(
    s: PolySurface,
    g: LiftedPoint,
    window: Window,
    sections: bool = True,
    contours: bool = True,
    eps: float = DEGENERACY_EPS,
    radius_scale: float = 1.0,
) -> GodronRecord:
    ctx = godron_context(s, g, window)
    ctx.radius *= radius_scale
    flags: list[str] = []
    rho, diag, coeffs, curves = _robust_rho(s, ctx)
    flags.extend(diag.flags)
    if abs(rho) < eps:
        flags.append("near-flec")
    if abs(rho - 1) < eps:
        flags.append("near-bigodron")
    try:
        idx = godron_index(s, ctx)
        index = idx.index
    except IndeterminateIndex as exc:
        idx = None
        index = int(np.sign(exc.winding)) if exc.winding else (1 if rho > 1 else -1)
        flags.append("indeterminate-index")
    labels = None
    try:
        labels = classify_godron(rho, eps)
    except DegenerateRho:
        pass
    section = contour = None
    c_tm = c_tp = c_cm = c_cp = None
    degenerate = "near-flec" in flags or "near-bigodron" in flags
    if sections and not degenerate:
        try:
            section = tangent_section_local(s, ctx, rho)
            c_tm, c_tp = section.c_minus, section.c_plus
        except BranchTraceFailure:
            flags.append("section-failed")
    if contours and not degenerate:
        try:
            contour = g_contour_local(s, ctx, rho)
            c_cm, c_cp = contour.c_minus, contour.c_plus
        except BranchTraceFailure:
            flags.append("contour-failed")
    coeffs = CanonicalCoefficients(coeffs.cF, coeffs.cP, coeffs.cD, coeffs.cS, c_tm, c_tp, c_cm, c_cp, coeffs.errors)
    return GodronRecord(
        (g.x, g.y),
        g.slope,
        g.chart,
        ctx.chart,
        rho,
        diag,
        index,
        idx,
        coeffs,
        labels,
        tuple(sorted(set(flags))),
        curves,
        section,
        contour,
    )


def _robust_rho(s: PolySurface, ctx: GodronContext, attempts: int = 5):
    """cr_invariant at the largest fit radius (halving from ctx.radius) where the routes agree.

    When no radius gives agreement without failures, the attempt with the
    fewest failure flags and the smallest route deviation is kept.
    """
    best, best_key, best_r, last = None, None, ctx.radius, None
    r0 = ctx.radius
    for k in range(attempts):
        ctx.radius = r0 * 0.5**k
        try:
            out = cr_invariant(s, ctx)
        except (BranchTraceFailure, InsufficientSamples) as exc:
            last = exc
            continue
        failures = sum(1 for f in out[1].flags if f.endswith("failed"))
        key = (failures, out[1].max_deviation)
        if best_key is None or key < best_key:
            best, best_key, best_r = out, key, ctx.radius
        if failures == 0 and out[1].max_deviation <= ROUTE_TOL:
            break
    ctx.radius = best_r
    if best is None:
        raise BranchTraceFailure(f"local curves not resolved: {last}")
    return best
