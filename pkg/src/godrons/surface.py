"""Polynomial surface graphs z = f(x, y), exact jets and adapted affine charts."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import (
    DegenerateHessian,
    DegreeOverflow,
    NotParabolic,
    SurfaceSyntaxError,
    UnsupportedOperator,
)

MAX_DEGREE = 24

Point2 = tuple[float, float]
Point3 = tuple[float, float, float]
Number = Fraction | float


# ---------------------------------------------------------------------------
# dict polynomials (used by the parser, exact when coefficients are Fractions)

def _padd(p: dict, q: dict, sign: int = 1) -> dict:
    out = dict(p)
    for k, c in q.items():
        out[k] = out.get(k, 0) + sign * c
    return {k: c for k, c in out.items() if c != 0}


def _pmul(p: dict, q: dict) -> dict:
    out: dict = {}
    for (i1, j1), c1 in p.items():
        for (i2, j2), c2 in q.items():
            k = (i1 + i2, j1 + j2)
            out[k] = out.get(k, 0) + c1 * c2
    return {k: c for k, c in out.items() if c != 0}


def _pdeg(p: dict) -> int:
    return max((i + j for i, j in p), default=0)


# ---------------------------------------------------------------------------
# PolySurface

@dataclass(frozen=True, eq=False)
class PolySurface:
    """Bivariate polynomial ``f(x, y) = sum c_ij x^i y^j``.

    ``terms`` maps exponent pairs to coefficients; coefficients parsed from
    text are kept as :class:`fractions.Fraction` so exact evaluation is
    possible, while all numerical work goes through a float coefficient array.
    """

    terms: Mapping[tuple[int, int], Number]
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        clean = {}
        for (i, j), c in dict(self.terms).items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent {(i, j)}")
            if not math.isfinite(float(c)):
                raise ValueError(f"non-finite coefficient for x^{i} y^{j}")
            if c != 0:
                clean[(int(i), int(j))] = c
        if _pdeg(clean) > MAX_DEGREE:
            raise DegreeOverflow(f"degree {_pdeg(clean)} exceeds {MAX_DEGREE}")
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    # -- construction -----------------------------------------------------
    @classmethod
    def from_coeffs(cls, coeffs: np.ndarray, tol: float = 0.0) -> "PolySurface":
        coeffs = np.asarray(coeffs, dtype=float)
        terms = {
            (int(i), int(j)): float(coeffs[i, j])
            for i, j in zip(*np.nonzero(np.abs(coeffs) > tol))
        }
        return cls(terms)

    @property
    def degree(self) -> int:
        return _pdeg(self.terms)

    @property
    def coeffs(self) -> np.ndarray:
        c = self._cache.get("coeffs")
        if c is None:
            n = self.degree + 1
            c = np.zeros((n, n))
            for (i, j), v in self.terms.items():
                c[i, j] = float(v)
            c.setflags(write=False)
            self._cache["coeffs"] = c
        return c

    def __eq__(self, other):
        if not isinstance(other, PolySurface):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def __repr__(self):
        return f"PolySurface({self.to_text()!r})"

    # -- evaluation -------------------------------------------------------
    def __call__(self, x, y):
        return npoly.polyval2d(x, y, self.coeffs)

    def evaluate_exact(self, x: Number, y: Number) -> Number:
        total = 0
        for (i, j), c in self.terms.items():
            total += c * x**i * y**j
        return total

    def derivative(self, i: int, j: int) -> "PolySurface":
        key = ("d", i, j)
        d = self._cache.get(key)
        if d is None:
            terms = {}
            for (a, b), c in self.terms.items():
                if a >= i and b >= j:
                    factor = math.perm(a, i) * math.perm(b, j)
                    terms[(a - i, b - j)] = c * factor
            d = PolySurface(terms)
            self._cache[key] = d
        return d

    def _stack(self, order: int):
        key = ("stack", order)
        st = self._cache.get(key)
        if st is None:
            n = self.degree + 1
            idx = [(a, k - a) for k in range(order + 1) for a in range(k, -1, -1)]
            arr = np.zeros((len(idx), n, n))
            for m, (a, b) in enumerate(idx):
                d = self.derivative(a, b).coeffs
                arr[m, : d.shape[0], : d.shape[1]] = d
            st = (idx, arr)
            self._cache[key] = st
        return st

    def partials_at(self, x: float, y: float, order: int) -> dict[tuple[int, int], float]:
        """All partial derivatives of order <= ``order`` at one point."""
        idx, arr = self._stack(order)
        n = arr.shape[1]
        xp = x ** np.arange(n)
        yp = y ** np.arange(n)
        vals = np.einsum("kij,i,j->k", arr, xp, yp)
        return dict(zip(idx, vals.tolist()))

    # -- transformations --------------------------------------------------
    def swap_xy(self) -> "PolySurface":
        return PolySurface({(j, i): c for (i, j), c in self.terms.items()})

    def affine_pullback(self, origin: Point2, matrix) -> "PolySurface":
        """The polynomial ``g(u, v) = f(origin + M (u, v))``."""
        m = np.asarray(matrix, dtype=float)
        x0, y0 = float(origin[0]), float(origin[1])
        lin_x = np.array([[x0, m[0, 1]], [m[0, 0], 0.0]])
        lin_y = np.array([[y0, m[1, 1]], [m[1, 0], 0.0]])
        n = self.degree + 1
        xpow = [np.ones((1, 1))]
        ypow = [np.ones((1, 1))]
        for _ in range(n - 1):
            xpow.append(_mul2d(xpow[-1], lin_x))
            ypow.append(_mul2d(ypow[-1], lin_y))
        out = np.zeros((n, n))
        for (i, j), c in self.terms.items():
            prod = _mul2d(xpow[i], ypow[j])
            out[: prod.shape[0], : prod.shape[1]] += float(c) * prod
        return PolySurface.from_coeffs(out)

    def __add__(self, other: "PolySurface") -> "PolySurface":
        return PolySurface(_padd(self.terms, other.terms))

    def __sub__(self, other: "PolySurface") -> "PolySurface":
        return PolySurface(_padd(self.terms, other.terms, -1))

    def scaled(self, factor: float) -> "PolySurface":
        return PolySurface({k: c * factor for k, c in self.terms.items()})

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (i, j), c in sorted(self.terms.items(), key=lambda t: (t[0][0] + t[0][1], t[0])):
            mono = "*".join(
                s for s in (
                    "" if i == 0 else ("x" if i == 1 else f"x^{i}"),
                    "" if j == 0 else ("y" if j == 1 else f"y^{j}"),
                ) if s
            )
            if isinstance(c, Fraction):
                coef = str(c) if c.denominator == 1 else f"({c})"
            else:
                coef = repr(float(c))
            parts.append(coef if not mono else f"{coef}*{mono}")
        return " + ".join(parts)


def _mul2d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for (i, j), v in np.ndenumerate(b):
        if v != 0.0:
            out[i : i + a.shape[0], j : j + a.shape[1]] += v * a
    return out


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()−])|(?P<bad>\S))"
)


class _Parser:
    def __init__(self, text: str, params: Mapping[str, Number]):
        self.text = text
        self.params = dict(params)
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                break
            kind = m.lastgroup
            start = m.start(kind)
            value = m.group(kind)
            if kind == "bad":
                raise UnsupportedOperator(f"unsupported character {value!r}", start, text)
            if value == "−":
                value = "-"
            if value == "**":
                value = "^"
            self.tokens.append((kind, value, start))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, v, pos = self.take()
        if v != value:
            raise SurfaceSyntaxError(f"expected {value!r}, found {v or 'end of input'!r}", pos, self.text)

    def parse(self) -> dict:
        if self.peek()[0] == "end":
            raise SurfaceSyntaxError("empty expression", 0, self.text)
        p = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise SurfaceSyntaxError(f"unexpected token {v!r}", pos, self.text)
        return p

    def expr(self) -> dict:
        p = self.term()
        while self.peek()[1] in ("+", "-"):
            _, op, _ = self.take()
            q = self.term()
            p = _padd(p, q, 1 if op == "+" else -1)
        return p

    def term(self) -> dict:
        p = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            q = self.unary()
            if op == "*":
                p = self._checked(_pmul(p, q), pos)
            else:
                if any(k != (0, 0) for k in q):
                    raise UnsupportedOperator("division by a non-constant expression", pos, self.text)
                c = q.get((0, 0), 0)
                if c == 0:
                    raise SurfaceSyntaxError("division by zero", pos, self.text)
                p = {k: v / c for k, v in p.items()}
        return p

    def unary(self) -> dict:
        if self.peek()[1] in ("+", "-"):
            _, op, _ = self.take()
            p = self.unary()
            return p if op == "+" else {k: -v for k, v in p.items()}
        return self.power()

    def power(self) -> dict:
        base = self.atom()
        if self.peek()[1] == "^":
            _, _, pos = self.take()
            kind, v, epos = self.take()
            paren = False
            if v == "(":
                paren = True
                kind, v, epos = self.take()
            if kind != "num" or not v.isdigit():
                raise UnsupportedOperator("exponent must be a non-negative integer literal", epos, self.text)
            if paren:
                self.expect(")")
            n = int(v)
            if _pdeg(base) * n > MAX_DEGREE:
                raise DegreeOverflow(f"degree overflow (> {MAX_DEGREE}) at position {pos}")
            out = {(0, 0): Fraction(1)}
            for _ in range(n):
                out = _pmul(out, base)
            base = out
            if self.peek()[1] == "^":
                raise SurfaceSyntaxError("chained exponents need parentheses", self.peek()[2], self.text)
        return base

    def atom(self) -> dict:
        kind, v, pos = self.take()
        if kind == "num":
            return {(0, 0): Fraction(v)} if Fraction(v) != 0 else {}
        if kind == "name":
            if v == "x":
                return {(1, 0): Fraction(1)}
            if v == "y":
                return {(0, 1): Fraction(1)}
            if v in self.params:
                c = self.params[v]
                return {(0, 0): c} if c != 0 else {}
            raise SurfaceSyntaxError(f"unknown identifier {v!r}", pos, self.text)
        if v == "(":
            p = self.expr()
            self.expect(")")
            return p
        raise SurfaceSyntaxError(f"unexpected token {v or 'end of input'!r}", pos, self.text)

    def _checked(self, p: dict, pos: int) -> dict:
        if _pdeg(p) > MAX_DEGREE:
            raise DegreeOverflow(f"degree overflow (> {MAX_DEGREE}) at position {pos}")
        return p


def parse_surface(text: str, params: Mapping[str, Number] | None = None) -> PolySurface:
    """Parse an expression in ``x`` and ``y`` into a :class:`PolySurface`.

    ``params`` binds extra identifiers to numeric values (used by family scans).
    Raises :class:`SurfaceSyntaxError` (with a character position) on bad input
    and :class:`DegreeOverflow` above degree 24.
    """
    return PolySurface(_Parser(text, params or {}).parse())


# ---------------------------------------------------------------------------
# jets

@dataclass(frozen=True)
class Jet:
    """Raw partial derivatives ``d^(i+j) f / dx^i dy^j`` at ``base``."""

    base: Point2
    order: int
    partials: Mapping[tuple[int, int], float]

    def __getitem__(self, ij: tuple[int, int]) -> float:
        i, j = ij
        if i + j > self.order:
            raise KeyError(f"partial {ij} beyond jet order {self.order}")
        return self.partials.get(ij, 0.0)

    def form(self, k: int, v: Sequence[float]) -> float:
        """The symmetric k-linear form ``D^k f [v, ..., v]``."""
        c, s = v
        return sum(math.comb(k, i) * self[(k - i, i)] * c ** (k - i) * s**i for i in range(k + 1))

    def scale(self) -> float:
        vals = [abs(v) for (i, j), v in self.partials.items() if 2 <= i + j <= min(self.order, 4)]
        return max(vals, default=0.0) or 1.0

    @property
    def hessian(self) -> np.ndarray:
        return np.array([[self[(2, 0)], self[(1, 1)]], [self[(1, 1)], self[(0, 2)]]])


def eval_jet(s: PolySurface, pt: Point2, order: int) -> Jet:
    """Exact partial derivatives of ``s`` up to ``order`` at ``pt``."""
    if order < 0:
        raise ValueError("order must be non-negative")
    vals = s.partials_at(float(pt[0]), float(pt[1]), order)
    return Jet((float(pt[0]), float(pt[1])), order, vals)


# ---------------------------------------------------------------------------
# curves

@dataclass(frozen=True)
class PlanarCurve:
    samples: np.ndarray
    params: np.ndarray | None = None
    closed: bool = False
    tag: str = ""

    def __post_init__(self):
        pts = np.asarray(self.samples, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "samples", pts)
        if self.params is not None:
            object.__setattr__(self, "params", np.asarray(self.params, dtype=float))

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class SpaceCurve:
    samples: np.ndarray
    params: np.ndarray | None = None
    closed: bool = False
    tag: str = ""

    def __post_init__(self):
        pts = np.asarray(self.samples, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "samples", pts)
        if self.params is not None:
            object.__setattr__(self, "params", np.asarray(self.params, dtype=float))

    def __len__(self):
        return len(self.samples)


def lift_curve(s: PolySurface, c: PlanarCurve) -> SpaceCurve:
    """The curve ``(x, y, f(x, y))`` over a planar curve."""
    pts = c.samples
    z = s(pts[:, 0], pts[:, 1])
    return SpaceCurve(np.column_stack([pts, z]), c.params, c.closed, c.tag)


# ---------------------------------------------------------------------------
# adapted charts

@dataclass(frozen=True)
class AffineChart:
    """Affine coordinates (u, v, w) with the (u, v)-plane tangent at ``origin3``.

    Ambient point of chart coordinates (u, v, w)::

        (x, y) = origin + M (u, v)
        z      = alpha x + beta y + gamma + sign * w
    """

    origin3: Point3
    plane: Point3
    linear_map: tuple[tuple[float, float], tuple[float, float]]
    orientation_sign: int

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.linear_map, dtype=float)

    @property
    def origin(self) -> Point2:
        return (self.origin3[0], self.origin3[1])

    def to_ambient(self, u, v):
        m = self.matrix
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return self.origin3[0] + m[0, 0] * u + m[0, 1] * v, self.origin3[1] + m[1, 0] * u + m[1, 1] * v

    def to_chart(self, x, y):
        mi = np.linalg.inv(self.matrix)
        dx = np.asarray(x, dtype=float) - self.origin3[0]
        dy = np.asarray(y, dtype=float) - self.origin3[1]
        return mi[0, 0] * dx + mi[0, 1] * dy, mi[1, 0] * dx + mi[1, 1] * dy

    def frame(self) -> np.ndarray:
        """Columns e_u, e_v, e_w expressed in ambient coordinates."""
        m = self.matrix
        a, b, _ = self.plane
        e_u = [m[0, 0], m[1, 0], a * m[0, 0] + b * m[1, 0]]
        e_v = [m[0, 1], m[1, 1], a * m[0, 1] + b * m[1, 1]]
        e_w = [0.0, 0.0, float(self.orientation_sign)]
        return np.array([e_u, e_v, e_w]).T

    def pullback(self, s: PolySurface) -> PolySurface:
        """Height ``w(u, v)`` of the surface over the chart plane."""
        a, b, g = self.plane
        plane = PolySurface({(0, 0): g, (1, 0): a, (0, 1): b})
        return (s - plane).affine_pullback(self.origin, self.matrix).scaled(float(self.orientation_sign))

    def pushforward(self, h: PolySurface) -> PolySurface:
        """Inverse of :meth:`pullback`: the ambient graph of a chart height."""
        mi = np.linalg.inv(self.matrix)
        x0, y0 = self.origin
        # (u, v) = Mi (x - x0, y - y0) = Mi (x, y) - Mi (x0, y0)
        shift = -mi @ np.array([x0, y0])
        g = h.affine_pullback((shift[0], shift[1]), mi).scaled(float(self.orientation_sign))
        a, b, c = self.plane
        return g + PolySurface({(0, 0): c, (1, 0): a, (0, 1): b})


def _direction(slope: float) -> np.ndarray:
    if slope is None or math.isinf(slope):
        return np.array([0.0, 1.0])
    d = np.array([1.0, float(slope)])
    return d / np.linalg.norm(d)


def adapted_chart(
    s: PolySurface,
    pt: Point2,
    asymptotic_slope: float | None,
    order: int = 5,
    parabolic_tol: float = 1e-6,
) -> tuple[AffineChart, Jet]:
    """Affine chart at a parabolic point with the u-axis along the asymptotic line.

    The v-axis points into the hyperbolic side and ``w`` towards the positive
    half-space (the side on which the surface lies near elliptic points), with
    (e_u, e_v, e_w) a positively oriented frame.  ``asymptotic_slope`` is dy/dx
    (``math.inf`` or ``None`` for a vertical direction); it is refined to the
    exact kernel of the Hessian.
    """
    x0, y0 = float(pt[0]), float(pt[1])
    jet = eval_jet(s, (x0, y0), 3)
    hess = jet.hessian
    det = float(np.linalg.det(hess))
    scale = float(np.abs(hess).sum()) ** 2
    if scale == 0.0:
        raise DegenerateHessian("vanishing Hessian at the chart origin")
    if abs(det) > parabolic_tol * scale:
        raise NotParabolic(f"Hessian determinant {det:.3e} is not small at {pt}")

    # one Newton step onto the parabolic curve
    grad_det = _hessdet_gradient(jet)
    g2 = float(grad_det @ grad_det)
    if g2 > 0.0 and det != 0.0:
        x0 -= det * grad_det[0] / g2
        y0 -= det * grad_det[1] / g2
        jet = eval_jet(s, (x0, y0), 3)
        hess = jet.hessian
        grad_det = _hessdet_gradient(jet)

    evals, evecs = np.linalg.eigh(hess)
    k = int(np.argmin(np.abs(evals)))
    e_u = evecs[:, k]
    guess = _direction(asymptotic_slope)
    if e_u @ guess < 0:
        e_u = -e_u
    e_v = np.array([-e_u[1], e_u[0]])
    f_vv = float(e_v @ hess @ e_v)
    if abs(f_vv) < 1e-12 * (float(np.abs(hess).max()) + 1e-300):
        raise DegenerateHessian("second derivative across the asymptotic line vanishes")
    sign = 1 if f_vv > 0 else -1
    # v into the hyperbolic side: the Hessian determinant decreases along e_v
    along = float(grad_det @ e_v)
    if abs(along) <= 1e-14 * (np.linalg.norm(grad_det) + 1e-300):
        along = float(grad_det @ e_v)
    if along > 0:
        e_v = -e_v
    m = np.column_stack([e_u, e_v])
    if sign * np.linalg.det(m) < 0:
        e_u = -e_u
        m = np.column_stack([e_u, e_v])

    z0 = float(s(x0, y0))
    fx, fy = jet[(1, 0)], jet[(0, 1)]
    plane = (fx, fy, z0 - fx * x0 - fy * y0)
    chart = AffineChart(
        (x0, y0, z0),
        plane,
        ((float(m[0, 0]), float(m[0, 1])), (float(m[1, 0]), float(m[1, 1]))),
        sign,
    )
    h = chart.pullback(s)
    return chart, eval_jet(h, (0.0, 0.0), max(order, 5))


def _hessdet_gradient(jet: Jet) -> np.ndarray:
    fxx, fxy, fyy = jet[(2, 0)], jet[(1, 1)], jet[(0, 2)]
    dx = jet[(3, 0)] * fyy + fxx * jet[(1, 2)] - 2 * fxy * jet[(2, 1)]
    dy = jet[(2, 1)] * fyy + fxx * jet[(0, 3)] - 2 * fxy * jet[(1, 2)]
    return np.array([dx, dy])
