"""Symmetric forms D^k f[v, ..., v] along a unit direction v = (cos t, sin t).

Everything that lives on the asymptotic double is evaluated here in the angle
parametrisation, which has no chart swaps; slope charts are only used for
input and output.
"""

from __future__ import annotations

import math

import numpy as np

from .surface import PolySurface


def _theta_derivative(terms: dict, n: int) -> dict:
    # d/dt (c^a s^b) = -a c^(a-1) s^(b+1) + b c^(a+1) s^(b-1)
    for _ in range(n):
        out: dict = {}
        for (a, b), k in terms.items():
            if a:
                out[(a - 1, b + 1)] = out.get((a - 1, b + 1), 0) - a * k
            if b:
                out[(a + 1, b - 1)] = out.get((a + 1, b - 1), 0) + b * k
        terms = {m: k for m, k in out.items() if k}
    return terms


class Forms:
    """Binary forms of the partial derivatives at points (x, y) and angles t.

    ``partials`` maps (i, j) to values (scalars or arrays broadcastable with
    ``theta``).
    """

    def __init__(self, partials: dict, theta):
        self.p = partials
        self.theta = theta
        self.c = np.cos(theta)
        self.s = np.sin(theta)

    @classmethod
    def at(cls, surf: PolySurface, x, y, theta, order: int = 5) -> "Forms":
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return cls(surf.partials_at(float(x), float(y), order), theta)
        p = {}
        for k in range(order + 1):
            for i in range(k + 1):
                p[(k - i, i)] = surf.derivative(k - i, i)(x, y)
        return cls(p, theta)

    def form(self, k: int, dtheta: int = 0, shift: tuple[int, int] = (0, 0)):
        """d^dtheta/dt^dtheta of D^k (d^shift f)[v, ..., v]."""
        sx, sy = shift
        total = 0.0
        for i in range(k + 1):
            coef = self.p.get((k - i + sx, i + sy), 0.0)
            if np.all(np.asarray(coef) == 0):
                continue
            terms = _theta_derivative({(k - i, i): math.comb(k, i)}, dtheta)
            for (a, b), m in terms.items():
                total = total + m * coef * self.c**a * self.s**b
        return total

    # quantities on the asymptotic double
    @property
    def A(self):
        return self.form(2)

    @property
    def I(self):
        return self.form(3)

    @property
    def A_t(self):
        return self.form(2, 1)

    def field(self):
        """Lifted asymptotic field (dx, dy, dt) = (A_t cos t, A_t sin t, -I)."""
        at = self.A_t
        return at * self.c, at * self.s, -self.I


def angle_of(slope: float, chart: str) -> float:
    """Angle in [0, pi) of a slope given in the P chart (dy/dx) or Q chart (dx/dy)."""
    if chart == "P":
        t = math.atan(slope)
    else:
        t = math.atan2(1.0, slope)
    return t % math.pi


def slope_of(theta: float, prev_chart: str | None = None, swap: float = 1.5) -> tuple[float, str]:
    """Chart slope of an angle, keeping ``prev_chart`` unless its slope exceeds ``swap``."""
    c, s = math.cos(theta), math.sin(theta)
    if prev_chart == "P" and abs(s) <= swap * abs(c):
        return s / c, "P"
    if prev_chart == "Q" and abs(c) <= swap * abs(s):
        return c / s, "Q"
    if abs(s) <= abs(c):
        return s / c, "P"
    return c / s, "Q"


def wrap_angle(d):
    """Representative of an angle difference modulo pi in [-pi/2, pi/2)."""
    return (np.asarray(d) + 0.5 * np.pi) % np.pi - 0.5 * np.pi
