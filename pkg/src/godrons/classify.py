"""Interval classification of godrons and swallowtails by the cr-invariant."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateRho

SQRT7_2 = math.sqrt(7) / 2
SQRT3_2 = math.sqrt(3) / 2

THRESHOLDS = {
    "-sqrt7/2": -SQRT7_2,
    "-sqrt3/2": -SQRT3_2,
    "-1/2": -0.5,
    "0": 0.0,
    "1/2": 0.5,
    "2/3": 2 / 3,
    "sqrt3/2": SQRT3_2,
    "8/9": 8 / 9,
    "1": 1.0,
    "sqrt7/2": SQRT7_2,
    "4/3": 4 / 3,
}

DEGENERACY_EPS = 1e-4
BOUNDARY_EPS = 1e-6

# each table: ascending list of (upper bound, label); the last bound is +inf
SIX_CONFIG = [
    (-0.5, "(-inf,-1/2)"),
    (0.0, "(-1/2,0)"),
    (0.5, "(0,1/2)"),
    (2 / 3, "(1/2,2/3)"),
    (1.0, "(2/3,1)"),
    (math.inf, "(1,inf)"),
]
CONTOUR_CONFIG = [
    (-SQRT7_2, "(-inf,-sqrt7/2)"),
    (-0.5, "(-sqrt7/2,-1/2)"),
    (0.0, "(-1/2,0)"),
    (1.0, "(0,1)"),
    (SQRT7_2, "(1,sqrt7/2)"),
    (4 / 3, "(sqrt7/2,4/3)"),
    (math.inf, "(4/3,inf)"),
]
SECTION_CONFIG = [
    (-SQRT3_2, "(-inf,-sqrt3/2)"),
    (-0.5, "(-sqrt3/2,-1/2)"),
    (0.0, "(-1/2,0)"),
    (SQRT3_2, "(0,sqrt3/2)"),
    (8 / 9, "(sqrt3/2,8/9)"),
    (1.0, "(8/9,1)"),
    (math.inf, "(1,inf)"),
]
SWALLOWTAIL4 = [(-0.5, "h3"), (0.0, "h2"), (1.0, "h1"), (math.inf, "e")]
SWALLOWTAIL7 = [
    (-SQRT7_2, "h32"),
    (-0.5, "h31"),
    (0.0, "h2"),
    (1.0, "h1"),
    (SQRT7_2, "e3"),
    (4 / 3, "e2"),
    (math.inf, "e1"),
]
S_CONTOUR6 = [
    (-SQRT3_2, "h32"),
    (-0.5, "h31"),
    (0.0, "h2"),
    (SQRT3_2, "h13"),
    (8 / 9, "h12"),
    (1.0, "h11"),
    (math.inf, "trivial"),
]


def _lookup(table, rho: float) -> str:
    for bound, label in table:
        if rho < bound:
            return label
    return table[-1][1]


@dataclass(frozen=True)
class ClassLabels:
    six_config: str
    contour_config: str
    section_config: str
    swallowtail4: str
    swallowtail7: str
    s_contour6: str
    convexity_side: str
    near_thresholds: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "sixConfig": self.six_config,
            "contourConfig": self.contour_config,
            "sectionConfig": self.section_config,
            "swallowtail4": self.swallowtail4,
            "swallowtail7": self.swallowtail7,
            "sContour6": self.s_contour6,
            "convexitySide": self.convexity_side,
            "nearThresholds": list(self.near_thresholds),
        }


def classify_godron(rho: float, eps: float = DEGENERACY_EPS) -> ClassLabels:
    """All interval labels of a simple godron with cr-invariant ``rho``."""
    if not math.isfinite(rho):
        raise DegenerateRho(f"non-finite rho {rho}")
    if abs(rho) < eps:
        raise DegenerateRho(f"rho = {rho:.3e} is within {eps} of 0 (flec-godron)")
    if abs(rho - 1) < eps:
        raise DegenerateRho(f"rho = {rho:.6f} is within {eps} of 1 (bigodron)")
    near = tuple(name for name, t in THRESHOLDS.items() if abs(rho - t) < BOUNDARY_EPS)
    return ClassLabels(
        _lookup(SIX_CONFIG, rho),
        _lookup(CONTOUR_CONFIG, rho),
        _lookup(SECTION_CONFIG, rho),
        _lookup(SWALLOWTAIL4, rho),
        _lookup(SWALLOWTAIL7, rho),
        _lookup(S_CONTOUR6, rho),
        "hyperbolic-convex" if rho > 2 / 3 else "elliptic-convex",
        near,
    )


def coefficient_values(rho: float, c_s: float = 1.0) -> dict[str, float | None]:
    """Canonical coefficients of a godron with invariant ``rho`` (scaled by ``c_s``)."""
    out: dict[str, float | None] = {
        "cF": rho * (2 * rho - 1) * c_s,
        "cP": (3 * rho - 2) * c_s,
        "cD": rho * c_s,
        "cS": c_s,
        "cTminus": None,
        "cTplus": None,
        "cCminus": None,
        "cCplus": None,
    }
    if rho < 1:
        r = math.sqrt(1 - rho)
        out["cTminus"], out["cTplus"] = (1 - r) * c_s, (1 + r) * c_s
    if rho < 4 / 3:
        r = math.sqrt(4 - 3 * rho)
        out["cCminus"], out["cCplus"] = (2 - r) * c_s, (2 + r) * c_s
    return out
