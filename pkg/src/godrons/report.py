"""Orchestration of a full analysis and the global consistency checks."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .asymptotic import ParabolicTrace, hessian_det_grid, trace_parabolic
from .contour import Window, point_polyline_distance, window_grid
from .errors import GodronError
from .flecnodal import Biflecnode, FlecnodalTrace, Hyperbonode, find_biflecnodes, find_hyperbonodes, label_flips, trace_flecnodal
from .godron import GodronRecord, analyze_godron, find_godrons
from .surface import PolySurface, parse_surface

log = logging.getLogger(__name__)

MIN_RES, MAX_RES = 16, 4096


@dataclass
class AnalysisConfig:
    surface: str
    window: Window = (-1.0, 1.0, -1.0, 1.0)
    resolution: int = 256
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    dual: bool = False
    contours: bool = False
    sections: bool = False
    global_checks: bool = True
    json_path: str | None = None
    svg_path: str | None = None
    seed: int = 0
    jitter: float = 0.0

    def __post_init__(self):
        self.window = tuple(float(w) for w in self.window)
        x0, x1, y0, y1 = self.window
        if not (x1 > x0 and y1 > y0) or not all(math.isfinite(w) for w in self.window):
            raise ValueError(f"degenerate window {self.window}")
        if not MIN_RES <= int(self.resolution) <= MAX_RES:
            raise ValueError(f"resolution {self.resolution} outside [{MIN_RES}, {MAX_RES}]")
        self.resolution = int(self.resolution)


@dataclass(frozen=True)
class Warning:
    code: str
    message: str
    where: tuple[float, float] | None = None


@dataclass
class Report:
    surface: str
    window: Window
    parabolic: list[ParabolicTrace] = field(default_factory=list)
    flecnodal: list[FlecnodalTrace] = field(default_factory=list)
    godrons: list[GodronRecord] = field(default_factory=list)
    hyperbonodes: list[Hyperbonode] = field(default_factory=list)
    biflecnodes: list[Biflecnode] = field(default_factory=list)
    global_checks: dict = field(default_factory=dict)
    dual: list = field(default_factory=list)
    warnings: list[Warning] = field(default_factory=list)
    surface_obj: PolySurface | None = None


def worker_count() -> int:
    env = os.environ.get("GODRON_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cap))
        except ValueError:
            log.warning("ignoring GODRON_THREADS=%r", env)
    return min(4, cap)


def _warn(report: Report, exc: Exception, where=None) -> None:
    code = getattr(exc, "code", "internal")
    report.warnings.append(Warning(code, str(exc), where))


def analyze(cfg: AnalysisConfig, surface: PolySurface | None = None) -> Report:
    """Run every enabled stage; stage failures become warnings, parse errors propagate."""
    s = surface if surface is not None else parse_surface(cfg.surface, cfg.params or None)
    W, res = cfg.window, cfg.resolution
    rep = Report(cfg.surface, W, surface_obj=s)
    eps = float(cfg.tolerances.get("eps", 1e-4))

    try:
        rep.parabolic = trace_parabolic(s, W, res)
    except GodronError as exc:
        _warn(rep, exc)
    try:
        rep.flecnodal = trace_flecnodal(s, W, res)
    except GodronError as exc:
        _warn(rep, exc)

    godron_pts = []
    if rep.parabolic:
        try:
            godron_pts = find_godrons(s, W, res, rep.parabolic)
        except GodronError as exc:
            _warn(rep, exc)

    rng = np.random.default_rng(cfg.seed)
    scales = 1.0 + cfg.jitter * rng.uniform(-1.0, 1.0, len(godron_pts))

    def one(item):
        g, scale = item
        try:
            return analyze_godron(s, g, W, sections=cfg.sections, contours=cfg.contours, eps=eps, radius_scale=scale), None
        except GodronError as exc:
            return None, (exc, (g.x, g.y))

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(one, zip(godron_pts, scales)))
    for rec, err in results:
        if rec is not None:
            rep.godrons.append(rec)
            for fl in rec.flags:
                if fl in ("inconsistent-routes", "route-deviation", "indeterminate-index", "conodal-failed"):
                    rep.warnings.append(Warning(fl, f"godron at ({rec.location[0]:.6g}, {rec.location[1]:.6g}): {fl}", rec.location))
        else:
            _warn(rep, err[0], err[1])

    hbs, anomalies = find_hyperbonodes(rep.flecnodal)
    rep.hyperbonodes = hbs
    for a in anomalies:
        rep.warnings.append(Warning("same-label-crossing", "flecnodal crossing with equal labels", a.location))
    for k, t in enumerate(rep.flecnodal):
        try:
            bfs, ruled = find_biflecnodes(t, s, k)
        except GodronError as exc:
            _warn(rep, exc)
            continue
        if ruled:
            rep.warnings.append(Warning("ruled-flecnodal", f"flecnodal trace {k} lies on a ruling line"))
        rep.biflecnodes.extend(bfs)
    rep.biflecnodes.sort(key=lambda b: b.location)

    if cfg.global_checks:
        rep.global_checks = global_checks(s, W, max(res, 256), rep)
    if cfg.dual:
        from .dual import classify_swallowtail

        rep.dual = [classify_swallowtail(s, g) for g in rep.godrons]
    rep.warnings.sort(key=lambda w: (w.code, w.where or (math.inf, math.inf), w.message))
    return rep


# ---------------------------------------------------------------------------
# global checks

_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = ndimage.generate_binary_structure(2, 2)


def hyperbolic_components(s: PolySurface, window: Window, resolution: int, refine: bool = True):
    """Labelled hyperbolic components of the Hessian sign grid.

    Returns (labels, info, xs, ys).  ``info[k]`` records whether the component
    touches the window edge (``truncated``) and whether it is a disc.  Grid
    maxima of the determinant inside a component are refined with a local
    optimiser; a positive refined maximum is an elliptic island smaller than
    a cell, which rules the component out as a disc.
    """
    xs, ys = window_grid(window, resolution)
    X, Y = np.meshgrid(xs, ys)
    det = hessian_det_grid(s, X, Y)
    hyp = det < 0
    lab, n = ndimage.label(hyp, structure=_FOUR)
    islands = hidden_islands(s, det, xs, ys, lab) if refine else {}
    info = {}
    for k in range(1, n + 1):
        comp = lab == k
        edge = comp[0, :].any() or comp[-1, :].any() or comp[:, 0].any() or comp[:, -1].any()
        _, holes = ndimage.label(~comp, structure=_EIGHT)
        hidden = islands.get(k, [])
        info[k] = {
            "truncated": bool(edge),
            "disc": bool(not edge and holes == 1 and not hidden),
            "cells": int(comp.sum()),
            "hiddenIslands": hidden,
        }
    return lab, info, xs, ys


def hidden_islands(s: PolySurface, det, xs, ys, lab, top: int = 32) -> dict[int, list[tuple[float, float]]]:
    """Elliptic points inside hyperbolic components that the grid misses."""
    from scipy.optimize import minimize

    peaks = (det == ndimage.maximum_filter(det, size=3, mode="nearest")) & (lab > 0)
    peaks[0, :] = peaks[-1, :] = peaks[:, 0] = peaks[:, -1] = False
    idx = np.argwhere(peaks)
    idx = idx[np.argsort(-det[peaks])][:top]
    cell = max(xs[1] - xs[0], ys[1] - ys[0])
    out: dict[int, list[tuple[float, float]]] = {}
    for i, j in idx:
        x0 = np.array([xs[j], ys[i]])
        res = minimize(lambda p: -float(hessian_det_grid(s, p[0], p[1])), x0, method="Nelder-Mead",
                       options={"xatol": 1e-3 * cell, "fatol": 0.0, "initial_simplex": [x0, x0 + [cell, 0], x0 + [0, cell]]})
        if -res.fun > 0 and np.max(np.abs(res.x - x0)) <= 2 * cell:
            k = int(lab[i, j])
            pt = (float(res.x[0]), float(res.x[1]))
            if all(np.hypot(pt[0] - q[0], pt[1] - q[1]) > cell for q in out.get(k, [])):
                out.setdefault(k, []).append(pt)
    return out


def _component_at(lab, xs, ys, x, y, reach: int = 3) -> int:
    j = int(np.clip(np.searchsorted(xs, x), 0, len(xs) - 1))
    i = int(np.clip(np.searchsorted(ys, y), 0, len(ys) - 1))
    patch = lab[max(0, i - reach): i + reach + 1, max(0, j - reach): j + reach + 1]
    vals = patch[patch > 0]
    if not len(vals):
        return 0
    return int(np.bincount(vals).argmax())


def global_checks(s: PolySurface, window: Window, resolution: int, rep: Report) -> dict:
    lab, info, xs, ys = hyperbolic_components(s, window, resolution)
    comps = []
    for k, meta in sorted(info.items()):
        gs = [g for g in rep.godrons if _component_at(lab, xs, ys, *g.location) == k]
        hs = [h for h in rep.hyperbonodes if _component_at(lab, xs, ys, *h.location, reach=1) == k]
        entry = {
            "id": k,
            "truncated": meta["truncated"],
            "disc": meta["disc"],
            "hiddenIslands": [list(p) for p in meta["hiddenIslands"]],
            "godrons": len(gs),
            "indexSum": int(sum(g.index for g in gs)),
            "hyperbonodes": len(hs),
        }
        if meta["truncated"]:
            entry["status"] = "truncated"
        elif meta["hiddenIslands"]:
            entry["status"] = "unresolved"
        else:
            entry["evenGodrons"] = len(gs) % 2 == 0
            if meta["disc"]:
                entry["indexSumIsTwo"] = entry["indexSum"] == 2
                entry["oddHyperbonodes"] = len(hs) % 2 == 1
            entry["status"] = "pass" if all(v for key, v in entry.items() if key in ("evenGodrons", "indexSumIsTwo", "oddHyperbonodes")) else "fail"
        comps.append(entry)
    curves = []
    for k, tr in enumerate(rep.parabolic):
        if not tr.jordan:
            continue
        pts = tr.curve.samples
        tol = 4 * float(np.median(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
        on = [g for g in rep.godrons if float(point_polyline_distance(np.array([g.location]), pts)[0]) <= tol]
        curves.append({"trace": k, "godrons": len(on), "indexSum": int(sum(g.index for g in on)), "evenGodrons": len(on) % 2 == 0})
    closed = [label_flips(t.labels) for t in rep.flecnodal if t.closed]
    return {
        "components": comps,
        "jordanCurves": curves,
        "closedFlecnodalFlipsEven": all(f % 2 == 0 for f in closed),
        "closedFlecnodal": len(closed),
    }
