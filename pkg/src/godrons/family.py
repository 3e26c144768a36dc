"""One-parameter family scans: godron births and deaths, flec-godrons, biflecnode swaps."""

from __future__ import annotations

import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asymptotic import trace_parabolic
from .contour import Window, window_diagonal
from .errors import GodronError, StepTooCoarse
from .flecnodal import FLAT, find_biflecnodes, trace_flecnodal
from .godron import _robust_rho, find_godrons, godron_context, godron_index
from .report import worker_count
from .surface import parse_surface

log = logging.getLogger(__name__)

REACH = 0.1
KINDS = ("godron-birth", "godron-death", "bigodron", "flec-godron", "biflecnode-branch-swap")


@dataclass
class FamilySpec:
    surface: str
    param: str
    range: tuple[float, float]
    step: float
    window: Window = (-0.3, 0.3, -0.3, 0.3)
    resolution: int = 128
    fixed: dict = field(default_factory=dict)
    tol: float = 1e-4

    def __post_init__(self):
        a, b = self.range
        if not b > a or not self.step > 0:
            raise ValueError(f"bad range {self.range} / step {self.step}")

    def values(self) -> np.ndarray:
        a, b = self.range
        n = int(math.floor((b - a) / self.step + 1e-9))
        vals = a + self.step * np.arange(n + 1)
        return vals if math.isclose(vals[-1], b, abs_tol=1e-12) else np.append(vals, b)


@dataclass(frozen=True)
class Event:
    value: float
    kind: str
    payload: dict


@dataclass
class Snapshot:
    value: float
    godrons: list[dict]
    biflecnodes: list = field(default_factory=list)
    flecnodal: list = field(default_factory=list)


def _surface(fs: FamilySpec, value: float):
    params = dict(fs.fixed)
    params[fs.param] = value
    return parse_surface(fs.surface, params)


def godron_count(fs: FamilySpec, value: float) -> int:
    s = _surface(fs, value)
    return len(find_godrons(s, fs.window, fs.resolution, trace_parabolic(s, fs.window, fs.resolution)))


def snapshot(fs: FamilySpec, value: float, rho: bool = True, flec: bool = True, window: Window | None = None) -> Snapshot:
    s = _surface(fs, value)
    W = window or fs.window
    gs = []
    for g in find_godrons(s, fs.window, fs.resolution):
        rec = {"x": g.x, "y": g.y, "rho": None, "index": None}
        ctx = godron_context(s, g, fs.window)
        try:
            rec["index"] = godron_index(s, ctx).index
        except GodronError as exc:
            log.info("index at %.4g: %s", value, exc)
        if rho:
            try:
                rec["rho"] = _robust_rho(s, ctx)[0]
            except GodronError as exc:
                log.info("rho at %.4g: %s", value, exc)
        gs.append(rec)
    snap = Snapshot(float(value), gs)
    if flec:
        snap.flecnodal = trace_flecnodal(s, W, fs.resolution)
        for k, t in enumerate(snap.flecnodal):
            snap.biflecnodes.extend(b for b in find_biflecnodes(t, s, k)[0] if b.side != FLAT)
    return snap


def degenerate(snap: Snapshot, eps: float = 1e-3) -> bool:
    """A grid value sitting on a flec-godron or bigodron (rho within eps of 0 or 1)."""
    return any(g["rho"] is not None and (abs(g["rho"]) < eps or abs(g["rho"] - 1) < eps) for g in snap.godrons)


def _bisect(pred, a: float, b: float, tol: float) -> float:
    """Boundary of a predicate that is True at a and False at b."""
    while abs(b - a) > tol:
        m = 0.5 * (a + b)
        if pred(m):
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _nearest(items, x, y, key=lambda it: (it["x"], it["y"])):
    if not items:
        return None, math.inf
    d = [math.hypot(key(it)[0] - x, key(it)[1] - y) for it in items]
    k = int(np.argmin(d))
    return items[k], d[k]


def _segment_label(snap: Snapshot, p, q) -> str | None:
    """Majority flecnodal label strictly between two godrons."""
    p, q = np.asarray(p), np.asarray(q)
    d = q - p
    L = float(np.hypot(*d))
    if L == 0:
        return None
    votes: Counter = Counter()
    for t in snap.flecnodal:
        pts = t.projected.samples
        s_ = (pts - p) @ d / L**2
        off = np.abs((pts - p) @ np.array([-d[1], d[0]])) / L
        sel = (s_ > 0.2) & (s_ < 0.8) & (off < 0.5 * L)
        votes.update(np.asarray(t.labels)[sel].tolist())
    return votes.most_common(1)[0][0] if votes else None


def _pair_payload(more: Snapshot, less: Snapshot, diag: float) -> dict:
    new = [g for g in more.godrons if _nearest(less.godrons, g["x"], g["y"])[1] > 0.02 * diag]
    new.sort(key=lambda g: (g["x"], g["y"]))
    out = {
        "pair": [{"x": g["x"], "y": g["y"], "index": g["index"], "rho": g["rho"]} for g in new],
        "indexSum": sum(g["index"] or 0 for g in new),
    }
    if len(new) == 2:
        out["segmentLabel"] = _segment_label(more, (new[0]["x"], new[0]["y"]), (new[1]["x"], new[1]["y"]))
    return out


def _biflec_label(snap: Snapshot, g: dict, reach: float) -> str | None:
    b, d = _nearest(snap.biflecnodes, g["x"], g["y"], key=lambda b: b.location)
    return b.side if b is not None and d <= reach else None


def family_scan(fs: FamilySpec) -> list[Event]:
    vals = fs.values()
    diag = window_diagonal(fs.window)
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        snaps = list(pool.map(lambda v: snapshot(fs, float(v)), vals))
    skipped = [s.value for s in snaps if degenerate(s)]
    if skipped:
        log.info("degenerate grid values skipped: %s", skipped)
    snaps = [s for s in snaps if not degenerate(s)]
    events: list[Event] = []
    for a, b in zip(snaps[:-1], snaps[1:]):
        na, nb = len(a.godrons), len(b.godrons)
        if abs(na - nb) > 2:
            raise StepTooCoarse(f"godron count jumps {na} -> {nb} between {a.value:.6g} and {b.value:.6g}")
        if na != nb:
            crit = _bisect(lambda v: godron_count(fs, v) == na, a.value, b.value, fs.tol)
            more, less = (a, b) if na > nb else (b, a)
            payload = {"countBefore": na, "countAfter": nb}
            payload.update(_pair_payload(more, less, diag))
            events.append(Event(crit, "godron-birth" if nb > na else "godron-death", payload))
            idx = sorted(g["index"] for g in payload["pair"] if g["index"] is not None)
            if idx == [-1, 1]:
                events.append(Event(crit, "bigodron", {"indices": idx, "segmentLabel": payload.get("segmentLabel")}))
            continue
        for ga in a.godrons:
            gb, d = _nearest(b.godrons, ga["x"], ga["y"])
            if gb is None or d > 0.05 * diag:
                continue
            ra, rb = ga["rho"], gb["rho"]
            if ra is not None and rb is not None and ra * rb < 0:
                events.append(_flec_godron(fs, a, b, ga, diag))
            la = _biflec_label(a, ga, REACH * diag)
            lb = _biflec_label(b, gb, REACH * diag)
            if la and lb and la != lb:
                events.append(_branch_swap(fs, a, b, ga, la, lb, diag))
    events.sort(key=lambda e: (e.value, KINDS.index(e.kind)))
    return events


def _rho_near(fs: FamilySpec, v: float, x: float, y: float, diag: float) -> float | None:
    s = _surface(fs, v)
    g, d = _nearest(find_godrons(s, fs.window, fs.resolution), x, y, key=lambda p: (p.x, p.y))
    if g is None or d > 0.05 * diag:
        return None
    try:
        return _robust_rho(s, godron_context(s, g, fs.window))[0]
    except GodronError:
        return None


def _flec_godron(fs, a: Snapshot, b: Snapshot, ga: dict, diag: float) -> Event:
    sign_a = ga["rho"] > 0

    def pred(v):
        r = _rho_near(fs, v, ga["x"], ga["y"], diag)
        return sign_a if r is None else (r > 0) == sign_a

    crit = _bisect(pred, a.value, b.value, fs.tol)
    return Event(crit, "flec-godron", {"x": ga["x"], "y": ga["y"], "rhoBefore": ga["rho"]})


def _branch_swap(fs, a: Snapshot, b: Snapshot, ga: dict, la: str, lb: str, diag: float) -> Event:
    h = REACH * diag
    local = (ga["x"] - h, ga["x"] + h, ga["y"] - h, ga["y"] + h)

    def pred(v):
        snap = snapshot(fs, v, rho=False, window=local)
        g, _ = _nearest(snap.godrons, ga["x"], ga["y"])
        lab = _biflec_label(snap, g, h) if g else None
        if lab is not None:
            return lab == la
        # biflecnode merged with the godron: fall back on the side of rho
        r = _rho_near(fs, v, ga["x"], ga["y"], diag)
        return True if r is None or ga["rho"] is None else (r > 0) == (ga["rho"] > 0)

    crit = _bisect(pred, a.value, b.value, fs.tol)
    return Event(crit, "biflecnode-branch-swap", {"x": ga["x"], "y": ga["y"], "before": la, "after": lb})
