"""JSON form of analysis reports.

Floats are written with 17 significant digits, keys are sorted and
non-finite numbers become null, so equal reports give identical bytes.
"""

from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

from .contour import window_grid
from .asymptotic import hessian_det_grid

SCHEMA_VERSION = 1
CURVE_POINTS = 41
MASK_RES = 96


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _pts(a, n: int | None = None) -> list:
    a = np.asarray(a, dtype=float)
    if n is not None and len(a) > n:
        a = a[np.linspace(0, len(a) - 1, n).round().astype(int)]
    return [[_num(v) for v in row] for row in a]


def _chart_curve(chart, samples, n=CURVE_POINTS):
    x, y = chart.to_ambient(samples[:, 0], samples[:, 1])
    return _pts(np.column_stack([x, y]), n)


def godron_to_dict(g) -> dict:
    c = g.coeffs
    out = {
        "x": _num(g.location[0]),
        "y": _num(g.location[1]),
        "slope": _num(g.slope),
        "chart": g.chart_flag,
        "rho": _num(g.rho),
        "rhoRoutes": {k: (None if v is None else _num(v)) for k, v in g.diagnostics.routes.items()},
        "rhoDeviation": _num(g.diagnostics.max_deviation),
        "index": int(g.index),
        "coeffs": {
            "cF": c.cF, "cP": c.cP, "cD": c.cD, "cS": c.cS,
            "cT": [c.cTminus, c.cTplus],
            "cC": [c.cCminus, c.cCplus],
        },
        "labels": g.labels.as_dict() if g.labels is not None else None,
        "flags": sorted(g.flags),
    }
    out["coeffs"] = _clean(out["coeffs"])
    curves = {name: _chart_curve(g.chart, cv.samples) for name, cv in sorted(g.local_curves.items())}
    if c.cS is not None:
        par = g.local_curves.get("parabolic")
        r = float(np.max(np.abs(par.samples[:, 0]))) if par is not None else 0.05
        u = np.linspace(-r, r, CURVE_POINTS)
        curves["separating"] = _chart_curve(g.chart, np.column_stack([u, c.cS * u * u]))
    for tag, br in (("section", g.section), ("contour", g.contour)):
        if br is not None and not br.trivial:
            for k, cv in enumerate(br.curves):
                curves[f"{tag}{'-+'[k]}"] = _chart_curve(g.chart, cv.samples)
    out["localCurves"] = curves
    return out


def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return _num(v)
    return v


def hyperbolic_mask(s, window, res: int = MASK_RES) -> dict:
    xs, ys = window_grid(window, res)
    xc, yc = 0.5 * (xs[1:] + xs[:-1]), 0.5 * (ys[1:] + ys[:-1])
    X, Y = np.meshgrid(xc, yc)
    hyp = hessian_det_grid(s, X, Y) < 0
    return {"nx": res, "ny": res, "rows": ["".join("1" if b else "0" for b in row) for row in hyp]}


def report_to_dict(r) -> dict:
    data = {
        "schemaVersion": SCHEMA_VERSION,
        "surface": r.surface,
        "window": [_num(w) for w in r.window],
        "parabolic": [
            {"samples": _pts(t.curve.samples), "jordan": bool(t.jordan), "hyperbolicSide": t.hyperbolic_side}
            for t in r.parabolic
        ],
        "flecnodal": [
            {"samples": _pts(t.projected.samples), "labels": list(t.labels), "closed": bool(t.closed)}
            for t in r.flecnodal
        ],
        "godrons": sorted((godron_to_dict(g) for g in r.godrons), key=lambda d: (d["x"], d["y"])),
        "hyperbonodes": sorted(
            ({"x": _num(h.location[0]), "y": _num(h.location[1]), "labels": list(h.labels)} for h in r.hyperbonodes),
            key=lambda d: (d["x"], d["y"]),
        ),
        "biflecnodes": sorted(
            ({"x": _num(b.location[0]), "y": _num(b.location[1]), "side": b.side, "trace": int(b.trace)} for b in r.biflecnodes),
            key=lambda d: (d["x"], d["y"]),
        ),
        "globalChecks": _clean(r.global_checks),
        "dual": [
            {
                "vertex": [_num(v) for v in d.vertex],
                "source": [_num(v) for v in d.source],
                "kind": d.kind,
                "labels": d.labels.as_dict() if d.labels is not None else None,
                "curves": {k: _pts(c.samples, CURVE_POINTS) for k, c in sorted(d.curves.items())},
            }
            for d in r.dual
        ],
        "warnings": [
            {"code": w.code, "message": w.message, "where": None if w.where is None else [_num(v) for v in w.where]}
            for w in r.warnings
        ],
    }
    if r.surface_obj is not None:
        data["hyperbolicMask"] = hyperbolic_mask(r.surface_obj, r.window)
    return data


def events_to_dict(events, spec) -> dict:
    return {
        "schemaVersion": SCHEMA_VERSION,
        "family": {"surface": spec.surface, "param": spec.param, "range": list(spec.range), "step": spec.step},
        "events": [{"value": e.value, "kind": e.kind, "payload": _clean(e.payload)} for e in events],
    }


def _encode(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g") if math.isfinite(v) else "null"
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_encode(v[k])}" for k in sorted(v)) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_encode(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {type(v).__name__}")


def dumps(data: dict) -> str:
    return _encode(data) + "\n"


def emit_json(report_or_dict, path) -> None:
    data = report_or_dict if isinstance(report_or_dict, dict) else report_to_dict(report_or_dict)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(data))


def load_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def schema() -> dict:
    return json.loads(resources.files("godrons").joinpath("report.schema.json").read_text())


def validate(data: dict) -> None:
    import jsonschema

    jsonschema.validate(data, schema())
