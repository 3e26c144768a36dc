"""SVG portraits of a report (works from the JSON dictionary, so saved reports can be re-rendered).

Conventions: hyperbolic domain shaded grey, parabolic curve as its boundary,
flecnodal curve black where left and white (outlined) where right, conodal
curve thick, separating 2-jet dashed, sections and contours in accent colours.
"""

from __future__ import annotations

import math

DEFAULT_STYLE = {
    "size": 640,
    "shade": "#d9d9d9",
    "accent_section": "#b03a2e",
    "accent_contour": "#1f618d",
    "marker": 4.0,
}


def _f(v: float) -> str:
    return format(float(v), ".6g")


def _path(points, w: float, stroke: str, extra: str = "") -> str:
    pts = [p for p in points if p[0] is not None and p[1] is not None]
    if len(pts) < 2:
        return ""
    d = "M " + " L ".join(f"{_f(x)} {_f(y)}" for x, y in pts)
    return f"<path d='{d}' fill='none' stroke='{stroke}' stroke-width='{_f(w)}'{extra}/>\n"


def _runs(labels):
    start = 0
    for k in range(1, len(labels) + 1):
        if k == len(labels) or labels[k] != labels[start]:
            yield labels[start], start, k
            start = k


def svg_text(data: dict, style: dict | None = None) -> str:
    st = dict(DEFAULT_STYLE)
    st.update(style or {})
    x0, x1, y0, y1 = data.get("window", [-1, 1, -1, 1])
    wx, wy = x1 - x0, y1 - y0
    size = st["size"]
    h = size * wy / wx
    lw = math.hypot(wx, wy) / 500
    mk = st["marker"] * wx / size

    out = [
        "<?xml version='1.0' encoding='UTF-8'?>\n",
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{_f(size)}' height='{_f(h)}' "
        f"viewBox='{_f(x0)} {_f(-y1)} {_f(wx)} {_f(wy)}'>\n",
        "<g transform='scale(1,-1)'>\n",
        f"<rect x='{_f(x0)}' y='{_f(y0)}' width='{_f(wx)}' height='{_f(wy)}' fill='white' stroke='black' stroke-width='{_f(2 * lw)}'/>\n",
    ]

    mask = data.get("hyperbolicMask")
    if mask:
        nx, ny = mask["nx"], mask["ny"]
        cx, cy = wx / nx, wy / ny
        out.append(f"<g fill='{st['shade']}' stroke='none'>\n")
        for i, row in enumerate(mask["rows"]):
            j = 0
            while j < nx:
                if row[j] == "1":
                    k = j
                    while k < nx and row[k] == "1":
                        k += 1
                    out.append(f"<rect x='{_f(x0 + j * cx)}' y='{_f(y0 + i * cy)}' width='{_f((k - j) * cx)}' height='{_f(cy)}'/>\n")
                    j = k
                else:
                    j += 1
        out.append("</g>\n")

    for tr in data.get("parabolic", []):
        pts = tr["samples"] + (tr["samples"][:1] if tr.get("jordan") else [])
        out.append(_path(pts, lw, "black"))

    for tr in data.get("flecnodal", []):
        pts, labels = tr["samples"], tr["labels"]
        for lab, a, b in _runs(labels):
            seg = pts[max(a - 1, 0): b + 1]
            if lab == "Left":
                out.append(_path(seg, 2.5 * lw, "black"))
            elif lab == "Right":
                out.append(_path(seg, 2.5 * lw, "black"))
                out.append(_path(seg, 1.3 * lw, "white"))
            else:
                out.append(_path(seg, 1.5 * lw, "grey"))

    for g in data.get("godrons", []):
        curves = g.get("localCurves", {})
        for name, pts in sorted(curves.items()):
            if name == "conodal":
                out.append(_path(pts, 4 * lw, "black"))
            elif name == "separating":
                out.append(_path(pts, lw, "black", f" stroke-dasharray='{_f(6 * lw)} {_f(4 * lw)}'"))
            elif name.startswith("section"):
                out.append(_path(pts, 1.5 * lw, st["accent_section"]))
            elif name.startswith("contour"):
                out.append(_path(pts, 1.5 * lw, st["accent_contour"]))

    for hb in data.get("hyperbonodes", []):
        out.append(f"<rect x='{_f(hb['x'] - mk / 2)}' y='{_f(hb['y'] - mk / 2)}' width='{_f(mk)}' height='{_f(mk)}' fill='black'/>\n")
    for bf in data.get("biflecnodes", []):
        x, y = bf["x"], bf["y"]
        out.append(f"<path d='M {_f(x)} {_f(y + mk)} L {_f(x + mk)} {_f(y)} L {_f(x)} {_f(y - mk)} L {_f(x - mk)} {_f(y)} Z' fill='white' stroke='black' stroke-width='{_f(lw)}'/>\n")
    for g in data.get("godrons", []):
        x, y = g["x"], g["y"]
        fill = "black" if g["index"] > 0 else "white"
        out.append(f"<circle cx='{_f(x)}' cy='{_f(y)}' r='{_f(mk)}' fill='{fill}' stroke='black' stroke-width='{_f(lw)}'/>\n")
        sign = "+" if g["index"] > 0 else "-"
        out.append(
            f"<text x='{_f(x + 1.3 * mk)}' y='{_f(-y - 1.3 * mk)}' transform='scale(1,-1)' "
            f"font-size='{_f(3 * mk)}' font-family='sans-serif'>{sign}</text>\n"
        )

    out.append("</g>\n</svg>\n")
    return "".join(out)


def render_svg(report_or_dict, path, style: dict | None = None) -> None:
    if isinstance(report_or_dict, dict):
        data = report_or_dict
    else:
        from .jsonio import report_to_dict

        data = report_to_dict(report_or_dict)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg_text(data, style))
