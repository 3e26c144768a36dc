"""Command line entry point: ``godrons analyze | scan | render``.

Exit codes: 0 success, 1 bad input (arguments, files, surface syntax), 2 internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import GodronError, StepTooCoarse, SurfaceSyntaxError

log = logging.getLogger("godrons")

_VALUE_OPTS = ("--window", "--range")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _floats(text: str, n: int, what: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise InputError(f"{what}: expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise InputError(f"{what}: expected {n} numbers, got {len(vals)}")
    return vals


def _params(items) -> dict:
    out = {}
    for it in items or []:
        name, sep, val = it.partition("=")
        if not sep:
            raise InputError(f"--set expects name=value, got {it!r}")
        try:
            out[name.strip()] = float(val)
        except ValueError:
            raise InputError(f"--set {name}: not a number: {val!r}") from None
    return out


def _read_text(arg: str) -> str:
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as fh:
            return " ".join(line.split("#", 1)[0].strip() for line in fh).strip()
    return arg


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="godrons", description="Godrons, flecnodal and parabolic curves of polynomial surfaces z = f(x, y).")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="analyse one surface")
    a.add_argument("surface", help="polynomial expression or a file containing one")
    a.add_argument("--window", default="-1,1,-1,1", help="x0,x1,y0,y1")
    a.add_argument("--res", type=int, default=256)
    a.add_argument("--set", action="append", metavar="NAME=VALUE", help="numeric parameter used in the expression")
    a.add_argument("--dual", action="store_true")
    a.add_argument("--contours", action="store_true")
    a.add_argument("--sections", action="store_true")
    a.add_argument("--global", dest="global_checks", action="store_true")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--jitter", type=float, default=0.0, help="relative jitter of the local fit radius")
    a.add_argument("--json", required=True)
    a.add_argument("--svg")

    s = sub.add_parser("scan", help="scan a one-parameter family")
    s.add_argument("family", help="expression with one free parameter, or a file containing one")
    s.add_argument("--param", required=True)
    s.add_argument("--range", required=True, help="a,b")
    s.add_argument("--step", type=float, required=True)
    s.add_argument("--window", default="-0.3,0.3,-0.3,0.3")
    s.add_argument("--res", type=int, default=128)
    s.add_argument("--set", action="append", metavar="NAME=VALUE")
    s.add_argument("--json", required=True)

    r = sub.add_parser("render", help="draw a saved report")
    r.add_argument("report")
    r.add_argument("--svg", required=True)
    return p


def _join_negative(argv: list[str]) -> list[str]:
    out, k = [], 0
    while k < len(argv):
        if argv[k] in _VALUE_OPTS and k + 1 < len(argv):
            out.append(f"{argv[k]}={argv[k + 1]}")
            k += 2
        else:
            out.append(argv[k])
            k += 1
    return out


def _analyze(ns) -> None:
    from .jsonio import emit_json, report_to_dict
    from .report import AnalysisConfig, analyze
    from .svg import render_svg

    try:
        cfg = AnalysisConfig(
            _read_text(ns.surface),
            _floats(ns.window, 4, "--window"),
            ns.res,
            params=_params(ns.set),
            dual=ns.dual,
            contours=ns.contours,
            sections=ns.sections,
            global_checks=ns.global_checks,
            json_path=ns.json,
            svg_path=ns.svg,
            seed=ns.seed,
            jitter=ns.jitter,
        )
    except ValueError as exc:
        if isinstance(exc, GodronError):
            raise
        raise InputError(str(exc)) from None
    data = report_to_dict(analyze(cfg))
    emit_json(data, ns.json)
    if ns.svg:
        render_svg(data, ns.svg)
    print(f"{len(data['godrons'])} godron(s), {len(data['warnings'])} warning(s) -> {ns.json}")


def _scan(ns) -> None:
    from .family import FamilySpec, family_scan
    from .jsonio import dumps, events_to_dict

    try:
        spec = FamilySpec(
            _read_text(ns.family),
            ns.param,
            _floats(ns.range, 2, "--range"),
            ns.step,
            _floats(ns.window, 4, "--window"),
            ns.res,
            _params(ns.set),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    events = family_scan(spec)
    with open(ns.json, "w", encoding="utf-8") as fh:
        fh.write(dumps(events_to_dict(events, spec)))
    print(f"{len(events)} event(s) -> {ns.json}")


def _render(ns) -> None:
    import json

    from .svg import render_svg

    try:
        with open(ns.report, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read report {ns.report}: {exc}") from None
    render_svg(data, ns.svg)


def main(argv: list[str] | None = None) -> int:
    argv = _join_negative(list(sys.argv[1:] if argv is None else argv))
    try:
        ns = build_parser().parse_args(argv)
    except InputError as exc:
        print(f"godrons: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        {"analyze": _analyze, "scan": _scan, "render": _render}[ns.command](ns)
    except (InputError, SurfaceSyntaxError, StepTooCoarse, OSError) as exc:
        print(f"godrons: error: {exc}", file=sys.stderr)
        return 1
    except GodronError as exc:
        if isinstance(exc, ValueError):
            print(f"godrons: error: {exc}", file=sys.stderr)
            return 1
        log.exception("analysis failed")
        return 2
    except Exception:
        log.exception("internal error")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
