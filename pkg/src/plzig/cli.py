"""Command-line front end: plotting, analysis reports, certificate runs,
and exact map algebra on map files.

Commands
  plot      render a map (or an iterate) as a deterministic SVG polyline
  analyze   structured JSON report: critical set, zigzag set, orbits,
            Markov partition, leo verdict
  certify   run a certificate pipeline on a map and a backward orbit
  compose   exact composition of two map files (outer after inner)
  iterate   exact n-fold iterate of a map file

Exit codes: 0 success / certificate pass, 1 certificate fail, 2 errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .plmap import (
    BudgetExceededError,
    PLMap,
    compose,
    critical_set,
    dumps_map,
    is_onto,
    iterate,
    laps,
    load_map,
    make_plmap,
    parse_rational,
)
from .zigzag import zigzag_set
from .dynamics import (
    BackwardOrbit,
    OrbitValidationError,
    is_leo,
    leo_uniform_N,
    load_orbit,
    markov_partition,
    post_critical_orbits,
)
from .factorize import (
    CertifyError,
    certificate_to_json,
    certify_general,
    certify_minc,
    minc_map,
)

BUILTINS = {
    "minc": lambda: minc_map(),
    "tent": lambda: make_plmap([(0, 0), (Fraction(1, 2), 1), (1, 0)]),
    "identity": lambda: make_plmap([(0, 0), (1, 1)]),
}


def _load_source(args) -> PLMap:
    if getattr(args, "builtin", None):
        return BUILTINS[args.builtin]()
    if getattr(args, "map", None):
        return load_map(args.map)
    raise ValueError("provide --builtin or --map")


def _load_orbit_arg(text: str) -> BackwardOrbit:
    if text.startswith("const:"):
        return BackwardOrbit.constant(parse_rational(text[len("const:"):]))
    return load_orbit(text)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# plot
# ---------------------------------------------------------------------------

def _dec(value: float) -> str:
    return f"{value:.12g}"


def render_svg(
    f: PLMap,
    size: int = 600,
    guides: list[Fraction] | None = None,
    marks: list[tuple[Fraction, Fraction]] | None = None,
) -> str:
    """SVG 1.1 document whose polyline vertices are exactly the breakpoints
    scaled to the canvas; no resampling happens anywhere."""
    pad = 20.0
    span = size - 2 * pad

    def px(x: Fraction) -> str:
        return _dec(pad + float(x) * span)

    def py(y: Fraction) -> str:
        return _dec(size - pad - float(y) * span)

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="{_dec(pad)}" y="{_dec(pad)}" width="{_dec(span)}" height="{_dec(span)}" '
        'fill="white" stroke="black" stroke-width="1"/>',
    ]
    for level in guides or []:
        gx, gy = px(level), py(level)
        lines.append(
            f'<line x1="{gx}" y1="{_dec(pad)}" x2="{gx}" y2="{_dec(size - pad)}" '
            'stroke="gray" stroke-width="0.5" stroke-dasharray="4 3"/>'
        )
        lines.append(
            f'<line x1="{_dec(pad)}" y1="{gy}" x2="{_dec(size - pad)}" y2="{gy}" '
            'stroke="gray" stroke-width="0.5" stroke-dasharray="4 3"/>'
        )
    pts = " ".join(f"{px(x)},{py(y)}" for x, y in f.points)
    lines.append(f'<polyline fill="none" stroke="black" stroke-width="1.5" points="{pts}"/>')
    for mx, my in marks or []:
        lines.append(f'<circle cx="{px(mx)}" cy="{py(my)}" r="4" fill="black"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_plot(args) -> int:
    f = _load_source(args)
    if args.iterate > 1:
        f = iterate(f, args.iterate)
    guides = [parse_rational(tok) for tok in args.guides.split(",")] if args.guides else []
    marks = []
    for raw in args.mark or []:
        sx, sy = raw.split(",")
        marks.append((parse_rational(sx), parse_rational(sy)))
    _emit(render_svg(f, size=args.size, guides=guides, marks=marks), args.out)
    return 0


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def analysis_report(f: PLMap, eps: Fraction | None = None, orbit_budget: int = 10_000) -> dict:
    table = post_critical_orbits(f, budget=orbit_budget)
    pcf = True if table.all_closed() else None
    orbit_rows = []
    for e in table.entries:
        shown = e.orbit if e.closed else e.orbit[:16]
        row = {
            "point": str(e.point),
            "orbit": [str(v) for v in shown],
            "preperiod": e.preperiod,
            "period": e.period,
            "closed": e.closed,
        }
        if len(shown) < len(e.orbit):
            row["orbit_truncated"] = True
        orbit_rows.append(row)
    report = {
        "breakpoints": len(f.points),
        "laps": len(laps(f)),
        "onto": is_onto(f),
        "critical_set": [str(c) for c in critical_set(f)],
        "zigzag_set": [[str(a), str(b)] for a, b in zigzag_set(f)],
        "post_critical_orbits": orbit_rows,
        "post_critically_finite": pcf,
        "markov_partition": [str(p) for p in markov_partition(f, orbit_budget)] if pcf else None,
        "leo": is_leo(f, orbit_budget=orbit_budget),
    }
    if eps is not None:
        report["uniform_covering"] = {"eps": str(eps), "N": leo_uniform_N(f, eps)}
    return report


def cmd_analyze(args) -> int:
    f = _load_source(args)
    if args.iterate > 1:
        f = iterate(f, args.iterate)
    eps = parse_rational(args.eps) if args.eps else None
    report = analysis_report(f, eps, orbit_budget=args.orbit_budget)
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------

def cmd_certify(args) -> int:
    orbit = _load_orbit_arg(args.orbit)
    if args.pipeline == "minc":
        if args.map or (args.builtin and args.builtin != "minc"):
            raise ValueError("the minc pipeline runs on its built-in map; drop --map/--builtin")
        cert = certify_minc(orbit, stages=args.stages)
    else:
        f = _load_source(args)
        cert = certify_general(f, orbit, stages=args.stages)
    _emit(certificate_to_json(cert), args.out)
    if cert.passed:
        return 0
    print(
        f"certificate FAILED at stage {cert.failing_stage} "
        f"(orbit index {cert.stages[cert.failing_stage - 1].n})",
        file=sys.stderr,
    )
    return 1


# ---------------------------------------------------------------------------
# compose / iterate
# ---------------------------------------------------------------------------

def cmd_compose(args) -> int:
    outer = load_map(args.outer)
    inner = load_map(args.inner)
    _emit(dumps_map(compose(outer, inner)), args.out)
    return 0


def cmd_iterate(args) -> int:
    f = _load_source(args)
    _emit(dumps_map(iterate(f, args.n)), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--builtin", choices=sorted(BUILTINS), help="built-in map")
    p.add_argument("--map", help="map file (lines of 'x y' rationals)")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="plzig", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plot", help="render a map as SVG")
    _add_source(p)
    p.add_argument("--iterate", type=int, default=1, metavar="N")
    p.add_argument("--size", type=int, default=600)
    p.add_argument("--guides", help="comma-separated rational levels")
    p.add_argument("--mark", action="append", metavar="X,Y", help="marked point (repeatable)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("analyze", help="structured dynamics report (JSON)")
    _add_source(p)
    p.add_argument("--iterate", type=int, default=1, metavar="N")
    p.add_argument("--eps", help="also report the uniform covering time at this scale")
    p.add_argument("--orbit-budget", type=int, default=10_000, metavar="STEPS")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("certify", help="run a certificate pipeline")
    _add_source(p)
    p.add_argument("--pipeline", choices=["minc", "general"], required=True)
    p.add_argument("--orbit", required=True, help="'const:Q' or an orbit file")
    p.add_argument("--stages", type=int, default=6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("compose", help="compose two map files (outer after inner)")
    p.add_argument("--outer", required=True)
    p.add_argument("--inner", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("iterate", help="n-fold iterate of a map")
    _add_source(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_iterate)

    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OrbitValidationError, CertifyError, BudgetExceededError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
