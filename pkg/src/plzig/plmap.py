"""Exact piecewise-linear self-maps of [0, 1] with rational breakpoints.

Scalars are arbitrary-precision rationals and every operation (evaluation,
composition, iteration, level solving) works directly on breakpoint lists.
There is no floating-point path anywhere in this module, so map equality is
decidable and composition identities can be checked exactly.
"""

from __future__ import annotations

import logging
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable

__all__ = [
    "Rational",
    "ZERO",
    "ONE",
    "DEFAULT_BREAKPOINT_BUDGET",
    "BudgetExceededError",
    "Lap",
    "PLMap",
    "parse_rational",
    "format_rational",
    "make_plmap",
    "evaluate",
    "compose",
    "iterate",
    "critical_set",
    "laps",
    "level_crossings",
    "is_onto",
    "image_interval",
    "loads_map",
    "dumps_map",
    "load_map",
    "save_map",
]

log = logging.getLogger(__name__)

# The scalar of the whole system: exact, arbitrary precision, totally ordered.
Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)

# Iteration makes breakpoint counts grow geometrically (the five-lap Minc map
# gains a factor of ~5 per composition), so operations that build new maps
# refuse to cross this bound instead of silently grinding away.
DEFAULT_BREAKPOINT_BUDGET = 10**6

INCREASING = "increasing"
DECREASING = "decreasing"


class BudgetExceededError(RuntimeError):
    """An operation would exceed its breakpoint or step budget."""


def parse_rational(text: str) -> Fraction:
    """Parse a canonical rational literal: ``p/q`` or a plain integer."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational literal {text!r}") from exc


def format_rational(q: Fraction) -> str:
    """Canonical text form: ``p/q``, or the bare integer when q == 1."""
    return str(q)


def _as_rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"expected a rational value, got {type(value).__name__}")


@dataclass(frozen=True)
class Lap:
    """A maximal interval of strict monotonicity."""

    left: Fraction
    right: Fraction
    direction: str  # INCREASING or DECREASING


@dataclass(frozen=True)
class PLMap:
    """A normalized piecewise-linear map of [0, 1] to itself.

    ``points`` is the breakpoint list: x strictly increasing from 0 to 1,
    all y in [0, 1], no zero-slope segment, and no three consecutive
    collinear points (every interior breakpoint is a genuine slope change).
    Use :func:`make_plmap` to construct one; it normalizes its input.
    Instances are immutable and safe to share between threads.
    """

    points: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self) -> None:
        pts = self.points
        if len(pts) < 2:
            raise ValueError("a piecewise-linear map needs at least two breakpoints")
        if pts[0][0] != ZERO or pts[-1][0] != ONE:
            raise ValueError("domain must be exactly [0, 1]")
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x1 <= x0:
                raise ValueError(f"breakpoint x-coordinates must increase: {x0} then {x1}")
            if y1 == y0:
                raise ValueError(f"constant segment at level {y0}: maps must be piecewise strictly monotone")
        for x, y in pts:
            if not (ZERO <= y <= ONE):
                raise ValueError(f"value {y} at x={x} lies outside [0, 1]")

    @cached_property
    def xs(self) -> tuple[Fraction, ...]:
        return tuple(p[0] for p in self.points)

    @cached_property
    def ys(self) -> tuple[Fraction, ...]:
        return tuple(p[1] for p in self.points)

    @cached_property
    def _laps(self) -> tuple[Lap, ...]:
        out: list[Lap] = []
        start = ZERO
        sign = _slope_sign(self.points[0], self.points[1])
        for i in range(1, len(self.points) - 1):
            s = _slope_sign(self.points[i], self.points[i + 1])
            if s != sign:
                out.append(Lap(start, self.points[i][0], INCREASING if sign > 0 else DECREASING))
                start = self.points[i][0]
                sign = s
        out.append(Lap(start, ONE, INCREASING if sign > 0 else DECREASING))
        return tuple(out)

    def __call__(self, x) -> Fraction:
        """Exact evaluation by linear interpolation on the containing segment."""
        x = _as_rational(x)
        if not (ZERO <= x <= ONE):
            raise ValueError(f"argument {x} outside [0, 1]")
        xs = self.xs
        i = bisect_right(xs, x) - 1
        if i >= len(xs) - 1:
            i = len(xs) - 2
        x0, y0 = self.points[i]
        x1, y1 = self.points[i + 1]
        if x == x0:
            return y0
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    def segment_count(self) -> int:
        return len(self.points) - 1

    def __repr__(self) -> str:  # keeps pytest diffs readable
        pts = ", ".join(f"({format_rational(x)},{format_rational(y)})" for x, y in self.points)
        return f"PLMap[{pts}]"


def make_plmap(points: Iterable[tuple]) -> PLMap:
    """Build a normalized map from a breakpoint list.

    Collinear interior input points are merged (with a debug log note);
    everything else about the input must already satisfy the map invariants.
    """
    pts = [(_as_rational(x), _as_rational(y)) for x, y in points]
    if len(pts) < 2:
        raise ValueError("need at least two breakpoints")
    if pts[0][0] != ZERO:
        raise ValueError(f"first breakpoint must have x=0, got x={pts[0][0]}")
    if pts[-1][0] != ONE:
        raise ValueError(f"last breakpoint must have x=1, got x={pts[-1][0]}")
    merged: list[tuple[Fraction, Fraction]] = []
    dropped = 0
    for p in pts:
        while len(merged) >= 2:
            (ax, ay), (bx, by) = merged[-2], merged[-1]
            # exact collinearity: slope(a,b) == slope(b,p)
            if (by - ay) * (p[0] - bx) == (p[1] - by) * (bx - ax):
                merged.pop()
                dropped += 1
            else:
                break
        merged.append(p)
    if dropped:
        log.debug("merged %d collinear interior breakpoint(s)", dropped)
    return PLMap(tuple(merged))


def evaluate(f: PLMap, x) -> Fraction:
    """Module-level alias for ``f(x)``."""
    return f(x)


def _slope_sign(p: tuple[Fraction, Fraction], q: tuple[Fraction, Fraction]) -> int:
    return 1 if q[1] > p[1] else -1


def laps(f: PLMap) -> list[Lap]:
    """Maximal monotone intervals, alternating direction, covering [0, 1]."""
    return list(f._laps)


def critical_set(f: PLMap, include_endpoints: bool = False) -> list[Fraction]:
    """Interior points where monotonicity flips; endpoints 0, 1 on request."""
    interior = [lap.left for lap in laps(f)[1:]]
    if include_endpoints:
        return [ZERO] + interior + [ONE]
    return interior


def compose(outer: PLMap, inner: PLMap, budget: int | None = None) -> PLMap:
    """Exact breakpoint list of ``outer ∘ inner`` (inner applied first).

    Breakpoints of the result live at inner's breakpoints plus every
    preimage under inner of an outer breakpoint x-value; between two such
    consecutive points the composition is a single linear piece, so this
    candidate set is exhaustive.  The result is normalized.
    """
    limit = DEFAULT_BREAKPOINT_BUDGET if budget is None else budget
    candidates = set(inner.xs)
    for v, _ in outer.points:
        candidates.update(level_crossings(inner, v))
        if len(candidates) > limit:
            raise BudgetExceededError(
                f"composition needs more than {limit} breakpoints"
            )
    xs = sorted(candidates)
    return make_plmap([(x, outer(inner(x))) for x in xs])


def iterate(f: PLMap, n: int, budget: int | None = None) -> PLMap:
    """Exact n-fold composition of f with itself, n >= 1."""
    if n < 1:
        raise ValueError("iteration count must be at least 1")
    acc = f
    for _ in range(n - 1):
        acc = compose(f, acc, budget=budget)
    return acc


def level_crossings(f: PLMap, c) -> list[Fraction]:
    """All solutions of f(x) = c, sorted.

    Constant segments cannot occur (the map invariants exclude zero slopes),
    so every solution is an isolated point.
    """
    c = _as_rational(c)
    out: list[Fraction] = []
    for (x0, y0), (x1, y1) in zip(f.points, f.points[1:]):
        lo, hi = (y0, y1) if y0 < y1 else (y1, y0)
        if lo <= c <= hi:
            x = x0 + (c - y0) * (x1 - x0) / (y1 - y0)
            if not out or out[-1] != x:
                out.append(x)
    return out


def is_onto(f: PLMap) -> bool:
    """True iff the range is all of [0, 1]."""
    return min(f.ys) == ZERO and max(f.ys) == ONE


def image_interval(f: PLMap, lo, hi) -> tuple[Fraction, Fraction]:
    """Exact image f([lo, hi]) as a closed interval (min, max)."""
    lo = _as_rational(lo)
    hi = _as_rational(hi)
    if not (ZERO <= lo <= hi <= ONE):
        raise ValueError(f"[{lo}, {hi}] is not a subinterval of [0, 1]")
    vals = [f(lo), f(hi)]
    i = bisect_right(f.xs, lo)
    while i < len(f.xs) and f.xs[i] < hi:
        vals.append(f.ys[i])
        i += 1
    return min(vals), max(vals)


# ---------------------------------------------------------------------------
# Map file format: one breakpoint per line, "x y" with canonical rational
# literals; blank lines and lines starting with '#' are ignored.
# ---------------------------------------------------------------------------

def loads_map(text: str) -> PLMap:
    points = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'x y', got {raw!r}")
        points.append((parse_rational(parts[0]), parse_rational(parts[1])))
    if not points:
        raise ValueError("map file contains no breakpoints")
    return make_plmap(points)


def dumps_map(f: PLMap) -> str:
    lines = [f"{format_rational(x)} {format_rational(y)}" for x, y in f.points]
    return "\n".join(lines) + "\n"


def load_map(path) -> PLMap:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_map(fh.read())


def save_map(f: PLMap, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_map(f))
