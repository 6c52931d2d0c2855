"""The zigzag predicate for piecewise-linear interval maps.

A point y is inside a zigzag of f when every interior lap [c_k, c_{k+1}]
containing y admits a bracketing pair a < c_k < c_{k+1} < b over which f
attains its minimum exclusively at one end and its maximum exclusively at
the other, oriented against the lap's direction.  Points meeting the first
or last lap are never inside a zigzag.

Exclusive attainment is the default reading; `strict=False` switches to a
ties-allowed reading kept for experimentation (it breaks the boundary-value
shortcut of :func:`remark_no_zigzag`, so the default is what the rest of
the library relies on).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .plmap import (
    ONE,
    ZERO,
    Lap,
    PLMap,
    _as_rational,
    compose,
    laps,
    level_crossings,
)

__all__ = [
    "ZigzagVerdict",
    "is_in_zigzag",
    "zigzag_set",
    "remark_no_zigzag",
    "lemma_witness",
    "composition_property_check",
    "witness_is_valid",
]

Interval = tuple[Fraction, Fraction]


@dataclass(frozen=True)
class ZigzagVerdict:
    """Decision plus per-lap witness data for one query point.

    ``applicable_laps`` are the interior laps containing the point, each
    paired positionally with an entry of ``witnesses``.  ``in_zigzag`` is
    true exactly when there is at least one applicable lap and every one of
    them carries a witness; when the point touches the first or last lap no
    witness search runs (such laps can never be bracketed) and that lap is
    reported as ``failing_lap``.
    """

    in_zigzag: bool
    applicable_laps: tuple[Interval, ...]
    witnesses: tuple[Optional[Interval], ...]
    failing_lap: Optional[Interval]

    def to_dict(self) -> dict:
        enc = lambda iv: [str(iv[0]), str(iv[1])]
        return {
            "in_zigzag": self.in_zigzag,
            "applicable_laps": [enc(l) for l in self.applicable_laps],
            "witnesses": [enc(w) if w is not None else None for w in self.witnesses],
            "failing_lap": enc(self.failing_lap) if self.failing_lap is not None else None,
        }

    @staticmethod
    def from_dict(data: dict) -> "ZigzagVerdict":
        dec = lambda pair: (Fraction(pair[0]), Fraction(pair[1]))
        return ZigzagVerdict(
            in_zigzag=bool(data["in_zigzag"]),
            applicable_laps=tuple(dec(l) for l in data["applicable_laps"]),
            witnesses=tuple(dec(w) if w is not None else None for w in data["witnesses"]),
            failing_lap=dec(data["failing_lap"]) if data["failing_lap"] is not None else None,
        )


def _index_of(xs: tuple[Fraction, ...], x: Fraction) -> int:
    # lap boundaries are always breakpoints, so a binary search hit is exact
    lo, hi = 0, len(xs) - 1
    while lo <= hi:
        mid = (lo + hi) // 2
        if xs[mid] == x:
            return mid
        if xs[mid] < x:
            lo = mid + 1
        else:
            hi = mid - 1
    raise ValueError(f"{x} is not a breakpoint")


def _search_witness(
    xs: tuple[Fraction, ...],
    ys: tuple[Fraction, ...],
    p: int,
    q: int,
    strict: bool,
) -> Optional[Interval]:
    """Witness search for one lap in the decreasing sense (ys[p] > ys[q]).

    A pair (a, b) = (xs[i], xs[j]) with i < p and j > q works when f(a) is
    strictly below every later value up to b and f(b) strictly above every
    earlier value from a on.  Candidates on each side are "records": going
    left from c_k the usable a's have strictly decreasing values, going
    right from c_{k+1} the usable b's have strictly increasing values, and
    the two cross conditions are monotone along those lists, so a linear
    two-pointer sweep decides existence and returns the pair nearest the
    lap.  Restricting candidates to breakpoints is lossless: an interior a
    can always be slid to its segment's left end without breaking either
    attainment condition.
    """
    n = len(ys)
    lap_min = min(ys[p : q + 1])
    lap_max = max(ys[p : q + 1])

    def lt(u, v):
        return u < v if strict else u <= v

    # left records: (value at a, running max over [a, c_k))
    a_recs: list[tuple[int, Fraction, Fraction]] = []
    runmin = lap_min
    runpeak: Optional[Fraction] = None
    for i in range(p - 1, -1, -1):
        runpeak = ys[i] if runpeak is None else max(runpeak, ys[i])
        if lt(ys[i], runmin):
            a_recs.append((i, ys[i], runpeak))
        if ys[i] < runmin:
            runmin = ys[i]

    if not a_recs:
        return None

    # right records: (value at b, running min over (c_{k+1}, b])
    b_recs: list[tuple[int, Fraction, Fraction]] = []
    runmax = lap_max
    runtrough: Optional[Fraction] = None
    for j in range(q + 1, n):
        runtrough = ys[j] if runtrough is None else min(runtrough, ys[j])
        if lt(runmax, ys[j]):
            b_recs.append((j, ys[j], runtrough))
        if ys[j] > runmax:
            runmax = ys[j]

    if not b_recs:
        return None

    j_trough = 0  # prefix of b records whose trough stays above the current a value
    j_peak = 0  # first b record rising above the current a-side peak
    nb = len(b_recs)
    for i_a, ya, peak in a_recs:
        while j_trough < nb and lt(ya, b_recs[j_trough][2]):
            j_trough += 1
        while j_peak < nb and not lt(peak, b_recs[j_peak][1]):
            j_peak += 1
        if j_peak < j_trough:
            return (xs[i_a], xs[b_recs[j_peak][0]])
    return None


def _lap_witness(f: PLMap, lap: Lap, strict: bool) -> Optional[Interval]:
    """Witness for one interior lap, handling both orientations."""
    p = _index_of(f.xs, lap.left)
    q = _index_of(f.xs, lap.right)
    if f.ys[p] > f.ys[q]:
        return _search_witness(f.xs, f.ys, p, q, strict)
    neg = tuple(-y for y in f.ys)
    return _search_witness(f.xs, neg, p, q, strict)


def _witness_table(f: PLMap, strict: bool) -> tuple[list[Lap], list[Optional[Interval]]]:
    """Witness (or None) for every lap; boundary laps never have one."""
    lap_list = laps(f)
    table: list[Optional[Interval]] = []
    last = len(lap_list) - 1
    for k, lap in enumerate(lap_list):
        if k == 0 or k == last:
            table.append(None)
        else:
            table.append(_lap_witness(f, lap, strict))
    return lap_list, table


def is_in_zigzag(f: PLMap, y, strict: bool = True) -> ZigzagVerdict:
    """Decide whether y lies inside a zigzag of f, with witnesses."""
    y = _as_rational(y)
    if not (ZERO <= y <= ONE):
        raise ValueError(f"query point {y} outside [0, 1]")
    lap_list = laps(f)
    last = len(lap_list) - 1
    containing = [k for k, lap in enumerate(lap_list) if lap.left <= y <= lap.right]
    applicable = tuple(
        (lap_list[k].left, lap_list[k].right) for k in containing if 0 < k < last
    )
    boundary = next((k for k in containing if k == 0 or k == last), None)
    if boundary is not None:
        return ZigzagVerdict(
            in_zigzag=False,
            applicable_laps=applicable,
            witnesses=(None,) * len(applicable),
            failing_lap=(lap_list[boundary].left, lap_list[boundary].right),
        )
    witnesses: list[Optional[Interval]] = []
    failing: Optional[Interval] = None
    for k in containing:
        w = _lap_witness(f, lap_list[k], strict)
        witnesses.append(w)
        if w is None and failing is None:
            failing = (lap_list[k].left, lap_list[k].right)
    return ZigzagVerdict(
        in_zigzag=failing is None and bool(witnesses),
        applicable_laps=applicable,
        witnesses=tuple(witnesses),
        failing_lap=failing,
    )


def zigzag_set(f: PLMap, strict: bool = True) -> tuple[Interval, ...]:
    """The exact zigzag locus as a union of disjoint open intervals.

    The verdict is constant on open lap interiors and false at any endpoint
    shared with a witness-less lap (the outermost laps never have a
    witness), so the locus is the union over maximal runs of witnessed laps
    of the open interval they span.
    """
    lap_list, table = _witness_table(f, strict)
    out: list[Interval] = []
    start: Optional[Fraction] = None
    for lap, w in zip(lap_list, table):
        if w is not None:
            if start is None:
                start = lap.left
        else:
            if start is not None:
                out.append((start, lap.left))
                start = None
    if start is not None:  # unreachable: the last lap never carries a witness
        out.append((start, ONE))
    return tuple(out)


def remark_no_zigzag(f: PLMap, k: int) -> bool:
    """Boundary-value shortcut: a lap endpoint mapping to 0 or 1 rules the
    whole lap out of any zigzag.

    ``k`` indexes an interior lap of f (1 <= k <= lap count - 2).  A true
    return guarantees ``is_in_zigzag`` is false everywhere on that lap.
    """
    lap_list = laps(f)
    if not (1 <= k <= len(lap_list) - 2):
        raise ValueError(f"lap index {k} does not name an interior lap")
    lap = lap_list[k]
    return f(lap.left) in (ZERO, ONE) or f(lap.right) in (ZERO, ONE)


def _right_injective_limit(f: PLMap, y: Fraction) -> Fraction:
    for lap in laps(f):
        if lap.left <= y < lap.right:
            return lap.right
    return ONE


def _left_injective_limit(f: PLMap, y: Fraction) -> Fraction:
    for lap in reversed(laps(f)):
        if lap.left < y <= lap.right:
            return lap.left
    return ZERO


def _level_clear(f: PLMap, value: Fraction, a: Fraction, b: Fraction) -> bool:
    """True when f never takes ``value`` strictly inside (a, b)."""
    return all(not (a < c < b) for c in level_crossings(f, value))


def lemma_witness(f: PLMap, y) -> Optional[tuple[Fraction, Fraction, int]]:
    """A not-in-zigzag certificate of the one-sided kind, if the search finds one.

    Returns (a, b, case) with y in [a, b], f avoiding both boundary values
    on (a, b), and either case 1: f(a) in {0, 1} with f one-to-one on
    [y, b], or case 2: f(b) in {0, 1} with f one-to-one on [a, y].  Any
    returned triple implies ``is_in_zigzag(f, y)`` is false; absence of a
    triple decides nothing.  Candidates are breakpoints plus the monotone
    limits around y, scanned nearest-first for a deterministic result.
    """
    y = _as_rational(y)
    if not (ZERO <= y <= ONE):
        raise ValueError(f"query point {y} outside [0, 1]")
    anchors = [x for x, v in f.points if v == ZERO or v == ONE]

    rlim = _right_injective_limit(f, y)
    b_cands = sorted({x for x in f.xs if y < x < rlim} | {y, rlim}, reverse=True)
    for a in sorted((x for x in anchors if x <= y), reverse=True):
        fa = f(a)
        for b in b_cands:
            if a >= b:
                continue
            if _level_clear(f, fa, a, b) and _level_clear(f, f(b), a, b):
                return (a, b, 1)

    llim = _left_injective_limit(f, y)
    a_cands = sorted({x for x in f.xs if llim < x < y} | {y, llim})
    for b in sorted(x for x in anchors if x >= y):
        fb = f(b)
        for a in a_cands:
            if a >= b:
                continue
            if _level_clear(f, f(a), a, b) and _level_clear(f, fb, a, b):
                return (a, b, 2)
    return None


def witness_is_valid(
    f: PLMap,
    lap_left: Fraction,
    lap_right: Fraction,
    a: Fraction,
    b: Fraction,
    strict: bool = True,
) -> bool:
    """Re-check a stored zigzag witness by direct evaluation.

    Independent of the search machinery: gathers every breakpoint value
    strictly inside (a, b) and tests the attainment conditions for the lap's
    orientation.
    """
    if not (a < lap_left < lap_right < b):
        return False
    inner = [v for x, v in f.points if a < x < b]
    fa, fb = f(a), f(b)
    if f(lap_left) > f(lap_right):
        lo, hi = fa, fb
    else:
        lo, hi = fb, fa
    if strict:
        return lo < hi and all(lo < v < hi for v in inner)
    return lo <= hi and all(lo <= v <= hi for v in inner)


def composition_property_check(f: PLMap, g: PLMap, samples) -> list[Fraction]:
    """Check zigzag behaviour under composition on a sample set.

    For every sample y inside a zigzag of g∘f, either y must be inside a
    zigzag of f or f(y) inside a zigzag of g.  Returns the offending
    samples; a nonempty result indicates an implementation bug rather than
    a property of the maps.
    """
    gf = compose(g, f)
    lap_list, table = _witness_table(gf, strict=True)
    last = len(lap_list) - 1
    violations: list[Fraction] = []
    for raw in samples:
        y = _as_rational(raw)
        verdict = True
        for k, lap in enumerate(lap_list):
            if lap.left <= y <= lap.right:
                if k == 0 or k == last or table[k] is None:
                    verdict = False
                    break
        if not verdict:
            continue
        if is_in_zigzag(f, y).in_zigzag:
            continue
        if is_in_zigzag(g, f(y)).in_zigzag:
            continue
        violations.append(y)
    return violations
