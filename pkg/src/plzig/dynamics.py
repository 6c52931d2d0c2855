"""Branch intervals, post-critical orbits, Markov/leo verification, and
branch stabilization along backward orbits.

Everything here is exact: orbits are rational sequences, branch intervals
have rational endpoints, and the leo decisions work on exact transition
matrices or exact preimage spacing rather than numerical iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .plmap import (
    ONE,
    ZERO,
    BudgetExceededError,
    PLMap,
    _as_rational,
    compose,
    is_onto,
    laps,
    level_crossings,
    parse_rational,
)

__all__ = [
    "BranchResult",
    "OrbitEntry",
    "OrbitTable",
    "BackwardOrbit",
    "OrbitValidationError",
    "NSequence",
    "StabilizationData",
    "branch",
    "post_critical_orbits",
    "is_post_critically_finite",
    "markov_partition",
    "transition_matrix",
    "is_primitive",
    "is_leo",
    "uniformly_onto",
    "leo_uniform_N",
    "branch_stabilization",
    "validate_orbit",
    "parse_orbit",
    "format_orbit",
    "load_orbit",
    "IterateCache",
]

Interval = tuple[Fraction, Fraction]

DEFAULT_ORBIT_BUDGET = 10**4


class OrbitValidationError(ValueError):
    """A backward orbit is inconsistent with the map it claims to follow."""


# ---------------------------------------------------------------------------
# Branches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BranchResult:
    """Maximal one-to-one interval J around a point and its image B = f(J).

    At a critical point the two adjacent laps compete; the selection keeps
    the lap whose image is contained in the other's, preferring the left lap
    when the images coincide (``tie_rule_applied`` marks that exact tie).
    """

    J: Interval
    B: Interval
    at_critical: bool
    tie_rule_applied: bool


def _lap_image(f: PLMap, left: Fraction, right: Fraction) -> Interval:
    u, v = f(left), f(right)
    return (u, v) if u <= v else (v, u)


def branch(f: PLMap, y) -> BranchResult:
    y = _as_rational(y)
    if not (ZERO <= y <= ONE):
        raise ValueError(f"point {y} outside [0, 1]")
    lap_list = laps(f)
    containing = [lap for lap in lap_list if lap.left <= y <= lap.right]
    if len(containing) == 1:
        lap = containing[0]
        J = (lap.left, lap.right)
        return BranchResult(J, _lap_image(f, *J), at_critical=False, tie_rule_applied=False)
    left_lap, right_lap = containing
    J1 = (left_lap.left, left_lap.right)
    J2 = (right_lap.left, right_lap.right)
    B1 = _lap_image(f, *J1)
    B2 = _lap_image(f, *J2)
    contained = B2[0] <= B1[0] and B1[1] <= B2[1]
    if contained:
        J, B = J1, B1
    else:
        J, B = J2, B2
    return BranchResult(J, B, at_critical=True, tie_rule_applied=B1 == B2)


# ---------------------------------------------------------------------------
# Post-critical orbits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrbitEntry:
    point: Fraction
    orbit: tuple[Fraction, ...]
    preperiod: Optional[int]
    period: Optional[int]
    closed: bool


@dataclass(frozen=True)
class OrbitTable:
    entries: tuple[OrbitEntry, ...]

    def all_closed(self) -> bool:
        return all(e.closed for e in self.entries)

    def point_set(self) -> set[Fraction]:
        out: set[Fraction] = set()
        for e in self.entries:
            out.update(e.orbit)
        return out


def _orbit_of(f: PLMap, start: Fraction, budget: int) -> OrbitEntry:
    seen: dict[Fraction, int] = {start: 0}
    seq = [start]
    for _ in range(budget):
        nxt = f(seq[-1])
        if nxt in seen:
            k = seen[nxt]
            return OrbitEntry(start, tuple(seq), preperiod=k, period=len(seq) - k, closed=True)
        seen[nxt] = len(seq)
        seq.append(nxt)
    return OrbitEntry(start, tuple(seq), preperiod=None, period=None, closed=False)


def post_critical_orbits(f: PLMap, budget: int = DEFAULT_ORBIT_BUDGET) -> OrbitTable:
    """Forward orbit of every critical point and both endpoints, with the
    detected minimal preperiod/period, or an open flag past the budget."""
    points = [ZERO] + [lap.left for lap in laps(f)[1:]] + [ONE]
    return OrbitTable(tuple(_orbit_of(f, pt, budget) for pt in points))


def is_post_critically_finite(f: PLMap, budget: int = DEFAULT_ORBIT_BUDGET) -> Optional[bool]:
    """True when every critical orbit closes within the budget; None when
    the budget ran out first (indeterminate, not a refutation)."""
    table = post_critical_orbits(f, budget)
    return True if table.all_closed() else None


def markov_partition(f: PLMap, budget: int = DEFAULT_ORBIT_BUDGET) -> list[Fraction]:
    """Smallest forward-invariant finite set containing the critical set and
    the endpoints: the orbit closure of those points, sorted."""
    table = post_critical_orbits(f, budget)
    if not table.all_closed():
        raise BudgetExceededError(
            "critical orbits did not close within the budget; "
            "no finite Markov partition is available"
        )
    pts = sorted(table.point_set() | {ZERO, ONE})
    for p in pts:
        if f(p) not in pts:
            raise AssertionError("orbit closure is not forward invariant")
    return pts


def transition_matrix(f: PLMap, partition: list[Fraction]) -> list[list[int]]:
    """Cell-covering matrix: row u flags every cell covered by f(cell u).

    The partition must contain all critical points (so f is monotone on each
    cell) and be forward invariant (so each image is a union of cells).
    """
    pts = [_as_rational(p) for p in partition]
    if pts != sorted(set(pts)) or pts[0] != ZERO or pts[-1] != ONE:
        raise ValueError("partition must be a sorted point set spanning [0, 1]")
    crits = set(lap.left for lap in laps(f)[1:])
    if not crits.issubset(pts):
        raise ValueError("partition must contain every critical point")
    index = {p: i for i, p in enumerate(pts)}
    n = len(pts) - 1
    matrix = [[0] * n for _ in range(n)]
    for u in range(n):
        lo, hi = _lap_image(f, pts[u], pts[u + 1])
        if lo not in index or hi not in index:
            raise ValueError("partition is not forward invariant")
        for v in range(index[lo], index[hi]):
            matrix[u][v] = 1
    return matrix


def is_primitive(matrix: list[list[int]]) -> bool:
    """Primitivity of a 0/1 matrix: some power is strictly positive.

    Checked at a single power of two past the Wielandt bound n^2 - 2n + 2;
    positivity is monotone once every column is nonzero, and a zero column
    rules primitivity out immediately.
    """
    n = len(matrix)
    if n == 0:
        return False
    full = (1 << n) - 1
    rows = [sum(1 << j for j in range(n) if matrix[i][j]) for i in range(n)]
    if any(r == 0 for r in rows):
        return False
    colmask = 0
    for r in rows:
        colmask |= r
    if colmask != full:
        return False

    def boolean_square(rs: list[int]) -> list[int]:
        out = []
        for r in rs:
            acc = 0
            v = r
            while v:
                low = v & -v
                acc |= rs[low.bit_length() - 1]
                v ^= low
            out.append(acc)
        return out

    wielandt = n * n - 2 * n + 2
    power = rows
    exponent = 1
    while exponent < max(wielandt, 1):
        if all(r == full for r in power):
            return True
        power = boolean_square(power)
        exponent *= 2
    return all(r == full for r in power)


def _min_abs_slope(f: PLMap) -> Fraction:
    best = None
    for (x0, y0), (x1, y1) in zip(f.points, f.points[1:]):
        s = abs((y1 - y0) / (x1 - x0))
        best = s if best is None else min(best, s)
    return best


def _fold_growth(f: PLMap) -> Optional[Fraction]:
    """Worst-case one-step growth factor of an interval straddling one
    critical point: u*v/(u+v) for adjacent slope magnitudes u, v."""
    out = None
    lap_list = laps(f)
    for left, right in zip(lap_list, lap_list[1:]):
        c = left.right
        u = _segment_slope_at(f, c, before=True)
        v = _segment_slope_at(f, c, before=False)
        g = (u * v) / (u + v)
        out = g if out is None else min(out, g)
    return out


def _segment_slope_at(f: PLMap, x: Fraction, before: bool) -> Fraction:
    xs = f.xs
    i = xs.index(x)
    if before:
        (x0, y0), (x1, y1) = f.points[i - 1], f.points[i]
    else:
        (x0, y0), (x1, y1) = f.points[i], f.points[i + 1]
    return abs((y1 - y0) / (x1 - x0))


def is_leo(
    f: PLMap,
    markov: Optional[list[Fraction]] = None,
    fallback_depth: int = 32,
    budget: Optional[int] = None,
    orbit_budget: int = DEFAULT_ORBIT_BUDGET,
) -> Optional[bool]:
    """Locally eventually onto: every subinterval eventually covers [0, 1].

    With a Markov partition (given, or derived when the map is verifiably
    post-critically finite) this is decided through primitivity of the
    transition matrix.  Otherwise a semi-decision runs: when every interval
    provably grows under iteration, covering is checked for one scale via
    exact preimage spacing; the result is None when neither route concludes.
    """
    if not is_onto(f):
        return False
    if len(laps(f)) == 1:
        # a monotone onto map is a bijection; proper subintervals never cover
        return False
    if markov is None and is_post_critically_finite(f, orbit_budget) is True:
        markov = markov_partition(f, orbit_budget)
    if markov is not None:
        return is_primitive(transition_matrix(f, markov))

    growth = min(_min_abs_slope(f), _fold_growth(f))
    if growth <= 1:
        return None
    interior = laps(f)[1:-1]
    if not interior:
        return True
    scale = min(abs(f(lap.right) - f(lap.left)) for lap in interior)
    power = f
    for _ in range(fallback_depth):
        if uniformly_onto(power, scale):
            return True
        try:
            power = compose(f, power, budget=budget)
        except BudgetExceededError:
            return None
    return None


def uniformly_onto(f: PLMap, eps) -> bool:
    """True iff f(J) = [0, 1] for every subinterval J with diam(J) >= eps.

    Equivalent finite criterion: every closed window of length eps meets
    both the preimage set of 0 and the preimage set of 1, i.e. those sets
    have no gap (including the boundary gaps) larger than eps.
    """
    eps = _as_rational(eps)
    if eps <= 0:
        raise ValueError("scale must be positive")
    for level in (ZERO, ONE):
        pts = level_crossings(f, level)
        if not pts:
            return False
        if pts[0] > eps or ONE - pts[-1] > eps:
            return False
        if any(b - a > eps for a, b in zip(pts, pts[1:])):
            return False
    return True


def leo_uniform_N(
    f: PLMap,
    eps,
    max_power: int = 64,
    budget: Optional[int] = None,
) -> int:
    """Least N with f^N(J) = [0, 1] for every J of diameter >= eps.

    Because f is onto, the property persists for every n >= N, so this is
    the uniform covering time at scale eps.  Found by iterating the exact
    composition and testing :func:`uniformly_onto` at each power.
    """
    eps = _as_rational(eps)
    if eps <= 0:
        raise ValueError("scale must be positive")
    power = f
    for n in range(1, max_power + 1):
        if uniformly_onto(power, eps):
            return n
        if n < max_power:
            power = compose(f, power, budget=budget)
    raise BudgetExceededError(
        f"no uniform covering time at scale {eps} within {max_power} powers"
    )


# ---------------------------------------------------------------------------
# Backward orbits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BackwardOrbit:
    """Eventually periodic backward orbit: f(x_{i+1}) = x_i for all i.

    Stored as an explicit prefix plus a repeating block.  Determinism of
    forward application makes every valid backward orbit purely periodic,
    so the prefix is redundancy that validation simply has to confirm.
    """

    prefix: tuple[Fraction, ...]
    period_block: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if not self.period_block:
            raise ValueError("period block must be nonempty")

    @staticmethod
    def constant(value) -> "BackwardOrbit":
        return BackwardOrbit((), (_as_rational(value),))

    @staticmethod
    def of(prefix, block) -> "BackwardOrbit":
        return BackwardOrbit(
            tuple(_as_rational(v) for v in prefix),
            tuple(_as_rational(v) for v in block),
        )

    def value_at(self, i: int) -> Fraction:
        if i < 0:
            raise IndexError("orbit indices start at 0")
        q = len(self.prefix)
        if i < q:
            return self.prefix[i]
        return self.period_block[(i - q) % len(self.period_block)]

    def value_set(self) -> frozenset[Fraction]:
        return frozenset(self.prefix) | frozenset(self.period_block)

    def minimal_period(self) -> int:
        block = self.period_block
        p = len(block)
        for d in range(1, p + 1):
            if p % d == 0 and all(block[k] == block[k % d] for k in range(p)):
                return d
        return p


def validate_orbit(f: PLMap, orbit: BackwardOrbit) -> None:
    """Check f(x_{i+1}) = x_i across the prefix, the seam, and the block
    wrap-around; raises OrbitValidationError on the first mismatch."""
    span = len(orbit.prefix) + len(orbit.period_block)
    for i in range(span):
        got = f(orbit.value_at(i + 1))
        want = orbit.value_at(i)
        if got != want:
            raise OrbitValidationError(
                f"orbit entry {i + 1} maps to {got}, expected x_{i} = {want}"
            )


def parse_orbit(text: str) -> BackwardOrbit:
    """Parse ``prefix: q_0 q_1 ... ; period: r_0 r_1 ...`` (comments with #)."""
    body = " ".join(
        line for line in text.splitlines() if not line.strip().startswith("#")
    )
    if ";" not in body:
        raise ValueError("orbit text must contain ';' between prefix and period parts")
    left, right = body.split(";", 1)
    left = left.strip()
    right = right.strip()
    if not left.startswith("prefix:") or not right.startswith("period:"):
        raise ValueError("orbit text must look like 'prefix: ... ; period: ...'")
    prefix = [parse_rational(tok) for tok in left[len("prefix:"):].split()]
    block = [parse_rational(tok) for tok in right[len("period:"):].split()]
    if not block:
        raise ValueError("orbit period block must be nonempty")
    return BackwardOrbit.of(prefix, block)


def format_orbit(orbit: BackwardOrbit) -> str:
    pre = " ".join(str(v) for v in orbit.prefix)
    blk = " ".join(str(v) for v in orbit.period_block)
    return f"prefix: {pre} ; period: {blk}".replace("prefix:  ;", "prefix: ;")


def load_orbit(path) -> BackwardOrbit:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_orbit(fh.read())


# ---------------------------------------------------------------------------
# Branch stabilization
# ---------------------------------------------------------------------------

class IterateCache:
    """Incrementally materialized iterates f, f^2, ... under one budget."""

    def __init__(self, f: PLMap, budget: Optional[int] = None):
        self.base = f
        self.budget = budget
        self._powers: dict[int, PLMap] = {1: f}
        self._top = 1

    def power(self, n: int) -> PLMap:
        if n < 1:
            raise ValueError("iterate exponent must be >= 1")
        while self._top < n:
            nxt = compose(self.base, self._powers[self._top], budget=self.budget)
            self._top += 1
            self._powers[self._top] = nxt
        return self._powers[n]


@dataclass(frozen=True)
class NSequence:
    """Strictly increasing index sequence: explicit head, arithmetic tail."""

    head: tuple[int, ...]
    step: int

    def __post_init__(self) -> None:
        if not self.head:
            raise ValueError("sequence head must be nonempty")
        if self.step <= 0:
            raise ValueError("tail step must be positive")

    def value(self, i: int) -> int:
        if i < len(self.head):
            return self.head[i]
        return self.head[-1] + self.step * (i - len(self.head) + 1)


@dataclass(frozen=True)
class StabilizationData:
    """The stabilized branch window and subsequence for one backward orbit.

    ``side`` records which end of [a, b] carries the epsilon gap that the
    tracked subsequence values avoid: ``left-gap`` keeps them out of
    [a, a + eps), ``right-gap`` out of (b - eps, b].
    """

    a: Fraction
    b: Fraction
    epsilon: Fraction
    side: str  # "left-gap" | "right-gap"
    n_sequence: NSequence


def _stable_branch_limit(
    cache: IterateCache,
    orbit: BackwardOrbit,
    start: int,
    window: int,
    probe: int,
) -> Optional[tuple[Interval, int]]:
    """Detect the nested-branch limit from index ``start``: the first depth
    where B(f^j, x_{start+j}) stays constant across ``window`` extra steps."""
    values: list[Interval] = []
    for j in range(1, probe + 1):
        fj = cache.power(j)
        values.append(branch(fj, orbit.value_at(start + j)).B)
        if len(values) >= window + 1:
            tail = values[-(window + 1):]
            if all(t == tail[0] for t in tail):
                return tail[0], len(values) - window
    return None


def branch_stabilization(
    f: PLMap,
    orbit: BackwardOrbit,
    budget: Optional[int] = None,
    max_block_multiple: int = 64,
    probe: Optional[int] = None,
) -> StabilizationData:
    """Extract (a, b, epsilon, side, n-sequence) for the certificate pipeline.

    Requires a post-critically finite leo map and a valid backward orbit.
    The branch limit [a, b] is detected along one orbit residue, the gap
    side and epsilon come from the residue's tracked value, and the block
    length is the least period multiple that restores the branch [a, b] and
    covers [0, 1] from every interval of diameter epsilon/2 (both facts
    checked exactly on the chosen block map).
    """
    validate_orbit(f, orbit)
    if is_post_critically_finite(f) is not True:
        raise ValueError("map is not verifiably post-critically finite")
    if is_leo(f) is not True:
        raise ValueError("map must be locally eventually onto")

    p = orbit.minimal_period()
    q = len(orbit.prefix)
    cache = IterateCache(f, budget=budget)
    probe_depth = probe if probe is not None else 4 * p + 12

    # block lengths are period multiples, so the tracked subsequence sits on
    # one orbit residue and takes a single value; only that value has to
    # clear the epsilon window
    chosen: Optional[tuple[int, Interval, str, Fraction]] = None
    for r in range(p):
        found = _stable_branch_limit(cache, orbit, q + r, window=p, probe=probe_depth)
        if found is None:
            continue
        (a, b), _depth = found
        tracked = orbit.value_at(q + r)
        if tracked > a:
            eps = min(tracked - a, b - a) / 2
            chosen = (q + r, (a, b), "left-gap", eps)
            break
        if tracked < b:
            eps = min(b - tracked, b - a) / 2
            chosen = (q + r, (a, b), "right-gap", eps)
            break
    if chosen is None:
        raise BudgetExceededError(
            "no orbit residue produced a stabilized branch with a usable gap "
            f"within probe depth {probe_depth}"
        )
    n0, (a, b), side, eps = chosen

    gap = None
    for m in range(1, max_block_multiple + 1):
        g = m * p
        block_map = cache.power(g)
        if not uniformly_onto(block_map, eps / 2):
            continue
        if branch(block_map, orbit.value_at(n0 + g)).B != (a, b):
            continue
        gap = g
        break
    if gap is None:
        raise BudgetExceededError(
            f"no block length up to {max_block_multiple} periods satisfies the "
            "branch and covering conditions"
        )

    # the emitted window must avoid every subsequence value; the subsequence
    # sits on one residue, so this re-checks the construction
    for i in range(2):
        x = orbit.value_at(n0 + (i + 1) * gap)
        if side == "left-gap":
            assert not (a <= x < a + eps)
        else:
            assert not (b - eps < x <= b)

    return StabilizationData(
        a=a,
        b=b,
        epsilon=eps,
        side=side,
        n_sequence=NSequence(head=(n0,), step=gap),
    )
