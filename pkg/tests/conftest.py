import random
from fractions import Fraction

import pytest

from plzig.plmap import PLMap, make_plmap
from plzig.zigzag import witness_is_valid
from plzig.factorize import minc_map


@pytest.fixture(scope="session")
def minc() -> PLMap:
    return minc_map()


@pytest.fixture(scope="session")
def tent() -> PLMap:
    return make_plmap([(0, 0), (Fraction(1, 2), 1), (1, 0)])


@pytest.fixture(scope="session")
def identity() -> PLMap:
    return make_plmap([(0, 0), (1, 1)])


def random_map(
    rng: random.Random,
    max_breakpoints: int = 8,
    denominator: int = 64,
    min_breakpoints: int = 2,
) -> PLMap:
    """Random normalized map with rational vertices of denominator <= 64."""
    n = rng.randint(min_breakpoints, max_breakpoints)
    xs = sorted({Fraction(rng.randint(1, denominator - 1), denominator) for _ in range(n - 2)})
    xs = [Fraction(0)] + xs + [Fraction(1)]
    ys: list[Fraction] = []
    for _ in xs:
        while True:
            y = Fraction(rng.randint(0, denominator), denominator)
            if not ys or y != ys[-1]:
                ys.append(y)
                break
    return make_plmap(list(zip(xs, ys)))


def random_markov_map(rng: random.Random, cells: int) -> PLMap:
    """Random map monotone on each 1/cells cell with vertex values in the
    cell grid: post-critically finite by construction."""
    pts = [Fraction(i, cells) for i in range(cells + 1)]
    while True:
        vals = [rng.choice(pts)]
        for _ in range(cells):
            vals.append(rng.choice([p for p in pts if p != vals[-1]]))
        try:
            return make_plmap(list(zip(pts, vals)))
        except ValueError:
            continue


def exact_fixed_points(f: PLMap) -> list[Fraction]:
    out = set()
    for (x0, y0), (x1, y1) in zip(f.points, f.points[1:]):
        slope = (y1 - y0) / (x1 - x0)
        if slope != 1:
            x = (y0 - slope * x0) / (1 - slope)
            if x0 <= x <= x1:
                out.add(x)
    return sorted(out)


def naive_lap_witness(f: PLMap, ck: Fraction, ck1: Fraction, candidates=None):
    """All-pairs reference search, straight from the definition.

    Independent of the production two-pointer scan: tries every candidate
    pair and validates it by direct evaluation.
    """
    xs = candidates if candidates is not None else f.xs
    left = [x for x in xs if x < ck]
    right = [x for x in xs if x > ck1]
    for a in left:
        for b in right:
            if witness_is_valid(f, ck, ck1, a, b):
                return (a, b)
    return None
