import random
from fractions import Fraction as F

import pytest

from plzig.plmap import BudgetExceededError, compose, iterate, make_plmap
from plzig.dynamics import (
    BackwardOrbit,
    NSequence,
    OrbitValidationError,
    branch,
    branch_stabilization,
    format_orbit,
    is_leo,
    is_post_critically_finite,
    is_primitive,
    leo_uniform_N,
    markov_partition,
    parse_orbit,
    post_critical_orbits,
    transition_matrix,
    uniformly_onto,
    validate_orbit,
)


class TestBranch:
    def test_minc_fixed_point(self, minc):
        r = branch(minc, F(1, 2))
        assert r.J == (F(4, 9), F(5, 9))
        assert r.B == (F(1, 3), F(2, 3))
        assert not r.at_critical

    def test_identity_whole_interval(self, identity):
        r = branch(identity, F(3, 7))
        assert r.J == (F(0), F(1)) and r.B == (F(0), F(1))

    def test_minc_critical_selection(self, minc):
        # left lap image [1/3, 1] is not inside right lap image [1/3, 2/3],
        # so the right lap wins
        r = branch(minc, F(4, 9))
        assert r.at_critical
        assert r.J == (F(4, 9), F(5, 9))
        assert r.B == (F(1, 3), F(2, 3))
        assert not r.tie_rule_applied

    def test_equal_images_prefer_left(self, tent):
        r = branch(tent, F(1, 2))
        assert r.at_critical and r.tie_rule_applied
        assert r.J == (F(0), F(1, 2))
        assert r.B == (F(0), F(1))

    def test_endpoints_use_single_lap(self, minc):
        assert branch(minc, 0).J == (F(0), F(1, 3))
        assert branch(minc, 1).J == (F(2, 3), F(1))


class TestPostCriticalOrbits:
    def test_minc_table(self, minc):
        table = {e.point: e for e in post_critical_orbits(minc).entries}
        assert (table[F(0)].preperiod, table[F(0)].period) == (0, 1)
        assert (table[F(1)].preperiod, table[F(1)].period) == (0, 1)
        assert (table[F(1, 3)].preperiod, table[F(1, 3)].period) == (1, 1)
        assert (table[F(2, 3)].preperiod, table[F(2, 3)].period) == (1, 1)
        assert (table[F(4, 9)].preperiod, table[F(4, 9)].period) == (2, 1)
        assert (table[F(5, 9)].preperiod, table[F(5, 9)].period) == (2, 1)
        assert table[F(4, 9)].orbit == (F(4, 9), F(1, 3), F(1))

    def test_identity_everything_fixed(self, identity):
        for e in post_critical_orbits(identity).entries:
            assert (e.preperiod, e.period) == (0, 1)

    def test_tent_peak(self, tent):
        table = {e.point: e for e in post_critical_orbits(tent).entries}
        assert (table[F(1, 2)].preperiod, table[F(1, 2)].period) == (2, 1)
        assert table[F(1, 2)].orbit == (F(1, 2), F(1), F(0))

    def test_open_orbit_is_flagged(self):
        # interior fixed point attracts the endpoint orbits, which therefore
        # never close; the table must say so instead of guessing
        f = make_plmap([(0, F(1, 7)), (1, F(6, 7))])
        table = post_critical_orbits(f, budget=100)
        assert not table.all_closed()


class TestPostCriticallyFinite:
    def test_minc(self, minc):
        assert is_post_critically_finite(minc) is True

    def test_identity(self, identity):
        assert is_post_critically_finite(identity) is True

    def test_budget_exhaustion_is_indeterminate(self):
        f = make_plmap([(0, F(1, 7)), (1, F(6, 7))])
        assert is_post_critically_finite(f, budget=100) is None


class TestMarkov:
    def test_minc_partition(self, minc):
        assert markov_partition(minc) == [F(0), F(1, 3), F(4, 9), F(5, 9), F(2, 3), F(1)]

    def test_identity_partition(self, identity):
        assert markov_partition(identity) == [F(0), F(1)]

    def test_tent_partition(self, tent):
        assert markov_partition(tent) == [F(0), F(1, 2), F(1)]

    def test_unclosed_orbits_raise(self):
        f = make_plmap([(0, F(1, 7)), (1, F(6, 7))])
        with pytest.raises(BudgetExceededError):
            markov_partition(f, budget=100)

    def test_minc_matrix(self, minc):
        M = transition_matrix(minc, markov_partition(minc))
        assert M == [
            [1, 1, 1, 1, 1],
            [0, 1, 1, 1, 1],
            [0, 1, 1, 1, 0],
            [1, 1, 1, 1, 0],
            [1, 1, 1, 1, 1],
        ]

    def test_tent_matrix(self, tent):
        assert transition_matrix(tent, markov_partition(tent)) == [[1, 1], [1, 1]]

    def test_partition_must_contain_criticals(self, minc):
        with pytest.raises(ValueError):
            transition_matrix(minc, [F(0), F(1, 2), F(1)])


class TestPrimitivity:
    def test_all_ones(self):
        assert is_primitive([[1, 1], [1, 1]])

    def test_permutation_is_not_primitive(self):
        assert not is_primitive([[0, 1], [1, 0]])

    def test_zero_column(self):
        assert not is_primitive([[1, 0], [1, 0]])

    def test_primitive_but_not_positive(self):
        # irreducible with a loop: primitive although M itself has zeros
        assert is_primitive([[1, 1], [1, 0]])


class TestLeo:
    def test_minc(self, minc):
        assert is_leo(minc) is True

    def test_identity(self, identity):
        assert is_leo(identity) is False

    def test_tent(self, tent):
        assert is_leo(tent) is True

    def test_not_onto(self):
        assert is_leo(make_plmap([(0, F(1, 4)), (F(1, 2), F(3, 4)), (1, F(1, 4))])) is False

    def test_monotone_onto_is_never_leo(self):
        assert is_leo(make_plmap([(0, 0), (F(1, 3), F(3, 4)), (1, 1)])) is False

    def test_markov_override(self, minc):
        assert is_leo(minc, markov=markov_partition(minc)) is True

    def test_semidecision_expanding_map(self):
        # onto, not post-critically finite at a tiny budget, all slopes > 1:
        # the growth argument plus one covering check settles it
        f = make_plmap([(0, F(1, 5)), (F(2, 5), 1), (F(3, 5), 0), (1, F(7, 8))])
        assert is_leo(f, orbit_budget=40) is True

    def test_semidecision_gives_up_without_expansion(self):
        # one shallow slope defeats the growth argument and the orbit of the
        # critical point keeps wandering: indeterminate
        f = make_plmap([(0, 0), (F(2, 7), 1), (1, F(1, 3))])
        assert is_leo(f, orbit_budget=60) is None


class TestUniformCovering:
    def test_tent_scales(self, tent):
        assert not uniformly_onto(tent, F(1, 2))
        assert uniformly_onto(iterate(tent, 2), F(1, 2))

    def test_tent_uniform_time(self, tent):
        assert leo_uniform_N(tent, F(1, 2)) == 2

    def test_whole_interval_scale(self, minc, tent):
        for f in (minc, tent):
            assert leo_uniform_N(f, 2) == 1

    def test_minc_at_one_sixth(self, minc):
        assert leo_uniform_N(minc, F(1, 6)) == 3

    def test_identity_never_covers(self, identity):
        with pytest.raises(BudgetExceededError):
            leo_uniform_N(identity, F(1, 2), max_power=16)

    def test_positive_scale_required(self, minc):
        with pytest.raises(ValueError):
            leo_uniform_N(minc, 0)


class TestBackwardOrbit:
    def test_indexing(self):
        orbit = BackwardOrbit.of([F(1, 2)], [F(1, 3), F(2, 3)])
        assert [orbit.value_at(i) for i in range(5)] == [F(1, 2), F(1, 3), F(2, 3), F(1, 3), F(2, 3)]

    def test_minimal_period(self):
        assert BackwardOrbit.of([], [F(1, 2)] * 3).minimal_period() == 1
        assert BackwardOrbit.of([], [F(1, 3), F(2, 3), F(1, 3), F(2, 3)]).minimal_period() == 2

    def test_empty_block_rejected(self):
        with pytest.raises(ValueError):
            BackwardOrbit.of([], [])

    def test_validate_fixed_point(self, minc):
        validate_orbit(minc, BackwardOrbit.constant(F(1, 2)))

    def test_validate_rejects_non_orbit(self, minc):
        with pytest.raises(OrbitValidationError):
            validate_orbit(minc, BackwardOrbit.constant(F(1, 3)))

    def test_validate_checks_seam_and_wrap(self, minc):
        # 0 is fixed, so a prefix entry 0 before a constant block of 0 works
        validate_orbit(minc, BackwardOrbit.of([0], [0]))
        with pytest.raises(OrbitValidationError):
            validate_orbit(minc, BackwardOrbit.of([F(1, 2)], [0]))

    def test_file_format_round_trip(self):
        orbit = BackwardOrbit.of([F(1, 2)], [F(1, 3), F(2, 3)])
        assert parse_orbit(format_orbit(orbit)) == orbit
        assert parse_orbit("# comment\nprefix: ; period: 1/2") == BackwardOrbit.constant(F(1, 2))

    def test_malformed_orbit_text(self):
        with pytest.raises(ValueError):
            parse_orbit("period: 1/2")
        with pytest.raises(ValueError):
            parse_orbit("prefix: 1/2 ; period:")


class TestBranchStabilization:
    def test_minc_fixed_point(self, minc):
        stab = branch_stabilization(minc, BackwardOrbit.constant(F(1, 2)))
        assert (stab.a, stab.b) == (F(1, 3), F(2, 3))
        assert stab.side == "left-gap"
        assert stab.epsilon == F(1, 12)
        assert stab.n_sequence.head == (0,)
        assert stab.n_sequence.step == 4

    def test_window_avoids_orbit_values(self, minc):
        stab = branch_stabilization(minc, BackwardOrbit.constant(F(1, 2)))
        assert not (stab.a <= F(1, 2) < stab.a + stab.epsilon)

    def test_tent_fixed_point(self, tent):
        stab = branch_stabilization(tent, BackwardOrbit.constant(F(2, 3)))
        assert (stab.a, stab.b) == (F(0), F(1))

    def test_requires_leo(self):
        mono = make_plmap([(0, 0), (F(1, 3), F(3, 4)), (1, 1)])
        with pytest.raises(ValueError):
            branch_stabilization(mono, BackwardOrbit.constant(F(0)))

    def test_branch_window_reproduced_by_block_map(self, minc):
        stab = branch_stabilization(minc, BackwardOrbit.constant(F(1, 2)))
        block = iterate(minc, stab.n_sequence.step)
        assert branch(block, F(1, 2)).B == (stab.a, stab.b)


class TestNSequence:
    def test_values(self):
        seq = NSequence(head=(3,), step=4)
        assert [seq.value(i) for i in range(4)] == [3, 7, 11, 15]

    def test_validation(self):
        with pytest.raises(ValueError):
            NSequence(head=(), step=1)
        with pytest.raises(ValueError):
            NSequence(head=(0,), step=0)


class TestBranchStructure:
    def test_branch_endpoints_live_in_the_orbit_closure(self, minc):
        # branch images of any iterate have endpoints among the finitely
        # many forward images of the critical set
        closure = set(markov_partition(minc))
        rng = random.Random(33)
        for n in range(1, 5):
            fn = iterate(minc, n)
            for _ in range(25):
                lo, hi = branch(fn, F(rng.randint(0, 97), 97)).B
                assert lo in closure and hi in closure

    def test_markov_rows_are_exact_images(self, minc):
        pts = markov_partition(minc)
        M = transition_matrix(minc, pts)
        from plzig.plmap import image_interval

        for u in range(len(pts) - 1):
            flagged = [v for v in range(len(pts) - 1) if M[u][v]]
            lo, hi = image_interval(minc, pts[u], pts[u + 1])
            assert (lo, hi) == (pts[flagged[0]], pts[flagged[-1] + 1])
            assert flagged == list(range(flagged[0], flagged[-1] + 1))

    def test_semidecision_agrees_with_primitivity(self, minc):
        # forcing the orbit probe to fail routes the decision through the
        # growth-and-covering fallback, which must agree
        assert is_leo(minc, orbit_budget=0) is True
        assert is_leo(minc) is True


class TestBranchNesting:
    def test_nesting_along_backward_orbits(self, minc):
        rng = random.Random(31)
        from plzig.plmap import level_crossings

        iterates = {j: iterate(minc, j) for j in range(1, 7)}
        for _ in range(20):
            chain = [F(rng.randint(0, 64), 64)]
            for _ in range(6):
                chain.append(rng.choice(level_crossings(minc, chain[-1])))
            for i in range(6):
                for j in range(1, 6 - i):
                    outer = branch(iterates[j], chain[i + j]).B
                    inner = branch(iterates[j + 1], chain[i + j + 1]).B
                    assert outer[0] <= inner[0] and inner[1] <= outer[1]
