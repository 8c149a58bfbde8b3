import random
from fractions import Fraction

import numpy as np
import pytest

from tapn_reach.modules.dbm import (
    INF,
    LE_ZERO,
    Bound,
    ClockRange,
    Dbm,
    admits,
    canonicalize,
    contains,
    encode,
    extrapolate,
    extrapolate_bounds,
    free,
    intersect,
    interval_dbm,
    lower_bound_info,
    project,
    reset,
    restrict,
    sample_valuation,
    up,
    zone_subset,
)
from tapn_reach.modules.net import TimeInterval
from tests.random_nets import random_net, random_valuation, reachable_markings


def _le(value: int) -> Bound:
    return Bound(value)


def _lt(value: int) -> Bound:
    return Bound(value, True)


INFINITY = Bound.infinity()


def random_canonical_dbm(rng: random.Random, clocks: int) -> Dbm | None:
    size = clocks + 1
    matrix = np.full((size, size), INF, dtype=np.int64)
    np.fill_diagonal(matrix, LE_ZERO)
    for clock in range(1, size):
        matrix[0, clock] = encode(-rng.randint(0, 5), rng.random() < 0.3)
        if rng.random() < 0.7:
            matrix[clock, 0] = encode(rng.randint(0, 8), rng.random() < 0.3)
        for other in range(1, size):
            if other != clock and rng.random() < 0.4:
                matrix[clock, other] = encode(rng.randint(-4, 4), rng.random() < 0.3)
    return canonicalize(Dbm(matrix))


def has_equivalent_witness(zone: Dbm, valuation, constants) -> bool:
    above = [clock for clock in range(1, zone.dimension) if valuation[clock] > constants[clock - 1]]
    partner = restrict(zone, [(clock, TimeInterval(constants[clock - 1], None, True)) for clock in above])
    if partner is None:
        return False
    return admits(partner, {clock: valuation[clock] for clock in range(1, zone.dimension) if clock not in above})


# ======================== Bounds ========================


class TestBound:
    def test_raw_encoding(self):
        assert _le(3).raw == 7
        assert _lt(3).raw == 6
        assert _le(-2).raw == -3
        assert INFINITY.raw == INF

    def test_from_raw_round_trip(self):
        for bound in [_le(0), _lt(0), _le(-5), _lt(7), INFINITY]:
            assert Bound.from_raw(bound.raw) == bound

    def test_ordering(self):
        assert _lt(3) < _le(3) < _lt(4) < INFINITY
        assert _le(-1) < _lt(0)

    def test_addition(self):
        assert _le(2) + _le(3) == _le(5)
        assert _le(2) + _lt(3) == _lt(5)
        assert _lt(-2) + _lt(3) == _lt(1)
        assert _le(2) + INFINITY == INFINITY

    def test_render(self):
        assert str(_le(3)) == "(3,≤)"
        assert str(_lt(-1)) == "(-1,<)"
        assert str(INFINITY) == "(inf,<)"

    def test_weak_infinity_rejected(self):
        with pytest.raises(ValueError):
            Bound(None, False)


# ======================== Zone operations ========================


class TestCanonicalize:
    def test_tightens_transitive_bound(self):
        dbm = Dbm.from_bounds(
            [
                [_le(0), _le(0), _le(0)],
                [_le(3), _le(0), INFINITY],
                [INFINITY, _le(1), _le(0)],
            ]
        )
        canonical = canonicalize(dbm)
        assert canonical is not None
        assert canonical.bound(2, 0) == _le(4)

    def test_detects_empty_zone(self):
        dbm = Dbm.from_bounds(
            [
                [_le(0), _le(-3)],
                [_lt(3), _le(0)],
            ]
        )
        assert canonicalize(dbm) is None

    def test_zero_is_canonical(self):
        assert canonicalize(Dbm.zero(3)) == Dbm.zero(3)

    def test_universal_is_canonical(self):
        assert canonicalize(Dbm.universal(3)) == Dbm.universal(3)


class TestOperations:
    def test_up_removes_upper_bounds_only(self):
        zone = up(Dbm.zero(3))
        assert zone.bound(1, 0) == INFINITY
        assert zone.bound(1, 2) == _le(0)
        assert zone.bound(0, 1) == _le(0)

    def test_reset_sets_clock_to_zero(self):
        zone = restrict(up(Dbm.zero(3)), [(1, TimeInterval(2, 3))])
        assert zone is not None
        reset_zone = reset(zone, [2])
        assert reset_zone.bound(2, 0) == _le(0)
        assert reset_zone.bound(1, 2) == _le(3)
        assert reset_zone.bound(2, 1) == _le(-2)
        assert canonicalize(reset_zone) == reset_zone

    def test_reset_rejects_reference_clock(self):
        with pytest.raises(ValueError):
            reset(Dbm.zero(2), [0])

    def test_free_drops_constraints(self):
        zone = free(Dbm.zero(3), [1])
        assert zone.bound(1, 0) == INFINITY
        assert zone.bound(1, 2) == INFINITY
        assert zone.bound(2, 1) == _le(0)

    def test_restrict_leaves_looser_zone_unchanged(self):
        zone = Dbm.zero(2)
        assert restrict(zone, [(1, TimeInterval())]) is zone

    def test_restrict_to_empty(self):
        assert restrict(Dbm.zero(2), [(1, TimeInterval(1, 2))]) is None

    def test_interval_dbm(self):
        zone = interval_dbm(3, 2, TimeInterval(1, 6, True, False))
        assert zone.bound(0, 2) == _lt(-1)
        assert zone.bound(2, 0) == _le(6)
        assert zone.bound(1, 0) == INFINITY

    def test_intersect_and_subset(self):
        first = interval_dbm(2, 1, TimeInterval(0, 5))
        second = interval_dbm(2, 1, TimeInterval(2, None))
        both = intersect(first, second)
        assert both is not None
        assert zone_subset(both, first) and zone_subset(both, second)
        assert not zone_subset(first, second)

    def test_project_keeps_canonical_form(self):
        zone = restrict(up(Dbm.zero(4)), [(2, TimeInterval(1, 2))])
        assert zone is not None
        projected = project(zone, [2, 3])
        assert projected.dimension == 3
        assert projected.bound(1, 0) == _le(2)
        assert canonicalize(projected) == projected

    def test_lower_bound_info(self):
        zone = interval_dbm(2, 1, TimeInterval(2, None, True))
        assert lower_bound_info(zone, 1) == (2, False)
        zone = interval_dbm(2, 1, TimeInterval(2, 3))
        assert lower_bound_info(zone, 1) == (2, True)

    def test_contains(self):
        zone = restrict(up(Dbm.zero(3)), [(1, TimeInterval(2, 3, False, True))])
        assert zone is not None
        assert contains(zone, (0, Fraction(5, 2), Fraction(5, 2)))
        assert not contains(zone, (0, 3, 3))
        assert not contains(zone, (0, Fraction(5, 2), 2))

    def test_render_is_tabular(self):
        assert str(Dbm.zero(2)).splitlines() == ["(0,≤) (0,≤)", "(0,≤) (0,≤)"]


# ======================== Sampling ========================


class TestClockRange:
    def test_midpoint_of_bounded_range(self):
        assert ClockRange(Fraction(2), False, Fraction(3), True).pick() == Fraction(5, 2)

    def test_unbounded_strict_range(self):
        assert ClockRange(Fraction(4), True, None, True).pick() == Fraction(9, 2)

    def test_unbounded_weak_range(self):
        assert ClockRange(Fraction(4), False, None, True).pick() == 4

    def test_empty_range(self):
        empty = ClockRange(Fraction(2), True, Fraction(2), False)
        assert empty.is_empty
        with pytest.raises(ValueError):
            empty.pick()


class TestSampleValuation:
    def test_fig1_post_firing_zone(self):
        zone = restrict(up(Dbm.zero(5)), [(1, TimeInterval(2, 3))])
        assert zone is not None
        fired = restrict(reset(zone, [2, 3, 4]), [(1, TimeInterval(0, 3, False, True))])
        assert fired is not None
        assert sample_valuation(fired) == (0, Fraction(5, 2), 0, 0, 0)

    def test_respects_fixed_values(self):
        zone = up(Dbm.zero(3))
        assert sample_valuation(zone, {1: Fraction(7, 4)}) == (0, Fraction(7, 4), Fraction(7, 4))

    def test_rejects_fixed_values_outside_zone(self):
        with pytest.raises(ValueError):
            sample_valuation(Dbm.zero(2), {1: Fraction(1)})

    def test_samples_are_members(self):
        rng = random.Random(7)
        for _ in range(300):
            zone = random_canonical_dbm(rng, rng.randint(1, 4))
            if zone is None:
                continue
            assert contains(zone, sample_valuation(zone))
            assert contains(zone, random_valuation(rng, zone))


# ======================== Extrapolation ========================


class TestExtrapolation:
    def test_extrapolation_drops_bounds_above_constants(self):
        zone = Dbm.from_bounds(
            [
                [_le(0), _le(-1), _le(-3)],
                [_le(5), _le(0), _le(1)],
                [_le(6), _le(3), _le(0)],
            ]
        )
        expected = Dbm.from_bounds(
            [
                [_le(0), _le(-1), _lt(-2)],
                [INFINITY, _le(0), INFINITY],
                [INFINITY, INFINITY, _le(0)],
            ]
        )
        assert extrapolate_bounds(zone, [1, 2]) == expected

    def test_extrapolation_is_idempotent_on_small_zones(self):
        zone = restrict(up(Dbm.zero(2)), [(1, TimeInterval(0, 1))])
        assert zone is not None
        assert canonicalize(extrapolate_bounds(zone, [3])) == zone

    def test_extrapolate_uses_placement_constants(self, fig1_net):
        zone = restrict(up(Dbm.zero(5)), [(1, TimeInterval(7, 8))])
        assert zone is not None
        extrapolated = extrapolate(zone, fig1_net.initial_placement, fig1_net)
        assert extrapolated.bound(0, 1) == _lt(-6)
        assert extrapolated.bound(1, 0) == INFINITY
        assert extrapolated.bound(0, 3) == _lt(0)

    def test_sandwich_on_random_zones(self):
        rng = random.Random(2024)
        checked = 0
        while checked < 1000:
            clocks = rng.randint(1, 3)
            zone = random_canonical_dbm(rng, clocks)
            if zone is None:
                continue
            constants = [rng.randint(0, 3) for _ in range(clocks)]
            extrapolated = canonicalize(extrapolate_bounds(zone, constants))
            assert extrapolated is not None
            assert zone_subset(zone, extrapolated)
            for _ in range(3):
                assert has_equivalent_witness(zone, random_valuation(rng, extrapolated), constants)
            checked += 1

    def test_finite_range_on_random_zones(self):
        rng = random.Random(99)
        for _ in range(500):
            clocks = rng.randint(1, 4)
            zone = random_canonical_dbm(rng, clocks)
            if zone is None:
                continue
            constants = [rng.randint(0, 3) for _ in range(clocks)]
            limit = max(constants)
            raw = extrapolate_bounds(zone, constants)
            finite = [int(value) >> 1 for value in raw.matrix.flatten() if value < INF]
            assert all(-limit <= value <= limit for value in finite)
            closed = canonicalize(raw)
            assert closed is not None
            finite = [int(value) >> 1 for value in closed.matrix.flatten() if value < INF]
            assert all(-clocks * limit <= value <= clocks * limit for value in finite)

    def test_finite_range_on_reachable_zones(self):
        rng = random.Random(5)
        for _ in range(60):
            net = random_net(rng)
            bound = max(net.k, 1) * net.global_constant
            for marking in reachable_markings(net, limit=25):
                finite = [int(value) >> 1 for value in marking.zone.matrix.flatten() if value < INF]
                assert all(-bound <= value <= bound for value in finite)
