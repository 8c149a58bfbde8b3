import random
from fractions import Fraction

from tapn_reach.modules.dbm import Bound, Dbm, contains, up, zone_subset
from tapn_reach.modules.net import BOTTOM, TimeInterval
from tapn_reach.modules.symbolic import (
    delay_zone,
    expand,
    fire_zone,
    guard_zone,
    initial_symbolic,
    invariant_zone,
    successors,
)
from tests.random_nets import net_from_text, random_net, reachable_markings


def _fig1_successor(fig1_net):
    (successor,) = expand(fig1_net, initial_symbolic(fig1_net)).successors
    return successor


class TestZones:
    def test_guard_zone_skips_bottom_tokens(self, fig1_net):
        zone = guard_zone(fig1_net, fig1_net.initial_placement, (0, 1, 2, 3), 0)
        assert zone.bound(0, 1) == Bound(-2)
        assert zone.bound(1, 0) == Bound(3)
        assert zone.bound(0, 2) == Bound(-1, True)
        assert zone.bound(3, 0) == Bound.infinity()

    def test_invariant_zone(self, fig1_net):
        p4 = fig1_net.place_index("p4")
        zone = invariant_zone(fig1_net, (p4, BOTTOM, BOTTOM, BOTTOM))
        assert zone.bound(1, 0) == Bound(3, True)
        assert zone.bound(2, 0) == Bound.infinity()

    def test_delay_zone_applies_invariants(self, fig1_net):
        p4 = fig1_net.place_index("p4")
        zone = delay_zone(fig1_net, (p4, BOTTOM, BOTTOM, BOTTOM), Dbm.zero(5))
        assert contains(zone, (0, Fraction(29, 10), Fraction(29, 10), Fraction(29, 10), Fraction(29, 10)))
        assert not contains(zone, (0, 3, 3, 3, 3))

    def test_fire_zone_fails_outside_guard(self):
        net = net_from_text("places\n  a inv <=1\n  b\ntransitions\n  t\narcs\n  a -> t [2,3]\n  t -> b\nmarking\n  a 1\n")
        placement, fired = fire_zone(net, net.initial_placement, delay_zone(net, (0,), Dbm.zero(2)), 0, (0,))
        assert placement == (1,)
        assert fired is None


class TestInitialMarking:
    def test_all_clocks_delay_together(self, fig1_net):
        marking = initial_symbolic(fig1_net)
        assert marking.placement == fig1_net.initial_placement
        assert marking.zone == up(Dbm.zero(5))

    def test_describe(self, fig1_net):
        assert initial_symbolic(fig1_net).describe(fig1_net).startswith("[p1,p2,⊥,⊥]\n")


class TestExpand:
    def test_fig1_single_successor(self, fig1_net):
        successor = _fig1_successor(fig1_net)
        assert successor.transition == 0
        assert successor.assignment == (0, 1, 2, 3)
        assert successor.tokens == frozenset({0, 1, 2, 3})
        assert fig1_net.render_placement(successor.marking.placement) == "[p4,p3,p5,p6]"

    def test_transport_keeps_age(self, fig1_net):
        zone = _fig1_successor(fig1_net).marking.zone
        assert zone.bound(2, 1) == Bound(-2)
        assert zone.bound(1, 0) == Bound(3, True)
        assert contains(zone, (0, Fraction(5, 2), 0, 0, 0))
        assert not contains(zone, (0, 3, 0, 0, 0))

    def test_dead_marking(self, fig1_net):
        expansion = expand(fig1_net, _fig1_successor(fig1_net).marking)
        assert expansion.successors == ()
        assert not expansion.bound_exhausted

    def test_bound_exhaustion(self):
        net = net_from_text(
            "bound 1\nplaces\n  a\n  b\n  c\ntransitions\n  t\narcs\n  a -> t\n  t -> b\n  t -> c\nmarking\n  a 1\n"
        )
        expansion = expand(net, initial_symbolic(net))
        assert expansion.successors == ()
        assert expansion.bound_exhausted

    def test_bound_exhaustion_needs_enabled_transition(self):
        net = net_from_text(
            "bound 1\nplaces\n  a inv <=1\n  b\n  c\ntransitions\n  t\n"
            "arcs\n  a -> t [2,3]\n  t -> b\n  t -> c\nmarking\n  a 1\n"
        )
        assert not expand(net, initial_symbolic(net)).bound_exhausted

    def test_one_successor_per_token(self):
        net = net_from_text("places\n  a\n  b\ntransitions\n  t\narcs\n  a -> t\n  t -> b\nmarking\n  a 3\n")
        placements = {marking.placement for marking in successors(net, initial_symbolic(net))}
        assert placements == {(1, 0, 0), (0, 1, 0), (0, 0, 1)}

    def test_successor_zones_respect_invariants(self):
        rng = random.Random(3)
        for _ in range(60):
            net = random_net(rng)
            for marking in reachable_markings(net, limit=20):
                for token, place in enumerate(marking.placement):
                    invariant = net.invariant(place)
                    if invariant.upper is not None:
                        bound = marking.zone.bound(token + 1, 0)
                        assert bound <= Bound(invariant.upper, invariant.upper_strict)

    def test_successors_are_delay_closed(self):
        rng = random.Random(8)
        for _ in range(60):
            net = random_net(rng)
            for marking in reachable_markings(net, limit=20):
                assert zone_subset(marking.zone, delay_zone(net, marking.placement, marking.zone))
                unbounded = all(net.invariant(place) == TimeInterval() for place in marking.placement)
                if unbounded:
                    assert delay_zone(net, marking.placement, marking.zone) == marking.zone
