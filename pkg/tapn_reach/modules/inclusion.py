"""Inclusion ordering between symbolic markings.

Tokens split into three groups: inc tokens are compared by per-place counts, eq tokens need a
place-preserving bijection whose ages correspond, and bot tokens are ignored.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import AbstractSet, Iterable, Sequence

from tapn_reach.modules.dbm import (
    Dbm,
    canonicalize,
    extrapolate_bounds,
    free,
    lower_bound_info,
    project,
    restrict,
    zone_subset,
)
from tapn_reach.modules.net import (
    BOTTOM,
    TimeInterval,
    TimedArcPetriNet,
    has_outgoing_inhibitor,
    max_constant_place,
    untimed,
)
from tapn_reach.modules.symbolic import SymbolicMarking


@dataclass(frozen=True)
class TokenPartition:
    inc: frozenset[int]
    eq: frozenset[int]
    bot: frozenset[int]
    inc_counts: Counter[int] = field(default_factory=Counter, compare=False)


def compute_inc(net: TimedArcPetriNet, marking: SymbolicMarking) -> frozenset[int]:
    eligible = set()
    for token, place in enumerate(marking.placement):
        if place == BOTTOM or not net.invariant(place).is_unrestricted or has_outgoing_inhibitor(net, place):
            continue
        if not untimed(net, place):
            infimum, attained = lower_bound_info(marking.zone, token + 1)
            constant = max_constant_place(net, place)
            if constant > infimum or (attained and constant == infimum):
                continue
        eligible.add(token)
    return frozenset(eligible)


def partition(net: TimedArcPetriNet, marking: SymbolicMarking, inclusion_places: AbstractSet[int]) -> TokenPartition:
    bot = frozenset(token for token, place in enumerate(marking.placement) if place == BOTTOM)
    inc = frozenset(token for token in compute_inc(net, marking) if marking.placement[token] in inclusion_places)
    eq = frozenset(range(net.k)) - bot - inc
    return TokenPartition(inc, eq, bot, Counter(marking.placement[token] for token in inc))


def cut(placement: Sequence[int], tokens: Iterable[int], place: int) -> int:
    return sum(1 for token in tokens if placement[token] == place)


def _above(constant: int) -> TimeInterval:
    return TimeInterval(constant, None, lower_strict=True)


def _at_most(constant: int) -> TimeInterval:
    return TimeInterval(0, constant)


def _ages_correspond(smaller: Dbm, larger: Dbm, constants: Sequence[int]) -> bool:
    """Every valuation of smaller has a partner in larger, clock for clock equal or both above the constant.

    Both zones are canonical projections onto the same ordered clocks 1..n.
    """
    if zone_subset(smaller, larger):
        return True
    extrapolated = canonicalize(extrapolate_bounds(larger, constants))
    if extrapolated is not None and zone_subset(smaller, extrapolated):
        return True

    straddling = []
    forced_above = []
    for clock, constant in enumerate(constants, start=1):
        infimum, attained = lower_bound_info(smaller, clock)
        upper = smaller.bound(clock, 0)
        if infimum > constant or (infimum == constant and not attained):
            forced_above.append(clock)
        elif upper.value is not None and upper.value <= constant:
            continue
        else:
            straddling.append(clock)

    for size in range(len(straddling) + 1):
        for chosen in itertools.combinations(straddling, size):
            above = set(forced_above) | set(chosen)
            region = restrict(
                smaller,
                [
                    (clock, _above(constant) if clock in above else _at_most(constant))
                    for clock, constant in enumerate(constants, start=1)
                ],
            )
            if region is None:
                continue
            partner = restrict(larger, [(clock, _above(constants[clock - 1])) for clock in above])
            if partner is None or not zone_subset(region, free(partner, above)):
                return False
    return True


def _prefix_corresponds(
    net: TimedArcPetriNet, smaller: SymbolicMarking, larger: SymbolicMarking, matched: list[tuple[int, int]]
) -> bool:
    return _ages_correspond(
        project(smaller.zone, [token + 1 for token, _ in matched]),
        project(larger.zone, [partner + 1 for _, partner in matched]),
        [max_constant_place(net, smaller.placement[token]) for token, _ in matched],
    )


def _match_tokens(
    net: TimedArcPetriNet,
    smaller: SymbolicMarking,
    larger: SymbolicMarking,
    pending: list[int],
    available: dict[int, list[int]],
    matched: list[tuple[int, int]],
) -> bool:
    if not pending:
        return True

    token, *rest = pending
    place = smaller.placement[token]
    candidates = available[place]
    for position, partner in enumerate(candidates):
        matched.append((token, partner))
        if _prefix_corresponds(net, smaller, larger, matched):
            available[place] = candidates[:position] + candidates[position + 1 :]
            if _match_tokens(net, smaller, larger, rest, available, matched):
                return True
            available[place] = candidates
        matched.pop()
    return False


def included(
    net: TimedArcPetriNet, smaller: SymbolicMarking, larger: SymbolicMarking, inclusion_places: AbstractSet[int]
) -> bool:
    first = partition(net, smaller, inclusion_places)
    second = partition(net, larger, inclusion_places)

    if any(count > second.inc_counts[place] for place, count in first.inc_counts.items()):
        return False

    eq_places = Counter(smaller.placement[token] for token in first.eq)
    if eq_places != Counter(larger.placement[token] for token in second.eq):
        return False

    available: dict[int, list[int]] = {place: [] for place in eq_places}
    for token in sorted(second.eq):
        available[larger.placement[token]].append(token)
    return _match_tokens(net, smaller, larger, sorted(first.eq), available, [])
