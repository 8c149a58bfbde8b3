"""Explicit-state reachability over region representatives of the concrete semantics.

Exponential; meant for cross-checking the symbolic engine on small nets.
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Iterator

from tapn_reach.modules.concrete import (
    ConcreteMarking,
    DepthExceededError,
    InvariantViolationError,
    delay,
    enabled_assignments,
    fire,
)
from tapn_reach.modules.net import BOTTOM, TimedArcPetriNet, max_constant_place
from tapn_reach.modules.query import Predicate, eval_predicate

logger = logging.getLogger(__name__)


def _is_tracked(net: TimedArcPetriNet, place: int, age: Fraction) -> bool:
    return place != BOTTOM and age <= max_constant_place(net, place)


def normalize(net: TimedArcPetriNet, marking: ConcreteMarking) -> ConcreteMarking:
    """Maps a marking to the canonical representative of its region."""
    fractional_parts = sorted(
        {
            age - math.floor(age)
            for place, age in zip(marking.placement, marking.ages)
            if _is_tracked(net, place, age) and age != math.floor(age)
        }
    )
    ranks = {part: Fraction(rank + 1, len(fractional_parts) + 1) for rank, part in enumerate(fractional_parts)}

    ages = []
    for place, age in zip(marking.placement, marking.ages):
        if place == BOTTOM:
            ages.append(Fraction(0))
        elif not _is_tracked(net, place, age):
            ages.append(Fraction(max_constant_place(net, place) + 1))
        else:
            whole = math.floor(age)
            ages.append(whole + ranks.get(age - whole, Fraction(0)))
    return ConcreteMarking(marking.placement, tuple(ages))


def region_delays(net: TimedArcPetriNet, marking: ConcreteMarking) -> list[Fraction]:
    fractional_parts = {
        age - math.floor(age)
        for place, age in zip(marking.placement, marking.ages)
        if _is_tracked(net, place, age)
    }
    boundaries = sorted({1 - part if part else Fraction(1) for part in fractional_parts})
    midpoints = [(previous + boundary) / 2 for previous, boundary in zip([Fraction(0), *boundaries], boundaries)]
    return sorted(boundaries + midpoints)


def _successors(net: TimedArcPetriNet, marking: ConcreteMarking) -> Iterator[ConcreteMarking]:
    for duration in region_delays(net, marking):
        try:
            yield normalize(net, delay(net, marking, duration))
        except InvariantViolationError:
            continue
    for transition in range(len(net.transitions)):
        for tokens in enabled_assignments(net, marking, transition):
            yield normalize(net, fire(net, marking, transition, tokens))


def oracle_reach(
    net: TimedArcPetriNet, initial: ConcreteMarking, predicate: Predicate, depth_limit: int = 10_000
) -> bool:
    start = normalize(net, initial)
    if eval_predicate(net, start, predicate):
        return True

    visited = {start}
    frontier = [start]
    depth = 0
    while frontier:
        if depth >= depth_limit:
            raise DepthExceededError(f"No verdict within {depth_limit} steps")
        depth += 1
        next_frontier = []
        for marking in frontier:
            for successor in _successors(net, marking):
                if successor in visited:
                    continue
                if eval_predicate(net, successor, predicate):
                    logger.debug("Oracle reached the predicate at depth %d after %d states", depth, len(visited))
                    return True
                visited.add(successor)
                next_frontier.append(successor)
        frontier = next_frontier
    logger.debug("Oracle exhausted %d states", len(visited))
    return False
