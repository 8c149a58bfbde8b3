from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from tapn_reach.modules.dbm import Dbm, extrapolate, reset, restrict, up
from tapn_reach.modules.net import (
    BOTTOM,
    Placement,
    TimeInterval,
    TimedArcPetriNet,
    lacks_unused_tokens,
    move,
    partial_token_choices,
    token_choices,
)

logger = logging.getLogger(__name__)


class InconsistentInitialError(ValueError):
    pass


@dataclass(frozen=True)
class SymbolicMarking:
    placement: Placement
    zone: Dbm

    def describe(self, net: TimedArcPetriNet) -> str:
        return f"{net.render_placement(self.placement)}\n{self.zone}"


@dataclass(frozen=True)
class Successor:
    transition: int
    assignment: tuple[int, ...]
    marking: SymbolicMarking

    @property
    def tokens(self) -> frozenset[int]:
        return frozenset(self.assignment)


@dataclass(frozen=True)
class Expansion:
    successors: tuple[Successor, ...]
    bound_exhausted: bool


def guard_zone(
    net: TimedArcPetriNet, placement: Sequence[int], tokens: Sequence[int | None], transition: int
) -> Dbm:
    """Zone of valuations where each chosen token satisfies the guard of its pairing entry."""
    constraints = [
        (token + 1, entry.guard)
        for entry, token in zip(net.pairings[transition], tokens)
        if token is not None and placement[token] != BOTTOM
    ]
    zone = restrict(Dbm.universal(net.dimension), constraints)
    assert zone is not None, "single-clock guards are never empty"
    return zone


def _invariant_constraints(net: TimedArcPetriNet, placement: Sequence[int]) -> list[tuple[int, TimeInterval]]:
    return [(token + 1, net.invariant(place)) for token, place in enumerate(placement) if place != BOTTOM]


def invariant_zone(net: TimedArcPetriNet, placement: Sequence[int]) -> Dbm:
    zone = restrict(Dbm.universal(net.dimension), _invariant_constraints(net, placement))
    assert zone is not None, "invariants always contain 0"
    return zone


def restrict_invariants(net: TimedArcPetriNet, placement: Sequence[int], zone: Dbm) -> Dbm | None:
    return restrict(zone, _invariant_constraints(net, placement))


def fire_zone(
    net: TimedArcPetriNet, placement: Sequence[int], zone: Dbm, transition: int, tokens: Sequence[int | None]
) -> tuple[Placement, Dbm | None]:
    """Discrete step without delay: guards, then resets, then the invariants of the new placement."""
    pairing = net.pairings[transition]
    target = move(placement, pairing, tokens)

    guarded = restrict(
        zone,
        [(token + 1, entry.guard) for entry, token in zip(pairing, tokens) if token is not None],
    )
    if guarded is None:
        return target, None
    resets = [token + 1 for entry, token in zip(pairing, tokens) if token is not None and not entry.transport]
    return target, restrict_invariants(net, target, reset(guarded, resets))


def delay_zone(net: TimedArcPetriNet, placement: Sequence[int], zone: Dbm) -> Dbm:
    delayed = restrict_invariants(net, placement, up(zone))
    assert delayed is not None, "delay keeps the undelayed zone"
    return delayed


def initial_symbolic(net: TimedArcPetriNet) -> SymbolicMarking:
    placement = net.initial_placement
    start = restrict_invariants(net, placement, Dbm.zero(net.dimension))
    if start is None:
        raise InconsistentInitialError("An invariant excludes age 0 in the initial marking")
    return SymbolicMarking(placement, extrapolate(delay_zone(net, placement, start), placement, net))


def _fires_partially(net: TimedArcPetriNet, marking: SymbolicMarking, transition: int) -> bool:
    return any(
        fire_zone(net, marking.placement, marking.zone, transition, tokens)[1] is not None
        for tokens in partial_token_choices(net, marking.placement, transition)
    )


def expand(net: TimedArcPetriNet, marking: SymbolicMarking) -> Expansion:
    successors = []
    seen: set[SymbolicMarking] = set()
    bound_exhausted = False

    for transition, name in enumerate(net.transitions):
        if lacks_unused_tokens(net, marking.placement, transition):
            if not bound_exhausted and _fires_partially(net, marking, transition):
                logger.debug("Transition %s needs more than k=%d tokens", name, net.k)
                bound_exhausted = True
            continue

        for tokens in token_choices(net, marking.placement, transition):
            placement, fired = fire_zone(net, marking.placement, marking.zone, transition, tokens)
            if fired is None:
                continue
            successor = SymbolicMarking(placement, extrapolate(delay_zone(net, placement, fired), placement, net))
            if successor in seen:
                continue
            seen.add(successor)
            successors.append(Successor(transition, tokens, successor))

    return Expansion(tuple(successors), bound_exhausted)


def successors(net: TimedArcPetriNet, marking: SymbolicMarking) -> list[SymbolicMarking]:
    return [successor.marking for successor in expand(net, marking).successors]
