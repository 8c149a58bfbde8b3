from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from tapn_reach.modules.net import (
    BOTTOM,
    Placement,
    TimedArcPetriNet,
    move,
    token_choices,
)


class SemanticsError(RuntimeError):
    pass


class NotEnabledError(SemanticsError):
    pass


class InvariantViolationError(SemanticsError):
    def __init__(self, token: int, message: str) -> None:
        super().__init__(message)
        self.token = token


class DepthExceededError(SemanticsError):
    pass


@dataclass(frozen=True)
class ConcreteMarking:
    placement: Placement
    ages: tuple[Fraction, ...]

    @classmethod
    def create(
        cls, net: TimedArcPetriNet, placement: Sequence[int], ages: Sequence[Fraction | int | str]
    ) -> ConcreteMarking:
        if len(placement) != net.k or len(ages) != net.k:
            raise ValueError(f"A marking needs exactly k={net.k} tokens")
        exact = tuple(Fraction(0) if place == BOTTOM else Fraction(age) for place, age in zip(placement, ages))
        for token, (place, age) in enumerate(zip(placement, exact)):
            if age < 0:
                raise ValueError(f"Token {token + 1} has negative age {age}")
            if not net.invariant(place).contains(age):
                raise InvariantViolationError(
                    token, f"Token {token + 1} of age {age} violates the invariant of {net.place_name(place)}"
                )
        return cls(tuple(placement), exact)

    @classmethod
    def initial(cls, net: TimedArcPetriNet) -> ConcreteMarking:
        return cls(net.initial_placement, tuple(Fraction(0) for _ in range(net.k)))


def _enabled_by(net: TimedArcPetriNet, marking: ConcreteMarking, transition: int, assignment: Sequence[int]) -> bool:
    inhibitors = net.inhibitor_places[transition]
    if any(place in inhibitors for token, place in enumerate(marking.placement) if token not in assignment):
        return False
    return all(
        entry.guard.contains(marking.ages[token])
        and (not entry.transport or net.invariant(entry.target).contains(marking.ages[token]))
        for entry, token in zip(net.pairings[transition], assignment)
    )


def enabled_assignments(net: TimedArcPetriNet, marking: ConcreteMarking, transition: int) -> list[tuple[int, ...]]:
    """Enabling assignments in pairing order, drawing unused tokens lowest index first."""
    return [
        tokens
        for tokens in token_choices(net, marking.placement, transition)
        if _enabled_by(net, marking, transition, tokens)
    ]


def enabled_token_sets(net: TimedArcPetriNet, marking: ConcreteMarking, transition: int) -> list[frozenset[int]]:
    unused = [token for token, place in enumerate(marking.placement) if place == BOTTOM]
    token_sets = []
    for tokens in enabled_assignments(net, marking, transition):
        placed = frozenset(token for token in tokens if marking.placement[token] != BOTTOM)
        token_sets.extend(
            placed | frozenset(fresh) for fresh in itertools.combinations(unused, net.bottom_demand(transition))
        )
    return token_sets


def _assignment_for(
    net: TimedArcPetriNet, marking: ConcreteMarking, transition: int, tokens: frozenset[int]
) -> tuple[int, ...]:
    unused = iter(sorted(token for token in tokens if marking.placement[token] == BOTTOM))
    assignment = []
    for entry in net.pairings[transition]:
        if entry.source == BOTTOM:
            token = next(unused, None)
        else:
            token = next((token for token in tokens if marking.placement[token] == entry.source), None)
        if token is None:
            raise NotEnabledError(f"Tokens {sorted(tokens)} do not match the preset of {net.transitions[transition]}")
        assignment.append(token)
    if len(set(assignment)) != len(tokens):
        raise NotEnabledError(f"Tokens {sorted(tokens)} do not match the preset of {net.transitions[transition]}")
    return tuple(assignment)


def fire(
    net: TimedArcPetriNet, marking: ConcreteMarking, transition: int, tokens: Iterable[int]
) -> ConcreteMarking:
    chosen = frozenset(tokens)
    assignment = _assignment_for(net, marking, transition, chosen)
    if not _enabled_by(net, marking, transition, assignment):
        raise NotEnabledError(f"Transition {net.transitions[transition]} is not enabled by tokens {sorted(chosen)}")

    pairing = net.pairings[transition]
    ages = list(marking.ages)
    for entry, token in zip(pairing, assignment):
        if not entry.transport:
            ages[token] = Fraction(0)
    return ConcreteMarking(move(marking.placement, pairing, assignment), tuple(ages))


def delay(net: TimedArcPetriNet, marking: ConcreteMarking, duration: Fraction | int) -> ConcreteMarking:
    if duration < 0:
        raise ValueError(f"Delay {duration} is negative")
    ages = []
    for token, (place, age) in enumerate(zip(marking.placement, marking.ages)):
        if place == BOTTOM:
            ages.append(Fraction(0))
            continue
        if not net.invariant(place).contains(age + duration):
            raise InvariantViolationError(
                token, f"Delaying {duration} takes token {token + 1} outside the invariant of {net.place_name(place)}"
            )
        ages.append(age + duration)
    return ConcreteMarking(marking.placement, tuple(ages))
