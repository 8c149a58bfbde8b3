from __future__ import annotations

import itertools
import logging
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum, auto
from fractions import Fraction
from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from tapn_reach.modules.loader import NetDocument

logger = logging.getLogger(__name__)

BOTTOM = -1
BOTTOM_NAME = "⊥"
MAX_CONSTANT = 2**30

Placement = tuple[int, ...]


class InvalidIntervalError(ValueError):
    pass


class NetValidationError(ValueError):
    pass


class InhibitorNotZeroInfinityError(NetValidationError):
    pass


class InhibitorOutputArcError(NetValidationError):
    pass


class UnpairedTransportArcError(NetValidationError):
    pass


class DuplicateTransportGroupError(NetValidationError):
    pass


class InvariantExcludesZeroError(NetValidationError):
    pass


class DanglingArcEndpointError(NetValidationError):
    pass


class DuplicateArcError(NetValidationError):
    pass


class DuplicateNameError(NetValidationError):
    pass


class OutputArcIntervalError(NetValidationError):
    pass


class UnknownMarkingPlaceError(NetValidationError):
    pass


class ConstantTooLargeError(NetValidationError):
    pass


_BRACKET_PATTERN = re.compile(r"^([\[(])(\d+),(\d+|inf)([\])])$")
_SUGAR_PATTERN = re.compile(r"^(<=?)(\d+)$")


@dataclass(frozen=True)
class TimeInterval:
    lower: int = 0
    upper: int | None = None
    lower_strict: bool = False
    upper_strict: bool = False

    def __post_init__(self) -> None:
        if self.lower < 0:
            raise InvalidIntervalError(f"Negative lower bound in {self}")
        if self.upper is None:
            object.__setattr__(self, "upper_strict", True)
            return
        if self.upper == self.lower:
            if self.lower_strict or self.upper_strict:
                raise InvalidIntervalError(f"Point interval {self} must be closed")
        elif self.upper < self.lower:
            raise InvalidIntervalError(f"Empty interval {self}: lower bound exceeds upper bound")
        elif self.upper == 0:
            raise InvalidIntervalError(f"Upper bound of {self} must be positive")

    @classmethod
    def unrestricted(cls) -> TimeInterval:
        return cls()

    @classmethod
    def parse(cls, text: str) -> TimeInterval:
        compact = "".join(text.split())
        if sugar := _SUGAR_PATTERN.match(compact):
            return cls(0, int(sugar.group(2)), False, sugar.group(1) == "<")

        bracket = _BRACKET_PATTERN.match(compact)
        if not bracket:
            raise InvalidIntervalError(f"Malformed interval '{text}'")
        opening, lower, upper, closing = bracket.groups()
        if upper == "inf":
            if closing != ")":
                raise InvalidIntervalError(f"Interval '{text}' must be open at infinity")
            return cls(int(lower), None, opening == "(", True)
        return cls(int(lower), int(upper), opening == "(", closing == ")")

    @property
    def max_constant(self) -> int:
        return self.lower if self.upper is None else self.upper

    @property
    def is_unrestricted(self) -> bool:
        return self.lower == 0 and not self.lower_strict and self.upper is None

    @property
    def contains_zero(self) -> bool:
        return self.lower == 0 and not self.lower_strict

    def contains(self, value: Fraction | int) -> bool:
        if value < self.lower or (self.lower_strict and value == self.lower):
            return False
        if self.upper is None:
            return True
        return value < self.upper or (not self.upper_strict and value == self.upper)

    def __str__(self) -> str:
        opening = "(" if self.lower_strict else "["
        if self.upper is None:
            return f"{opening}{self.lower},inf)"
        closing = ")" if self.upper_strict else "]"
        return f"{opening}{self.lower},{self.upper}{closing}"


class ArcKind(Enum):
    NORMAL = auto()
    INHIBITOR = auto()
    TRANSPORT = auto()


@dataclass(frozen=True)
class ArcType:
    kind: ArcKind = ArcKind.NORMAL
    group: int | None = None

    def __post_init__(self) -> None:
        if self.kind == ArcKind.TRANSPORT:
            if self.group is None or self.group < 1:
                raise ValueError("Transport arcs need a positive group number")
        elif self.group is not None:
            raise ValueError(f"Only transport arcs carry a group, not {self.kind.name.lower()} arcs")

    @classmethod
    def parse(cls, text: str) -> ArcType:
        word = text.strip().lower()
        if word == "normal":
            return cls()
        if word == "inhibitor":
            return cls(ArcKind.INHIBITOR)
        if word.startswith("transport:") and word[len("transport:") :].isdigit():
            return cls(ArcKind.TRANSPORT, int(word[len("transport:") :]))
        raise ValueError(f"Unknown arc type '{text}'")

    @property
    def is_transport(self) -> bool:
        return self.kind == ArcKind.TRANSPORT

    @property
    def is_inhibitor(self) -> bool:
        return self.kind == ArcKind.INHIBITOR

    def __str__(self) -> str:
        if self.kind == ArcKind.TRANSPORT:
            return f"transport:{self.group}"
        return self.kind.name.lower()


@dataclass(frozen=True)
class Place:
    name: str
    invariant: TimeInterval = TimeInterval()


@dataclass(frozen=True)
class InputArc:
    place: int
    transition: int
    interval: TimeInterval
    arc_type: ArcType = ArcType()


@dataclass(frozen=True)
class OutputArc:
    transition: int
    place: int
    arc_type: ArcType = ArcType()


@dataclass(frozen=True)
class PairingEntry:
    source: int
    target: int
    guard: TimeInterval
    transport: bool = False


@dataclass(frozen=True)
class TimedArcPetriNet:
    places: tuple[Place, ...]
    transitions: tuple[str, ...]
    input_arcs: tuple[InputArc, ...]
    output_arcs: tuple[OutputArc, ...]
    k: int
    initial_tokens: tuple[int, ...]
    pairings: tuple[tuple[PairingEntry, ...], ...]
    inhibitor_places: tuple[frozenset[int], ...]
    place_constants: tuple[int, ...]
    global_constant: int

    def place_index(self, name: str) -> int:
        for index, place in enumerate(self.places):
            if place.name == name:
                return index
        raise KeyError(name)

    def transition_index(self, name: str) -> int:
        return self.transitions.index(name)

    def place_name(self, place: int) -> str:
        return BOTTOM_NAME if place == BOTTOM else self.places[place].name

    def invariant(self, place: int) -> TimeInterval:
        return TimeInterval() if place == BOTTOM else self.places[place].invariant

    def outgoing_arcs(self, place: int) -> list[InputArc]:
        return [arc for arc in self.input_arcs if arc.place == place]

    @property
    def initial_placement(self) -> Placement:
        placement = [place for place, count in enumerate(self.initial_tokens) for _ in range(count)]
        return tuple(placement + [BOTTOM] * (self.k - len(placement)))

    @property
    def dimension(self) -> int:
        return self.k + 1

    def bottom_demand(self, transition: int) -> int:
        return sum(1 for entry in self.pairings[transition] if entry.source == BOTTOM)

    def render_placement(self, placement: Sequence[int]) -> str:
        return "[" + ",".join(self.place_name(place) for place in placement) + "]"


def compute_pairing(net: TimedArcPetriNet, transition: int) -> tuple[PairingEntry, ...]:
    return net.pairings[transition]


def max_constant_place(net: TimedArcPetriNet, place: int) -> int:
    if place == BOTTOM:
        return 0
    return net.place_constants[place]


def untimed(net: TimedArcPetriNet, place: int) -> bool:
    if not net.places[place].invariant.is_unrestricted:
        return False
    return all(
        not arc.arc_type.is_transport and arc.interval.is_unrestricted for arc in net.outgoing_arcs(place)
    )


def has_outgoing_inhibitor(net: TimedArcPetriNet, place: int) -> bool:
    return any(arc.arc_type.is_inhibitor for arc in net.outgoing_arcs(place))


def tokens_by_place(placement: Sequence[int]) -> dict[int, list[int]]:
    grouped: dict[int, list[int]] = defaultdict(list)
    for token, place in enumerate(placement):
        grouped[place].append(token)
    return grouped


def partial_token_choices(
    net: TimedArcPetriNet, placement: Sequence[int], transition: int
) -> list[tuple[int | None, ...]]:
    """Token choices for the place-sourced pairing entries; None stands in for each ⊥ entry."""
    grouped = tokens_by_place(placement)
    if any(grouped.get(place) for place in net.inhibitor_places[transition]):
        return []

    pairing = net.pairings[transition]
    candidates = [grouped.get(entry.source, []) for entry in pairing if entry.source != BOTTOM]
    if any(not tokens for tokens in candidates):
        return []

    choices = []
    for combination in itertools.product(*candidates):
        chosen = iter(combination)
        choices.append(tuple(None if entry.source == BOTTOM else next(chosen) for entry in pairing))
    return choices


def token_choices(net: TimedArcPetriNet, placement: Sequence[int], transition: int) -> list[tuple[int, ...]]:
    needed = net.bottom_demand(transition)
    unused = [token for token, place in enumerate(placement) if place == BOTTOM]
    if len(unused) < needed:
        return []

    choices = []
    for partial in partial_token_choices(net, placement, transition):
        fresh = iter(unused[:needed])
        choices.append(tuple(next(fresh) if token is None else token for token in partial))
    return choices


def lacks_unused_tokens(net: TimedArcPetriNet, placement: Sequence[int], transition: int) -> bool:
    needed = net.bottom_demand(transition)
    return needed > sum(1 for place in placement if place == BOTTOM)


def move(
    placement: Sequence[int], pairing: Sequence[PairingEntry], tokens: Sequence[int | None]
) -> Placement:
    moved = list(placement)
    for entry, token in zip(pairing, tokens):
        if token is not None:
            moved[token] = entry.target
    return tuple(moved)


def _build_pairing(
    transition: int, input_arcs: Sequence[InputArc], output_arcs: Sequence[OutputArc]
) -> tuple[PairingEntry, ...]:
    inputs = [arc for arc in input_arcs if arc.transition == transition and not arc.arc_type.is_inhibitor]
    outputs = [arc for arc in output_arcs if arc.transition == transition]

    transport_inputs = {arc.arc_type.group: arc for arc in inputs if arc.arc_type.is_transport}
    transport_outputs = {arc.arc_type.group: arc for arc in outputs if arc.arc_type.is_transport}
    pairing = [
        PairingEntry(transport_inputs[group].place, transport_outputs[group].place, transport_inputs[group].interval, True)
        for group in sorted(transport_inputs)
    ]

    normal_inputs = sorted((arc for arc in inputs if not arc.arc_type.is_transport), key=lambda arc: arc.place)
    normal_outputs = sorted((arc.place for arc in outputs if not arc.arc_type.is_transport))
    for position in range(max(len(normal_inputs), len(normal_outputs))):
        source = normal_inputs[position].place if position < len(normal_inputs) else BOTTOM
        guard = normal_inputs[position].interval if position < len(normal_inputs) else TimeInterval()
        target = normal_outputs[position] if position < len(normal_outputs) else BOTTOM
        pairing.append(PairingEntry(source, target, guard))
    return tuple(pairing)


def _check_transport_groups(
    transition_name: str, input_arcs: Sequence[InputArc], output_arcs: Sequence[OutputArc]
) -> None:
    input_groups = Counter(arc.arc_type.group for arc in input_arcs if arc.arc_type.is_transport)
    output_groups = Counter(arc.arc_type.group for arc in output_arcs if arc.arc_type.is_transport)
    for groups in (input_groups, output_groups):
        repeated = sorted(group for group, count in groups.items() if count > 1 and group is not None)
        if repeated:
            raise DuplicateTransportGroupError(
                f"Transition '{transition_name}' uses transport group {repeated[0]} more than once per side"
            )
    unpaired = sorted(set(input_groups) ^ set(output_groups), key=lambda group: group or 0)
    if unpaired:
        raise UnpairedTransportArcError(
            f"Transport group {unpaired[0]} of transition '{transition_name}' lacks a matching arc"
        )


def validate_net(document: NetDocument, k: int | None = None) -> TimedArcPetriNet:
    place_names = [name for name, _ in document.places]
    names = place_names + list(document.transitions)
    duplicates = sorted(name for name, count in Counter(names).items() if count > 1)
    if duplicates:
        raise DuplicateNameError(f"Name '{duplicates[0]}' is declared more than once")

    places = []
    for name, invariant in document.places:
        if not invariant.contains_zero:
            raise InvariantExcludesZeroError(f"Invariant {invariant} of place '{name}' does not contain 0")
        places.append(Place(name, invariant))

    place_lookup = {name: index for index, name in enumerate(place_names)}
    transition_lookup = {name: index for index, name in enumerate(document.transitions)}

    input_arcs: list[InputArc] = []
    output_arcs: list[OutputArc] = []
    for arc in document.arcs:
        where = f" (line {arc.line})" if arc.line else ""
        if arc.source in place_lookup and arc.target in transition_lookup:
            interval = arc.interval or TimeInterval()
            if arc.arc_type.is_inhibitor and not interval.is_unrestricted:
                raise InhibitorNotZeroInfinityError(
                    f"Inhibitor arc {arc.source} -> {arc.target} carries {interval}, expected [0,inf){where}"
                )
            input_arcs.append(
                InputArc(place_lookup[arc.source], transition_lookup[arc.target], interval, arc.arc_type)
            )
        elif arc.source in transition_lookup and arc.target in place_lookup:
            if arc.arc_type.is_inhibitor:
                raise InhibitorOutputArcError(f"Output arc {arc.source} -> {arc.target} cannot inhibit{where}")
            if arc.interval is not None:
                raise OutputArcIntervalError(f"Output arc {arc.source} -> {arc.target} cannot carry an interval{where}")
            output_arcs.append(OutputArc(transition_lookup[arc.source], place_lookup[arc.target], arc.arc_type))
        else:
            raise DanglingArcEndpointError(
                f"Arc {arc.source} -> {arc.target} must connect a place and a transition{where}"
            )

    for endpoints, kind in (
        (Counter((arc.place, arc.transition) for arc in input_arcs), "input"),
        (Counter((arc.transition, arc.place) for arc in output_arcs), "output"),
    ):
        repeated = [pair for pair, count in endpoints.items() if count > 1]
        if repeated:
            raise DuplicateArcError(f"More than one {kind} arc between the same place and transition")

    for transition, name in enumerate(document.transitions):
        _check_transport_groups(
            name,
            [arc for arc in input_arcs if arc.transition == transition],
            [arc for arc in output_arcs if arc.transition == transition],
        )

    initial_tokens = [0] * len(places)
    for name, count in document.marking.items():
        if name not in place_lookup:
            raise UnknownMarkingPlaceError(f"Marking refers to unknown place '{name}'")
        initial_tokens[place_lookup[name]] += count

    intervals = [place.invariant for place in places] + [arc.interval for arc in input_arcs]
    global_constant = max((interval.max_constant for interval in intervals), default=0)
    if global_constant > MAX_CONSTANT:
        raise ConstantTooLargeError(f"Constant {global_constant} exceeds the supported maximum {MAX_CONSTANT}")

    place_constants = []
    for index, place in enumerate(places):
        outgoing = [arc for arc in input_arcs if arc.place == index]
        if any(arc.arc_type.is_transport for arc in outgoing):
            place_constants.append(global_constant)
        else:
            place_constants.append(
                max([place.invariant.max_constant] + [arc.interval.max_constant for arc in outgoing])
            )

    bound = k if k is not None else document.bound
    net = TimedArcPetriNet(
        places=tuple(places),
        transitions=tuple(document.transitions),
        input_arcs=tuple(input_arcs),
        output_arcs=tuple(output_arcs),
        k=bound if bound is not None else sum(initial_tokens),
        initial_tokens=tuple(initial_tokens),
        pairings=tuple(
            _build_pairing(transition, input_arcs, output_arcs) for transition in range(len(document.transitions))
        ),
        inhibitor_places=tuple(
            frozenset(arc.place for arc in input_arcs if arc.transition == transition and arc.arc_type.is_inhibitor)
            for transition in range(len(document.transitions))
        ),
        place_constants=tuple(place_constants),
        global_constant=global_constant,
    )
    logger.debug(
        "Validated net with %d places, %d transitions, k=%d, gc=%d",
        len(net.places),
        len(net.transitions),
        net.k,
        net.global_constant,
    )
    return net
