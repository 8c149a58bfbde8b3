from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Protocol, Sequence

from tapn_reach.modules.concrete import ConcreteMarking, SemanticsError, delay, fire
from tapn_reach.modules.dbm import ClockRange, Dbm, Valuation, restrict, sample_valuation
from tapn_reach.modules.net import TimedArcPetriNet
from tapn_reach.modules.query import Predicate, eval_predicate
from tapn_reach.modules.symbolic import delay_zone, fire_zone, restrict_invariants
from tapn_reach.modules.util import format_rational

logger = logging.getLogger(__name__)


class InternalTraceError(RuntimeError):
    pass


@dataclass(frozen=True)
class DelayStep:
    duration: Fraction

    def __str__(self) -> str:
        return f"delay {format_rational(self.duration)}"


@dataclass(frozen=True)
class FireStep:
    transition: str
    tokens: tuple[int, ...]

    def __str__(self) -> str:
        consumed = ",".join(str(token + 1) for token in self.tokens)
        return f"fire {self.transition} consuming tokens {{{consumed}}}"


TraceStep = DelayStep | FireStep


@dataclass(frozen=True)
class TimedTrace:
    steps: tuple[TraceStep, ...]

    @property
    def total_delay(self) -> Fraction:
        return sum((step.duration for step in self.steps if isinstance(step, DelayStep)), Fraction(0))

    def __str__(self) -> str:
        return "\n".join(str(step) for step in self.steps)


class TraceNode(Protocol):
    @property
    def parent(self) -> TraceNode | None: ...

    @property
    def via(self) -> tuple[int, tuple[int, ...]] | None: ...


def firing_path(leaf: TraceNode) -> list[tuple[int, tuple[int, ...]]]:
    path = []
    node: TraceNode | None = leaf
    while node is not None and node.via is not None:
        path.append(node.via)
        node = node.parent
    return path[::-1]


@dataclass(frozen=True)
class _Step:
    transition: int
    assignment: tuple[int, ...]
    before: Dbm
    guarded: Dbm
    fired: Dbm


def _delay_range(before: Dbm, target: Valuation) -> ClockRange:
    """Delays d with target - d inside before; clock 0 does not move."""
    lower, lower_strict = Fraction(0), False
    upper: Fraction | None = None
    upper_strict = False
    for clock in range(1, before.dimension):
        below = before.bound(clock, 0)
        if below.value is not None:
            candidate = target[clock] - below.value
            if candidate > lower or (candidate == lower and below.strict):
                lower, lower_strict = candidate, below.strict
        above = before.bound(0, clock)
        if above.value is not None:
            candidate = target[clock] + above.value
            if upper is None or candidate < upper or (candidate == upper and above.strict):
                upper, upper_strict = candidate, above.strict
    return ClockRange(lower, lower_strict, upper, upper_strict)


def _forward(net: TimedArcPetriNet, path: Sequence[tuple[int, tuple[int, ...]]]) -> tuple[Dbm, list[_Step]]:
    placement = net.initial_placement
    start = restrict_invariants(net, placement, Dbm.zero(net.dimension))
    if start is None:
        raise InternalTraceError("Initial marking violates an invariant")

    steps = []
    before = start
    zone = delay_zone(net, placement, start)
    for transition, assignment in path:
        guarded = restrict(
            zone,
            [(token + 1, entry.guard) for entry, token in zip(net.pairings[transition], assignment)],
        )
        placement, fired = fire_zone(net, placement, zone, transition, assignment)
        if guarded is None or fired is None:
            raise InternalTraceError(f"Transition {net.transitions[transition]} cannot fire on the recorded path")
        steps.append(_Step(transition, assignment, before, guarded, fired))
        before = fired
        zone = delay_zone(net, placement, fired)
    return start, steps


def concretize_trace(net: TimedArcPetriNet, leaf: TraceNode, predicate: Predicate) -> TimedTrace:
    path = firing_path(leaf)
    _, steps = _forward(net, path)
    if not steps:
        trace = TimedTrace((DelayStep(Fraction(0)),))
        replay_trace(net, trace, predicate)
        return trace

    reversed_steps: list[TraceStep] = []
    after = sample_valuation(steps[-1].fired)
    for step in reversed(steps):
        pairing = net.pairings[step.transition]
        reset = {token + 1 for entry, token in zip(pairing, step.assignment) if not entry.transport}
        kept = {clock: after[clock] for clock in range(1, net.dimension) if clock not in reset}
        fired_from = sample_valuation(step.guarded, kept)
        duration = _delay_range(step.before, fired_from).pick()
        logger.debug("Firing %s after delay %s", net.transitions[step.transition], duration)
        reversed_steps.append(FireStep(net.transitions[step.transition], tuple(sorted(step.assignment))))
        reversed_steps.append(DelayStep(duration))
        after = tuple(value - duration if clock else value for clock, value in enumerate(fired_from))

    trace = TimedTrace(tuple(reversed(reversed_steps)))
    replay_trace(net, trace, predicate)
    return trace


def replay_trace(net: TimedArcPetriNet, trace: TimedTrace, predicate: Predicate) -> ConcreteMarking:
    marking = ConcreteMarking.initial(net)
    try:
        for step in trace.steps:
            if isinstance(step, DelayStep):
                marking = delay(net, marking, step.duration)
            else:
                marking = fire(net, marking, net.transition_index(step.transition), step.tokens)
    except SemanticsError as error:
        raise InternalTraceError(f"Trace does not replay: {error}") from error
    if not eval_predicate(net, marking, predicate):
        raise InternalTraceError("Trace ends in a marking that does not satisfy the predicate")
    return marking
