from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import AbstractSet, Callable, Iterator

import psutil

from tapn_reach.modules.inclusion import included
from tapn_reach.modules.net import BOTTOM, TimedArcPetriNet
from tapn_reach.modules.query import (
    Predicate,
    QueryFormula,
    check_places,
    dualize,
    eval_predicate,
    monotonicity_breaking_places,
)
from tapn_reach.modules.symbolic import SymbolicMarking, expand, initial_symbolic
from tapn_reach.modules.trace import TimedTrace, concretize_trace

logger = logging.getLogger(__name__)


class InclusionPlacesError(ValueError):
    pass


class SearchStrategy(Enum):
    BFS = auto()
    DFS = auto()


class NodeStatus(Enum):
    WAITING = auto()
    PASSED = auto()
    EVICTED = auto()


class Verdict(Enum):
    SATISFIED = "satisfied"
    NOT_SATISFIED = "not_satisfied"
    INCONCLUSIVE = "inconclusive"


class InconclusiveReason(Enum):
    BOUND_EXHAUSTED = "bound_exhausted"
    STATE_LIMIT = "state_limit"
    TIME_LIMIT = "time_limit"


@dataclass(eq=False)
class SearchNode:
    marking: SymbolicMarking
    parent: SearchNode | None
    via: tuple[int, tuple[int, ...]] | None
    id: int
    status: NodeStatus = NodeStatus.WAITING


@dataclass(frozen=True)
class SearchOptions:
    strategy: SearchStrategy = SearchStrategy.BFS
    inclusion_places: frozenset[str] | None = None
    trace: bool = False
    max_states: int | None = None
    timeout: float | None = None


@dataclass
class SearchStats:
    explored: int = 0
    stored: int = 0
    discovered: int = 0
    max_waiting: int = 0
    evictions: int = 0
    inclusion_hits: int = 0
    elapsed_seconds: float = 0.0
    memory_bytes: int = 0


@dataclass
class SearchResult:
    verdict: Verdict
    reason: InconclusiveReason | None = None
    trace: TimedTrace | None = None
    stats: SearchStats = field(default_factory=SearchStats)


def resolve_inclusion_places(
    net: TimedArcPetriNet, predicate: Predicate, requested: AbstractSet[str] | None
) -> frozenset[int]:
    breaking = monotonicity_breaking_places(predicate)
    if requested is None:
        return frozenset(index for index, place in enumerate(net.places) if place.name not in breaking)

    unknown = sorted(name for name in requested if name not in {place.name for place in net.places})
    if unknown:
        raise InclusionPlacesError(f"Inclusion place '{unknown[0]}' is not a place of the net")
    conflicting = sorted(requested & breaking)
    if conflicting:
        raise InclusionPlacesError(
            f"Place '{conflicting[0]}' is bounded from above or compared for equality by the query "
            "and cannot be used for inclusion"
        )
    return frozenset(net.place_index(name) for name in requested)


class MarkingStore:
    """Live passed and waiting markings, bucketed by token counts outside the inclusion places.

    With keep_unused, markings with different numbers of unused tokens never cover each other.
    """

    def __init__(self, net: TimedArcPetriNet, inclusion_places: frozenset[int], keep_unused: bool = False) -> None:
        self.net = net
        self.inclusion_places = inclusion_places
        self.keep_unused = keep_unused
        self._tracked = sorted(inclusion_places)
        self._buckets: dict[tuple[int, ...], list[tuple[tuple[int, ...], SearchNode]]] = {}

    def _counts(self, marking: SymbolicMarking) -> tuple[tuple[int, ...], tuple[int, ...]]:
        counts = [0] * len(self.net.places)
        for place in marking.placement:
            if place != BOTTOM:
                counts[place] += 1
        key = tuple(count for place, count in enumerate(counts) if place not in self.inclusion_places)
        if self.keep_unused:
            key += (marking.placement.count(BOTTOM),)
        return key, tuple(counts[place] for place in self._tracked)

    def __len__(self) -> int:
        return sum(len(bucket) for bucket in self._buckets.values())

    def __iter__(self) -> Iterator[SearchNode]:
        for bucket in self._buckets.values():
            for _, node in bucket:
                yield node

    def covering(self, marking: SymbolicMarking) -> SearchNode | None:
        key, counts = self._counts(marking)
        for stored_counts, node in self._buckets.get(key, []):
            if all(mine <= theirs for mine, theirs in zip(counts, stored_counts)) and included(
                self.net, marking, node.marking, self.inclusion_places
            ):
                return node
        return None

    def evict_covered(self, marking: SymbolicMarking) -> list[SearchNode]:
        key, counts = self._counts(marking)
        kept = []
        evicted = []
        for stored_counts, node in self._buckets.get(key, []):
            if all(theirs <= mine for mine, theirs in zip(counts, stored_counts)) and included(
                self.net, node.marking, marking, self.inclusion_places
            ):
                evicted.append(node)
            else:
                kept.append((stored_counts, node))
        if evicted:
            self._buckets[key] = kept
        return evicted

    def add(self, node: SearchNode) -> None:
        key, counts = self._counts(node.marking)
        self._buckets.setdefault(key, []).append((counts, node))


def select_next(waiting: deque[SearchNode], strategy: SearchStrategy) -> SearchNode | None:
    while waiting:
        node = waiting.popleft() if strategy == SearchStrategy.BFS else waiting.pop()
        if node.status == NodeStatus.WAITING:
            return node
    return None


@dataclass
class _Exploration:
    witness: SearchNode | None = None
    limit: InconclusiveReason | None = None
    bound_exhausted: bool = False


def _explore(
    net: TimedArcPetriNet,
    predicate: Predicate,
    store: MarkingStore,
    options: SearchOptions,
    stats: SearchStats,
    started: float,
    on_progress: Callable[[SearchStats], None] | None,
) -> _Exploration:
    outcome = _Exploration()
    root = SearchNode(initial_symbolic(net), None, None, stats.discovered)
    if eval_predicate(net, root.marking, predicate):
        outcome.witness = root
        return outcome

    waiting: deque[SearchNode] = deque([root])
    store.add(root)
    live_waiting = 1
    stats.discovered += 1
    stats.max_waiting = max(stats.max_waiting, live_waiting)

    while True:
        if options.timeout is not None and time.monotonic() - started > options.timeout:
            outcome.limit = InconclusiveReason.TIME_LIMIT
            return outcome
        if options.max_states is not None and len(store) > options.max_states:
            outcome.limit = InconclusiveReason.STATE_LIMIT
            return outcome
        node = select_next(waiting, options.strategy)
        if node is None:
            return outcome

        node.status = NodeStatus.PASSED
        live_waiting -= 1
        stats.explored += 1
        expansion = expand(net, node.marking)
        outcome.bound_exhausted = outcome.bound_exhausted or expansion.bound_exhausted

        for successor in expansion.successors:
            if store.covering(successor.marking) is not None:
                stats.inclusion_hits += 1
                continue
            for evicted in store.evict_covered(successor.marking):
                if evicted.status == NodeStatus.WAITING:
                    live_waiting -= 1
                evicted.status = NodeStatus.EVICTED
                stats.evictions += 1
                logger.debug("Evicted marking %d covered by a successor of %d", evicted.id, node.id)

            child = SearchNode(successor.marking, node, (successor.transition, successor.assignment), stats.discovered)
            if eval_predicate(net, child.marking, predicate):
                outcome.witness = child
                return outcome
            store.add(child)
            waiting.append(child)
            stats.discovered += 1
            live_waiting += 1
            stats.max_waiting = max(stats.max_waiting, live_waiting)

        if on_progress:
            on_progress(stats)


def reach(
    net: TimedArcPetriNet,
    query: QueryFormula,
    options: SearchOptions = SearchOptions(),
    on_progress: Callable[[SearchStats], None] | None = None,
) -> SearchResult:
    """Searches for a marking satisfying the query's search predicate.

    A run that exhausts the token bound under inclusion is repeated with covering restricted to
    markings with equally many unused tokens, so every marking reachable within k is found.
    """
    predicate, flip = dualize(query)
    check_places(net, predicate)
    inclusion_places = resolve_inclusion_places(net, predicate, options.inclusion_places)
    logger.debug(
        "Searching for %s with %s, inclusion places %s",
        predicate,
        options.strategy.name,
        sorted(net.place_name(place) for place in inclusion_places),
    )

    started = time.monotonic()
    stats = SearchStats()
    store = MarkingStore(net, inclusion_places)
    outcome = _explore(net, predicate, store, options, stats, started, on_progress)
    if outcome.witness is None and outcome.limit is None and outcome.bound_exhausted and inclusion_places:
        logger.debug("Token bound exhausted under inclusion; searching again keeping unused tokens apart")
        store = MarkingStore(net, inclusion_places, keep_unused=True)
        outcome = _explore(net, predicate, store, options, stats, started, on_progress)

    stats.stored = len(store)
    stats.elapsed_seconds = time.monotonic() - started
    stats.memory_bytes = psutil.Process().memory_info().rss

    witness = outcome.witness
    trace = concretize_trace(net, witness, predicate) if witness is not None and options.trace else None
    if witness is not None:
        verdict = Verdict.NOT_SATISFIED if flip else Verdict.SATISFIED
        result = SearchResult(verdict, None, trace, stats)
    elif outcome.limit is not None:
        result = SearchResult(Verdict.INCONCLUSIVE, outcome.limit, None, stats)
    elif outcome.bound_exhausted:
        result = SearchResult(Verdict.INCONCLUSIVE, InconclusiveReason.BOUND_EXHAUSTED, None, stats)
    else:
        result = SearchResult(Verdict.SATISFIED if flip else Verdict.NOT_SATISFIED, None, None, stats)

    logger.debug(
        "Search finished: %s after %d explored, %d stored, %d evicted",
        result.verdict.value,
        stats.explored,
        stats.stored,
        stats.evictions,
    )
    return result
