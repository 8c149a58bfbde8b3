"""Difference bound matrices over clocks 0..k, with clock 0 the constant-zero reference.

Each bound (m, ◁) is stored as the single integer 2·m + 1 for ≤ and 2·m for <, so integer
order is bound order and the whole matrix is a dense int64 array.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from tapn_reach.modules.net import TimeInterval, TimedArcPetriNet, max_constant_place

INF = 1 << 60
LE_ZERO = 1
LT_ZERO = 0

Valuation = tuple[Fraction, ...]


def encode(value: int, strict: bool) -> int:
    return 2 * value + (0 if strict else 1)


@functools.total_ordering
@dataclass(frozen=True)
class Bound:
    value: int | None
    strict: bool = False

    def __post_init__(self) -> None:
        if self.value is None and not self.strict:
            raise ValueError("The infinite bound is always strict")

    @classmethod
    def infinity(cls) -> Bound:
        return cls(None, True)

    @classmethod
    def from_raw(cls, raw: int) -> Bound:
        if raw >= INF:
            return cls.infinity()
        return cls(raw >> 1, not raw & 1)

    @property
    def raw(self) -> int:
        return INF if self.value is None else encode(self.value, self.strict)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, Bound):
            return NotImplemented
        return self.raw < other.raw

    def __add__(self, other: Bound) -> Bound:
        return Bound.from_raw(_add_raw(self.raw, other.raw))

    def __str__(self) -> str:
        if self.value is None:
            return "(inf,<)"
        return f"({self.value},{'<' if self.strict else '≤'})"


def _add_raw(left: int, right: int) -> int:
    if left >= INF or right >= INF:
        return INF
    return left + right - ((left | right) & 1)


def _add(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    total = left + right - ((left | right) & 1)
    return np.where((left >= INF) | (right >= INF), INF, total)


class Dbm:
    __slots__ = ("matrix", "_key")

    def __init__(self, matrix: np.ndarray | Sequence[Sequence[int]]) -> None:
        array = np.array(matrix, dtype=np.int64)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise ValueError(f"A DBM must be square, got shape {array.shape}")
        array.flags.writeable = False
        self.matrix = array
        self._key = (array.shape[0], array.tobytes())

    @classmethod
    def from_bounds(cls, rows: Sequence[Sequence[Bound]]) -> Dbm:
        return cls([[bound.raw for bound in row] for row in rows])

    @classmethod
    def zero(cls, dimension: int) -> Dbm:
        return cls(np.full((dimension, dimension), LE_ZERO, dtype=np.int64))

    @classmethod
    def universal(cls, dimension: int) -> Dbm:
        matrix = np.full((dimension, dimension), INF, dtype=np.int64)
        matrix[0, :] = LE_ZERO
        np.fill_diagonal(matrix, LE_ZERO)
        return cls(matrix)

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[0])

    def bound(self, row: int, column: int) -> Bound:
        return Bound.from_raw(int(self.matrix[row, column]))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Dbm) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"Dbm(dimension={self.dimension})"

    def __str__(self) -> str:
        cells = [[str(self.bound(row, column)) for column in range(self.dimension)] for row in range(self.dimension)]
        width = max(len(cell) for row in cells for cell in row)
        return "\n".join(" ".join(cell.rjust(width) for cell in row) for row in cells)


@dataclass(frozen=True)
class ClockRange:
    lower: Fraction
    lower_strict: bool
    upper: Fraction | None
    upper_strict: bool

    @property
    def is_empty(self) -> bool:
        if self.upper is None:
            return False
        if self.lower == self.upper:
            return self.lower_strict or self.upper_strict
        return self.lower > self.upper

    def pick(self) -> Fraction:
        if self.is_empty:
            raise ValueError("Cannot pick a value from an empty range")
        if self.upper is None:
            return self.lower + Fraction(1, 2) if self.lower_strict else self.lower
        return (self.lower + self.upper) / 2


def canonicalize(dbm: Dbm) -> Dbm | None:
    """All-pairs shortest path closure; None when the zone is empty."""
    matrix = dbm.matrix.copy()
    for pivot in range(matrix.shape[0]):
        np.minimum(matrix, _add(matrix[:, pivot : pivot + 1], matrix[pivot : pivot + 1, :]), out=matrix)
        if (np.diagonal(matrix) < LE_ZERO).any():
            return None
    return Dbm(matrix)


def up(dbm: Dbm) -> Dbm:
    matrix = dbm.matrix.copy()
    matrix[1:, 0] = INF
    return Dbm(matrix)


def reset(dbm: Dbm, clocks: Iterable[int]) -> Dbm:
    matrix = dbm.matrix.copy()
    for clock in clocks:
        if clock == 0:
            raise ValueError("Clock 0 cannot be reset")
        matrix[clock, :] = matrix[0, :]
        matrix[:, clock] = matrix[:, 0]
        matrix[clock, clock] = LE_ZERO
    return Dbm(matrix)


def free(dbm: Dbm, clocks: Iterable[int]) -> Dbm:
    matrix = dbm.matrix.copy()
    for clock in clocks:
        matrix[clock, :] = INF
        matrix[:, clock] = matrix[:, 0]
        matrix[clock, clock] = LE_ZERO
    return Dbm(matrix)


def intersect(first: Dbm, second: Dbm) -> Dbm | None:
    if first.dimension != second.dimension:
        raise ValueError("Cannot intersect DBMs of different dimensions")
    return canonicalize(Dbm(np.minimum(first.matrix, second.matrix)))


def _interval_raw(interval: TimeInterval) -> tuple[int, int]:
    lower = encode(-interval.lower, interval.lower_strict)
    upper = INF if interval.upper is None else encode(interval.upper, interval.upper_strict)
    return lower, upper


def restrict(dbm: Dbm, constraints: Iterable[tuple[int, TimeInterval]]) -> Dbm | None:
    """Intersects dbm with v(clock) ∈ interval for every pair; dbm must be canonical."""
    matrix = None
    for clock, interval in constraints:
        lower, upper = _interval_raw(interval)
        source = dbm.matrix if matrix is None else matrix
        if lower < source[0, clock] or upper < source[clock, 0]:
            if matrix is None:
                matrix = dbm.matrix.copy()
            matrix[0, clock] = min(matrix[0, clock], lower)
            matrix[clock, 0] = min(matrix[clock, 0], upper)
    if matrix is None:
        return dbm
    return canonicalize(Dbm(matrix))


def interval_dbm(dimension: int, clock: int, interval: TimeInterval) -> Dbm:
    if clock == 0:
        raise ValueError("Clock 0 cannot carry an interval")
    constrained = restrict(Dbm.universal(dimension), [(clock, interval)])
    assert constrained is not None
    return constrained


def zone_subset(first: Dbm, second: Dbm) -> bool:
    return bool((first.matrix <= second.matrix).all())


def project(dbm: Dbm, clocks: Sequence[int]) -> Dbm:
    indices = [0, *clocks]
    return Dbm(dbm.matrix[np.ix_(indices, indices)])


def clock_constants(net: TimedArcPetriNet, placement: Sequence[int]) -> list[int]:
    return [max_constant_place(net, place) for place in placement]


def extrapolate_bounds(dbm: Dbm, constants: Sequence[int]) -> Dbm:
    """Extrapolation against per-clock maximum constants; the result is not canonical."""
    raw = dbm.matrix
    values = raw >> 1
    limits = np.array([0, *constants], dtype=np.int64)
    clocks = np.arange(raw.shape[0]) > 0

    lower_above = clocks & (-values[0, :] > limits)
    upper_above = clocks & (values[:, 0] > limits)

    result = raw.copy()
    result[upper_above, 0] = INF
    result[0, lower_above] = encode(0, True) - 2 * limits[lower_above]
    result[lower_above, 0] = INF

    inner = clocks[:, None] & clocks[None, :] & ~np.eye(raw.shape[0], dtype=bool)
    dropped = lower_above[:, None] | lower_above[None, :] | (values > limits[:, None])
    result[inner & dropped] = INF
    return Dbm(result)


def extrapolate(dbm: Dbm, placement: Sequence[int], net: TimedArcPetriNet) -> Dbm:
    extrapolated = canonicalize(extrapolate_bounds(dbm, clock_constants(net, placement)))
    assert extrapolated is not None, "extrapolation only enlarges a consistent zone"
    return extrapolated


def lower_bound_info(dbm: Dbm, clock: int) -> tuple[int, bool]:
    bound = dbm.bound(0, clock)
    assert bound.value is not None
    return -bound.value, not bound.strict


def contains(dbm: Dbm, valuation: Sequence[Fraction | int]) -> bool:
    size = dbm.dimension
    return all(
        _within(valuation[row] - valuation[column], dbm.bound(row, column))
        for row in range(size)
        for column in range(size)
        if row != column
    )


def admits(dbm: Dbm, assigned: Mapping[int, Fraction]) -> bool:
    clocks = [0, *assigned]
    values = {0: Fraction(0), **assigned}
    return all(
        _within(values[row] - values[column], dbm.bound(row, column))
        for row in clocks
        for column in clocks
        if row != column
    )


def _within(difference: Fraction | int, bound: Bound) -> bool:
    if bound.value is None:
        return True
    return difference < bound.value or (not bound.strict and difference == bound.value)


def residual_interval(dbm: Dbm, clock: int, assigned: Mapping[int, Fraction]) -> ClockRange:
    lower, lower_strict = Fraction(0), False
    upper: Fraction | None = None
    upper_strict = False
    for other, value in [(0, Fraction(0)), *assigned.items()]:
        if other == clock:
            continue
        above = dbm.bound(clock, other)
        if above.value is not None:
            candidate = value + above.value
            if upper is None or candidate < upper or (candidate == upper and above.strict):
                upper, upper_strict = candidate, above.strict
        below = dbm.bound(other, clock)
        if below.value is not None:
            candidate = value - below.value
            if candidate > lower or (candidate == lower and below.strict):
                lower, lower_strict = candidate, below.strict
    return ClockRange(lower, lower_strict, upper, upper_strict)


def sample_valuation(dbm: Dbm, fixed: Mapping[int, Fraction] | None = None) -> Valuation:
    """Deterministic solution of a canonical DBM, completing the values given in fixed."""
    assigned = dict(fixed or {})
    if not admits(dbm, assigned):
        raise ValueError("Fixed clock values are outside the zone")
    for clock in range(1, dbm.dimension):
        if clock not in assigned:
            assigned[clock] = residual_interval(dbm, clock, assigned).pick()
    return (Fraction(0), *(assigned[clock] for clock in range(1, dbm.dimension)))
