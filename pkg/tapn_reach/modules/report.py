from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum, auto
from typing import Any

from tapn_reach.modules.search import SearchResult, SearchStats
from tapn_reach.modules.trace import DelayStep, TimedTrace
from tapn_reach.modules.util import format_bytes, format_count, format_rational, format_timedelta


class OutputFormat(Enum):
    TEXT = auto()
    JSON = auto()


def trace_to_list(trace: TimedTrace) -> list[dict[str, Any]]:
    steps: list[dict[str, Any]] = []
    for step in trace.steps:
        if isinstance(step, DelayStep):
            steps.append({"delay": format_rational(step.duration)})
        else:
            steps.append({"fire": step.transition, "tokens": [token + 1 for token in step.tokens]})
    return steps


def _stats_lines(stats: SearchStats) -> list[str]:
    return [
        f"  explored: {format_count(stats.explored)}",
        f"  stored: {format_count(stats.stored)}",
        f"  discovered: {format_count(stats.discovered)}",
        f"  max waiting: {format_count(stats.max_waiting)}",
        f"  evictions: {format_count(stats.evictions)}",
        f"  inclusion hits: {format_count(stats.inclusion_hits)}",
        f"  elapsed: {format_timedelta(stats.elapsed_seconds)}",
        f"  memory: {format_bytes(stats.memory_bytes)}",
    ]


@dataclass
class RunReport:
    query: str
    result: SearchResult
    include_stats: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "query": self.query,
            "verdict": self.result.verdict.value,
            "reason": self.result.reason.value if self.result.reason else None,
            "trace": trace_to_list(self.result.trace) if self.result.trace else None,
            "stats": asdict(self.result.stats) if self.include_stats else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def to_text(self) -> str:
        lines = [f"query: {self.query}", f"verdict: {self.result.verdict.value}"]
        if self.result.reason:
            lines.append(f"reason: {self.result.reason.value}")
        if self.result.trace:
            lines.append("trace:")
            lines += [f"  {step}" for step in self.result.trace.steps]
        if self.include_stats:
            lines.append("stats:")
            lines += _stats_lines(self.result.stats)
        return "\n".join(lines)

    def render(self, output_format: OutputFormat) -> str:
        return self.to_json() if output_format == OutputFormat.JSON else self.to_text()
