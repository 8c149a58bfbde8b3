import io
import json
from fractions import Fraction

import pytest

from tapn_reach.modules.progress import Spinner
from tapn_reach.modules.query import parse_query
from tapn_reach.modules.report import OutputFormat, RunReport, trace_to_list
from tapn_reach.modules.search import InconclusiveReason, SearchOptions, SearchResult, SearchStats, Verdict, reach
from tapn_reach.modules.trace import DelayStep, FireStep, TimedTrace
from tapn_reach.modules.util import format_bytes, format_count, format_rational, format_timedelta
from tests.conftest import GOLDEN_PATH


def _report(net, query: str, include_stats: bool = False) -> RunReport:
    formula = parse_query(query)
    return RunReport(str(formula), reach(net, formula, SearchOptions(trace=True)), include_stats)


# ======================== Reports ========================


class TestRunReport:
    @pytest.mark.parametrize(
        "model, query",
        [
            ("fig1", "EF p4 = 1"),
            ("producer_consumer", "EF buffer >= 1"),
            ("deadline_monitor", "AG served = 0"),
        ],
    )
    def test_json_matches_golden(self, request, model, query):
        net = request.getfixturevalue(f"{model}_net")
        expected = json.loads((GOLDEN_PATH / f"{model}.json").read_text())
        assert json.loads(_report(net, query).render(OutputFormat.JSON)) == expected

    def test_text(self, fig1_net):
        assert _report(fig1_net, "EF p4 = 1").render(OutputFormat.TEXT).splitlines() == [
            "query: EF p4 = 1",
            "verdict: satisfied",
            "trace:",
            "  delay 2.5",
            "  fire t consuming tokens {1,2,3,4}",
        ]

    def test_stats_are_optional(self, fig1_net):
        report = _report(fig1_net, "EF p4 = 1", include_stats=True)
        stats = report.to_dict()["stats"]
        assert stats["explored"] == 1
        assert set(stats) == {
            "explored",
            "stored",
            "discovered",
            "max_waiting",
            "evictions",
            "inclusion_hits",
            "elapsed_seconds",
            "memory_bytes",
        }
        lines = report.to_text().splitlines()
        assert "stats:" in lines
        assert "  explored: 1" in lines

    def test_inconclusive_reason(self):
        result = SearchResult(Verdict.INCONCLUSIVE, InconclusiveReason.STATE_LIMIT, None, SearchStats())
        report = RunReport("EF a >= 1", result)
        assert report.to_dict()["reason"] == "state_limit"
        assert report.to_text().splitlines() == ["query: EF a >= 1", "verdict: inconclusive", "reason: state_limit"]

    def test_trace_to_list(self):
        trace = TimedTrace((DelayStep(Fraction(1, 3)), FireStep("t", (2, 0))))
        assert trace_to_list(trace) == [{"delay": "1/3"}, {"fire": "t", "tokens": [3, 1]}]


# ======================== Formatting ========================


class TestFormatting:
    @pytest.mark.parametrize(
        "value, text",
        [
            (Fraction(0), "0"),
            (Fraction(5, 2), "2.5"),
            (Fraction(-1, 8), "-0.125"),
            (Fraction(21, 10), "2.1"),
            (Fraction(7, 3), "7/3"),
            (Fraction(12), "12"),
        ],
    )
    def test_format_rational(self, value, text):
        assert format_rational(value) == text

    def test_format_count(self):
        assert format_count(1234567) == "1,234,567"

    def test_format_bytes(self):
        assert format_bytes(2048) == "2.0 KiB"

    def test_format_timedelta(self):
        assert "milliseconds" in format_timedelta(0.25)
        assert format_timedelta(120) == "2 minutes"


class TestSpinner:
    def test_writes_progress_and_summary(self):
        stream = io.StringIO()
        with Spinner("search", update_interval=0.01, stream=stream) as spinner:
            spinner.update(SearchStats(explored=1500))
        output = stream.getvalue()
        assert output.endswith("\n")
        assert "Finished search in" in output
