import logging
import sys
from enum import IntEnum
from pathlib import Path
from typing import Sequence

from wakepy.modes import keep

from tapn_reach.modules.concrete import SemanticsError
from tapn_reach.modules.config import ConfigFileError, UsageError, config
from tapn_reach.modules.loader import KTooSmallError, NetParseError, bundled_model_names, load_net, resolve_net_path
from tapn_reach.modules.net import InvalidIntervalError, NetValidationError
from tapn_reach.modules.progress import Spinner
from tapn_reach.modules.query import QueryFormula, QuerySyntaxError, UnknownPlaceError, parse_query
from tapn_reach.modules.report import RunReport
from tapn_reach.modules.search import InclusionPlacesError, SearchOptions, SearchResult, Verdict, reach
from tapn_reach.modules.symbolic import InconsistentInitialError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"
QUERY_FILE_PREFIX = "@"

USER_ERRORS = (
    UsageError,
    ConfigFileError,
    NetParseError,
    KTooSmallError,
    NetValidationError,
    InvalidIntervalError,
    QuerySyntaxError,
    UnknownPlaceError,
    InclusionPlacesError,
    InconsistentInitialError,
    SemanticsError,
    OSError,
)


class ExitCode(IntEnum):
    SATISFIED = 0
    NOT_SATISFIED = 1
    INCONCLUSIVE = 2
    ERROR = 3


VERDICT_EXIT_CODES = {
    Verdict.SATISFIED: ExitCode.SATISFIED,
    Verdict.NOT_SATISFIED: ExitCode.NOT_SATISFIED,
    Verdict.INCONCLUSIVE: ExitCode.INCONCLUSIVE,
}


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format=LOG_FORMAT,
        force=True,
    )


def read_query(text: str) -> QueryFormula:
    if text.startswith(QUERY_FILE_PREFIX):
        path = Path(text.removeprefix(QUERY_FILE_PREFIX)).expanduser()
        logger.debug("Reading query from %s", path)
        text = path.read_text(encoding="utf-8")
    return parse_query(text.strip())


def search_options() -> SearchOptions:
    return SearchOptions(
        strategy=config.search,
        inclusion_places=config.inclusion_places,
        trace=config.trace,
        max_states=config.max_states,
        timeout=config.timeout,
    )


def process() -> RunReport:
    assert config.net_path is not None and config.query is not None
    net, _ = load_net(resolve_net_path(str(config.net_path)), config.k)
    query = read_query(config.query)

    result: SearchResult
    if config.progress:
        with Spinner(f"search for {query}") as spinner:
            result = reach(net, query, search_options(), on_progress=spinner.update)
    else:
        result = reach(net, query, search_options())
    return RunReport(str(query), result, include_stats=config.stats)


def start_process() -> RunReport:
    if config.keep_awake:
        with keep.running():
            return process()
    return process()


def run_cli(args: Sequence[str] | None = None) -> int:
    try:
        config.parse_args(args)
    except SystemExit as exit_request:
        return int(exit_request.code or 0)
    except (UsageError, ConfigFileError) as error:
        print(f"error: {error}", file=sys.stderr)
        return ExitCode.ERROR

    configure_logging(config.verbose)
    if config.list_models:
        print("\n".join(bundled_model_names()))
        return ExitCode.SATISFIED

    try:
        if config.save_config:
            config.save_config_to_file()
        report = start_process()
    except USER_ERRORS as error:
        print(f"error: {error}", file=sys.stderr)
        return ExitCode.ERROR

    print(report.render(config.output_format))
    return VERDICT_EXIT_CODES[report.result.verdict]
