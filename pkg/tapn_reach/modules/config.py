import argparse
import configparser
import os
from enum import Enum
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, NoReturn, Sequence

from tapn_reach.modules.report import OutputFormat
from tapn_reach.modules.search import SearchStrategy
from tapn_reach.modules.util import load_data_from_pyproject

CONFIG_ENV = "TAPN_REACH_CONFIG"
OPTIONS_SECTION = "Options"


class UsageError(ValueError):
    pass


class ConfigFileError(ValueError):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


class EnumAction(argparse.Action):
    def __init__(self, **kwargs: Any) -> None:
        self.enum_type = kwargs.pop("type", None)
        if self.enum_type is not None:
            kwargs.setdefault("choices", [member.name.lower() for member in self.enum_type])
        super().__init__(**kwargs)

    def __call__(self, parser, namespace, values, option_string=None) -> None:  # type: ignore[no-untyped-def]
        if self.enum_type and not isinstance(values, self.enum_type):
            setattr(namespace, self.dest, self.enum_type[values.upper()])
        else:
            setattr(namespace, self.dest, values)


class Config:
    class App:
        shortname = "tapn-reach"

        @property
        def config_file(self) -> Path:
            override = os.environ.get(CONFIG_ENV)
            if override:
                return Path(override).expanduser()
            return Path.home() / ".config" / self.shortname / "config.ini"

        @property
        def code_version(self) -> str:
            pyproject_data = load_data_from_pyproject()
            if pyproject_data:
                return pyproject_data["tool"]["poetry"]["version"]
            try:
                return version(self.shortname)
            except PackageNotFoundError:
                return "unknown"

    PERSISTED_OPTIONS: dict[str, type] = {
        "search": SearchStrategy,
        "inclusion": str,
        "trace": bool,
        "stats": bool,
        "output_format": OutputFormat,
        "max_states": int,
        "timeout": float,
        "progress": bool,
        "keep_awake": bool,
        "verbose": bool,
    }

    def __init__(self) -> None:
        self.app = self.App()
        self.reset()

    def reset(self) -> None:
        self.net_path: Path | None = None
        self.query: str | None = None
        self.k: int | None = None
        self.search = SearchStrategy.BFS
        self.inclusion = "full"
        self.trace = False
        self.stats = False
        self.output_format = OutputFormat.TEXT
        self.max_states: int | None = None
        self.timeout: float | None = None
        self.progress = False
        self.keep_awake = False
        self.verbose = False
        self.save_config = False
        self.list_models = False

    @property
    def inclusion_places(self) -> frozenset[str] | None:
        setting = self.inclusion.strip().lower()
        if setting == "full":
            return None
        if setting == "off":
            return frozenset()
        return frozenset(name.strip() for name in self.inclusion.split(",") if name.strip())

    def save_config_to_file(self) -> None:
        config_parser = configparser.ConfigParser()
        config_parser.read(self.app.config_file)
        if not config_parser.has_section(OPTIONS_SECTION):
            config_parser.add_section(OPTIONS_SECTION)

        for key in self.PERSISTED_OPTIONS:
            value = getattr(self, key)
            if value is None:
                config_parser.remove_option(OPTIONS_SECTION, key)
            elif isinstance(value, Enum):
                config_parser.set(OPTIONS_SECTION, key, value.name.lower())
            else:
                config_parser.set(OPTIONS_SECTION, key, str(value))

        self.app.config_file.parent.mkdir(parents=True, exist_ok=True)
        with open(self.app.config_file, "w") as config_file:
            config_parser.write(config_file)

    def load_config_from_file(self) -> None:
        config_parser = configparser.ConfigParser()
        config_parser.read(self.app.config_file)
        if not config_parser.has_section(OPTIONS_SECTION):
            return

        for key, value in config_parser.items(OPTIONS_SECTION):
            attribute_type = self.PERSISTED_OPTIONS.get(key)
            if attribute_type is None:
                continue
            try:
                if attribute_type == bool:
                    setattr(self, key, config_parser.getboolean(OPTIONS_SECTION, key))
                elif attribute_type == int:
                    setattr(self, key, config_parser.getint(OPTIONS_SECTION, key))
                elif attribute_type == float:
                    setattr(self, key, config_parser.getfloat(OPTIONS_SECTION, key))
                elif issubclass(attribute_type, Enum):
                    setattr(self, key, attribute_type[value.strip().upper()])
                else:
                    setattr(self, key, value)
            except (ValueError, KeyError):
                raise ConfigFileError(f"Invalid value '{value}' for {key} in {self.app.config_file}") from None

    def parse_args(self, args: Sequence[str] | None = None) -> None:
        self.reset()
        self.load_config_from_file()

        parser = ArgumentParser(
            prog=self.app.shortname,
            description="Reachability checking for bounded timed-arc Petri nets.",
        )
        parser.add_argument(
            "--net",
            "-n",
            dest="net_path",
            type=Path,
            help="Net file in the .tapn text format, or the name of a bundled model.",
        )
        parser.add_argument(
            "--query",
            "-q",
            help="Query text such as 'EF p4 >= 1', or @PATH to read it from a file.",
        )
        parser.add_argument(
            "--k",
            "-k",
            type=int,
            help="Token bound overriding the bound declared in the net file.",
        )
        parser.add_argument(
            "--search",
            type=SearchStrategy,
            action=EnumAction,
            help="Order in which waiting markings are explored. Defaults to bfs.",
        )
        parser.add_argument(
            "--inclusion",
            help="Inclusion checking: 'full', 'off', or a comma-separated list of places.",
        )
        parser.add_argument(
            "--trace",
            action="store_true",
            default=None,
            help="Print a concrete timed trace to the witness or counterexample.",
        )
        parser.add_argument(
            "--stats",
            action="store_true",
            default=None,
            help="Print search statistics.",
        )
        parser.add_argument(
            "--format",
            dest="output_format",
            type=OutputFormat,
            action=EnumAction,
            help="Report format. Defaults to text.",
        )
        parser.add_argument(
            "--max-states",
            type=int,
            help="Stop with an inconclusive verdict once more markings than this are stored.",
        )
        parser.add_argument(
            "--timeout",
            type=float,
            help="Stop with an inconclusive verdict after this many seconds.",
        )
        parser.add_argument(
            "--progress",
            action="store_true",
            default=None,
            help="Show a spinner on standard error while searching.",
        )
        parser.add_argument(
            "--keep-awake",
            action="store_true",
            default=None,
            help="Prevent the computer from sleeping during the search.",
        )
        parser.add_argument(
            "--verbose",
            "-v",
            action="store_true",
            default=None,
            help="Log debug output to standard error.",
        )
        parser.add_argument(
            "--save-config",
            action="store_true",
            default=None,
            help=f"Save the effective options as defaults in {self.app.config_file}.",
        )
        parser.add_argument(
            "--list-models",
            action="store_true",
            default=None,
            help="List the bundled example models and exit.",
        )
        parser.add_argument(
            "--version",
            action="version",
            version=f"{self.app.shortname} {self.app.code_version}",
        )

        parsed = parser.parse_args(args)
        for key, value in vars(parsed).items():
            if value is not None:
                setattr(self, key, value)

        if self.list_models:
            return
        missing = [flag for flag, value in (("--net", self.net_path), ("--query", self.query)) if value is None]
        if missing:
            raise UsageError(f"the following arguments are required: {', '.join(missing)}")
        if self.k is not None and self.k < 0:
            raise UsageError("--k must not be negative")
        if self.max_states is not None and self.max_states < 1:
            raise UsageError("--max-states must be positive")
        if self.timeout is not None and self.timeout <= 0:
            raise UsageError("--timeout must be positive")


config = Config()
