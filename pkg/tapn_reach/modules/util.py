try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib  # type: ignore[no-redef]
from datetime import timedelta
from fractions import Fraction
from pathlib import Path
from typing import Any

import humanize


def load_data_from_pyproject() -> dict[str, Any] | None:
    project_root = Path(__file__).parent.parent.parent
    pyproject_path = project_root / "pyproject.toml"
    if not pyproject_path.exists():
        return None

    with open(pyproject_path, "rb") as pyproject_file:
        return tomllib.load(pyproject_file)


def format_timedelta(seconds_elapsed: float) -> str:
    if seconds_elapsed < 1:
        return humanize.precisedelta(timedelta(seconds=seconds_elapsed), minimum_unit="milliseconds")
    return humanize.naturaldelta(timedelta(seconds=seconds_elapsed))


def format_bytes(size: int) -> str:
    return humanize.naturalsize(size, binary=True)


def format_count(count: int) -> str:
    return humanize.intcomma(count)


def _decimal_places(denominator: int) -> int | None:
    twos = fives = 0
    while denominator % 2 == 0:
        denominator //= 2
        twos += 1
    while denominator % 5 == 0:
        denominator //= 5
        fives += 1
    return max(twos, fives) if denominator == 1 else None


def format_rational(value: Fraction | int) -> str:
    """Exact decimal rendering; falls back to p/q for non-terminating expansions."""
    exact = Fraction(value)
    places = _decimal_places(exact.denominator)
    if places is None:
        return f"{exact.numerator}/{exact.denominator}"
    if places == 0:
        return str(exact.numerator)

    scaled = abs(exact.numerator) * (10**places // exact.denominator)
    whole, fraction = divmod(scaled, 10**places)
    sign = "-" if exact < 0 else ""
    return f"{sign}{whole}.{str(fraction).rjust(places, '0').rstrip('0')}"
