from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from tapn_reach.modules.concrete import ConcreteMarking
from tapn_reach.modules.net import (
    ArcType,
    InvalidIntervalError,
    TimeInterval,
    TimedArcPetriNet,
    validate_net,
)

logger = logging.getLogger(__name__)

MODELS_PATH = Path(__file__).parent.parent / "resources" / "models"
NET_SUFFIX = ".tapn"
SECTIONS = ("places", "transitions", "arcs", "marking")

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_INTERVAL = r"[\[(][^\])]*[\])]|<=?\s*\d+"
_BOUND_LINE = re.compile(r"^bound\s+(?P<bound>\S+)$")
_PLACE_LINE = re.compile(rf"^(?P<name>{_NAME})(?:\s+inv\s+(?P<invariant>{_INTERVAL}))?$")
_TRANSITION_LINE = re.compile(rf"^(?P<name>{_NAME})$")
_ARC_LINE = re.compile(
    rf"^(?P<source>{_NAME})\s*->\s*(?P<target>{_NAME})(?:\s+(?P<interval>{_INTERVAL}))?(?:\s+(?P<type>\S+))?$"
)
_MARKING_LINE = re.compile(rf"^(?P<name>{_NAME})\s+(?P<count>\S+)$")


class NetParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class KTooSmallError(ValueError):
    pass


@dataclass(frozen=True)
class ArcDeclaration:
    source: str
    target: str
    interval: TimeInterval | None = None
    arc_type: ArcType = ArcType()
    line: int = 0


@dataclass
class NetDocument:
    places: list[tuple[str, TimeInterval]] = field(default_factory=list)
    transitions: list[str] = field(default_factory=list)
    arcs: list[ArcDeclaration] = field(default_factory=list)
    marking: dict[str, int] = field(default_factory=dict)
    bound: int | None = None


def _natural(text: str, what: str, line: int, column: int) -> int:
    if not text.isdigit():
        raise NetParseError(f"Expected a non-negative integer {what}, found '{text}'", line, column)
    return int(text)


def _interval(text: str, line: int, column: int) -> TimeInterval:
    try:
        return TimeInterval.parse(text)
    except InvalidIntervalError as error:
        raise NetParseError(str(error), line, column) from None


def parse_net_document(text: str) -> NetDocument:
    document = NetDocument()
    section: str | None = None
    seen_sections: set[str] = set()

    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        stripped = content.strip()
        if not stripped:
            continue
        offset = len(content) - len(content.lstrip()) + 1

        def column(group: str, match: re.Match[str]) -> int:
            return offset + match.start(group)

        if stripped in SECTIONS:
            if stripped in seen_sections:
                raise NetParseError(
                    f"Section '{stripped}' declared more than once; section names cannot name places or transitions",
                    number,
                    offset,
                )
            seen_sections.add(stripped)
            section = stripped
            continue
        if bound := _BOUND_LINE.match(stripped):
            if document.bound is not None:
                raise NetParseError("Bound declared more than once", number, offset)
            document.bound = _natural(bound.group("bound"), "bound", number, column("bound", bound))
            continue

        if section is None:
            raise NetParseError(f"Expected a section header or bound, found '{stripped}'", number, offset)

        if section == "places":
            if not (place := _PLACE_LINE.match(stripped)):
                raise NetParseError(f"Malformed place declaration '{stripped}'", number, offset)
            invariant = place.group("invariant")
            document.places.append(
                (
                    place.group("name"),
                    _interval(invariant, number, column("invariant", place)) if invariant else TimeInterval(),
                )
            )
        elif section == "transitions":
            if not (transition := _TRANSITION_LINE.match(stripped)):
                raise NetParseError(f"Malformed transition declaration '{stripped}'", number, offset)
            document.transitions.append(transition.group("name"))
        elif section == "arcs":
            if not (arc := _ARC_LINE.match(stripped)):
                raise NetParseError(f"Malformed arc '{stripped}'", number, offset)
            interval = arc.group("interval")
            arc_type = ArcType()
            if arc.group("type"):
                try:
                    arc_type = ArcType.parse(arc.group("type"))
                except ValueError as error:
                    raise NetParseError(str(error), number, column("type", arc)) from None
            document.arcs.append(
                ArcDeclaration(
                    arc.group("source"),
                    arc.group("target"),
                    _interval(interval, number, column("interval", arc)) if interval else None,
                    arc_type,
                    number,
                )
            )
        else:
            if not (marking := _MARKING_LINE.match(stripped)):
                raise NetParseError(f"Malformed marking entry '{stripped}'", number, offset)
            name = marking.group("name")
            count = _natural(marking.group("count"), "token count", number, column("count", marking))
            document.marking[name] = document.marking.get(name, 0) + count

    return document


def net_from_document(document: NetDocument, k: int | None = None) -> TimedArcPetriNet:
    net = validate_net(document, k)
    tokens = sum(net.initial_tokens)
    if net.k < tokens:
        raise KTooSmallError(f"Bound k={net.k} is smaller than the {tokens} initial tokens")
    return net


def load_net(path: Path | str, k: int | None = None) -> tuple[TimedArcPetriNet, ConcreteMarking]:
    net_path = Path(path)
    logger.debug("Loading net from %s", net_path)
    net = net_from_document(parse_net_document(net_path.read_text(encoding="utf-8")), k)
    return net, ConcreteMarking.initial(net)


def bundled_model_path(name: str) -> Path:
    path = (MODELS_PATH / name).with_suffix(NET_SUFFIX)
    if not path.exists():
        raise FileNotFoundError(f"No bundled model named '{name}'")
    return path


def bundled_model_names() -> list[str]:
    return sorted(path.stem for path in MODELS_PATH.glob(f"*{NET_SUFFIX}"))


def resolve_net_path(text: str) -> Path:
    path = Path(text).expanduser()
    if path.exists():
        return path
    name = path.stem if path.suffix == NET_SUFFIX and path.parent == Path(".") else text
    if name in bundled_model_names():
        return bundled_model_path(name)
    return path


def render_net(net: TimedArcPetriNet) -> str:
    lines = [f"bound {net.k}", "", "places"]
    for place in net.places:
        lines.append(f"  {place.name}" if place.invariant.is_unrestricted else f"  {place.name} inv {place.invariant}")

    lines += ["", "transitions"]
    lines += [f"  {transition}" for transition in net.transitions]

    lines += ["", "arcs"]
    for input_arc in net.input_arcs:
        parts = [net.places[input_arc.place].name, "->", net.transitions[input_arc.transition], str(input_arc.interval)]
        if input_arc.arc_type != ArcType():
            parts.append(str(input_arc.arc_type))
        lines.append("  " + " ".join(parts))
    for output_arc in net.output_arcs:
        parts = [net.transitions[output_arc.transition], "->", net.places[output_arc.place].name]
        if output_arc.arc_type != ArcType():
            parts.append(str(output_arc.arc_type))
        lines.append("  " + " ".join(parts))

    lines += ["", "marking"]
    lines += [f"  {place.name} {count}" for place, count in zip(net.places, net.initial_tokens) if count]
    return "\n".join(lines) + "\n"
