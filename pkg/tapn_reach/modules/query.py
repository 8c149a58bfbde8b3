from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Protocol, Sequence

from tapn_reach.modules.net import TimedArcPetriNet


class QuerySyntaxError(ValueError):
    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownRelationError(QuerySyntaxError):
    pass


class UnknownPlaceError(LookupError):
    pass


class Relation(Enum):
    LT = "<"
    LE = "<="
    EQ = "="
    NE = "!="
    GE = ">="
    GT = ">"

    def holds(self, count: int, value: int) -> bool:
        return _RELATION_OPERATORS[self](count, value)

    @property
    def complement(self) -> Relation:
        return _COMPLEMENTS[self]

    @property
    def breaks_monotonicity(self) -> bool:
        return self in (Relation.LT, Relation.LE, Relation.EQ, Relation.NE)


_RELATION_OPERATORS: dict[Relation, Callable[[int, int], bool]] = {
    Relation.LT: operator.lt,
    Relation.LE: operator.le,
    Relation.EQ: operator.eq,
    Relation.NE: operator.ne,
    Relation.GE: operator.ge,
    Relation.GT: operator.gt,
}
_COMPLEMENTS = {
    Relation.LT: Relation.GE,
    Relation.GE: Relation.LT,
    Relation.LE: Relation.GT,
    Relation.GT: Relation.LE,
    Relation.EQ: Relation.NE,
    Relation.NE: Relation.EQ,
}


class Quantifier(Enum):
    EF = "EF"
    AG = "AG"


@dataclass(frozen=True)
class Atom:
    place: str
    relation: Relation
    value: int

    def __str__(self) -> str:
        return f"{self.place} {self.relation.value} {self.value}"


@dataclass(frozen=True)
class And:
    left: Predicate
    right: Predicate

    def __str__(self) -> str:
        return f"{_wrap(self.left, Or)} and {_wrap(self.right, Or)}"


@dataclass(frozen=True)
class Or:
    left: Predicate
    right: Predicate

    def __str__(self) -> str:
        return f"{self.left} or {_wrap(self.right, Or)}"


Predicate = Atom | And | Or


def _wrap(predicate: Predicate, kind: type) -> str:
    return f"({predicate})" if isinstance(predicate, kind) else str(predicate)


@dataclass(frozen=True)
class QueryFormula:
    quantifier: Quantifier
    body: Predicate

    def __str__(self) -> str:
        return f"{self.quantifier.value} {self.body}"


class HasPlacement(Protocol):
    @property
    def placement(self) -> Sequence[int]: ...


_TOKEN_PATTERN = re.compile(
    r"(?P<space>\s+)|(?P<lparen>\()|(?P<rparen>\))|(?P<and>&&)|(?P<or>\|\|)"
    r"|(?P<relation>[<>=!~]+)|(?P<number>\d+)|(?P<word>[A-Za-z_][A-Za-z0-9_]*)"
)
_RELATIONS = {relation.value: relation for relation in Relation}


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    position: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    position = 0
    while position < len(text):
        match = _TOKEN_PATTERN.match(text, position)
        if not match:
            raise QuerySyntaxError(f"Unexpected character '{text[position]}'", position)
        kind = match.lastgroup or ""
        if kind != "space":
            word = match.group()
            if kind == "word" and word.lower() in ("and", "or"):
                kind = word.lower()
            elif kind == "relation" and word not in _RELATIONS:
                raise UnknownRelationError(f"Unknown relation '{word}'", position)
            tokens.append(_Token(kind, word, position))
        position = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def expect(self, kind: str, description: str) -> _Token:
        token = self.current
        if token.kind != kind:
            found = f"'{token.text}'" if token.text else "end of query"
            raise QuerySyntaxError(f"Expected {description}, found {found}", token.position)
        self.index += 1
        return token

    def query(self) -> QueryFormula:
        token = self.expect("word", "EF or AG")
        if token.text not in ("EF", "AG"):
            raise QuerySyntaxError(f"Expected EF or AG, found '{token.text}'", token.position)
        body = self.disjunction()
        self.expect("end", "end of query")
        return QueryFormula(Quantifier(token.text), body)

    def disjunction(self) -> Predicate:
        predicate = self.conjunction()
        while self.current.kind == "or":
            self.index += 1
            predicate = Or(predicate, self.conjunction())
        return predicate

    def conjunction(self) -> Predicate:
        predicate = self.atom()
        while self.current.kind == "and":
            self.index += 1
            predicate = And(predicate, self.atom())
        return predicate

    def atom(self) -> Predicate:
        if self.current.kind == "lparen":
            self.index += 1
            predicate = self.disjunction()
            self.expect("rparen", "')'")
            return predicate
        place = self.expect("word", "a place name")
        relation = self.expect("relation", "a relation")
        value = self.expect("number", "a token count")
        return Atom(place.text, _RELATIONS[relation.text], int(value.text))


def parse_query(text: str) -> QueryFormula:
    return _Parser(text).query()


def atoms(predicate: Predicate) -> list[Atom]:
    if isinstance(predicate, Atom):
        return [predicate]
    return atoms(predicate.left) + atoms(predicate.right)


def check_places(net: TimedArcPetriNet, predicate: Predicate) -> None:
    for atom in atoms(predicate):
        _place_of(net, atom)


def _place_of(net: TimedArcPetriNet, atom: Atom) -> int:
    try:
        return net.place_index(atom.place)
    except KeyError:
        raise UnknownPlaceError(f"Query refers to unknown place '{atom.place}'") from None


def eval_predicate(net: TimedArcPetriNet, marking: HasPlacement, predicate: Predicate) -> bool:
    if isinstance(predicate, Atom):
        count = sum(1 for place in marking.placement if place == _place_of(net, predicate))
        return predicate.relation.holds(count, predicate.value)
    if isinstance(predicate, And):
        return eval_predicate(net, marking, predicate.left) and eval_predicate(net, marking, predicate.right)
    return eval_predicate(net, marking, predicate.left) or eval_predicate(net, marking, predicate.right)


def negate(predicate: Predicate) -> Predicate:
    if isinstance(predicate, Atom):
        return Atom(predicate.place, predicate.relation.complement, predicate.value)
    if isinstance(predicate, And):
        return Or(negate(predicate.left), negate(predicate.right))
    return And(negate(predicate.left), negate(predicate.right))


def dualize(query: QueryFormula) -> tuple[Predicate, bool]:
    if query.quantifier == Quantifier.EF:
        return query.body, False
    return negate(query.body), True


def monotonicity_breaking_places(predicate: Predicate) -> frozenset[str]:
    return frozenset(atom.place for atom in atoms(predicate) if atom.relation.breaks_monotonicity)
