"""Fact store for the moral rule base.

Rule files use a small subset of Prolog: ground facts whose arguments are
lowercase atoms or double-quoted strings. Clauses with a body (``:-``) are
recognised and skipped; the ``respond/1`` join over ``action/2`` and
``rationale/2`` is implemented natively by :func:`decide`.
"""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Union

log = logging.getLogger(__name__)

IDENT_RE = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")


class UncertaintyTag(str, enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def rank(self) -> int:
        return _TAG_ORDER.index(self)

    def __lt__(self, other):
        if not isinstance(other, UncertaintyTag):
            return NotImplemented
        return self.rank < other.rank

    # str mixin would otherwise compare alphabetically
    def __le__(self, other):
        if not isinstance(other, UncertaintyTag):
            return NotImplemented
        return self.rank <= other.rank

    def __gt__(self, other):
        if not isinstance(other, UncertaintyTag):
            return NotImplemented
        return self.rank > other.rank

    def __ge__(self, other):
        if not isinstance(other, UncertaintyTag):
            return NotImplemented
        return self.rank >= other.rank

    __hash__ = str.__hash__

    def __str__(self) -> str:
        return self.value


_TAG_ORDER = (UncertaintyTag.LOW, UncertaintyTag.MEDIUM, UncertaintyTag.HIGH)
TAGS = _TAG_ORDER

VIRTUES = {
    UncertaintyTag.HIGH: "Precaution",
    UncertaintyTag.MEDIUM: "Deference",
    UncertaintyTag.LOW: "Responsibility",
}


def virtue_of(tag: UncertaintyTag | str) -> str:
    """Moral rule name associated with an uncertainty level."""
    return VIRTUES[UncertaintyTag(tag)]


class RuleError(Exception):
    pass


class ParseError(RuleError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ValidationError(RuleError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class Atom(str):
    """Unquoted identifier argument."""

    def __repr__(self) -> str:
        return f"Atom({str.__repr__(self)})"


Term = Union[Atom, str]


@dataclass(frozen=True)
class Fact:
    predicate: str
    args: tuple

    def __post_init__(self):
        if not IDENT_RE.match(self.predicate):
            raise ValueError(f"bad predicate name {self.predicate!r}")
        if not self.args:
            raise ValueError("facts need at least one argument")
        for a in self.args:
            if isinstance(a, Atom) and not IDENT_RE.match(a):
                raise ValueError(f"bad atom {a!r}")

    @property
    def arity(self) -> int:
        return len(self.args)

    def __hash__(self):
        # Atom("x") and "x" must not collide as equal keys
        return hash((self.predicate, tuple((isinstance(a, Atom), str(a)) for a in self.args)))

    def __eq__(self, other):
        if not isinstance(other, Fact):
            return NotImplemented
        return self.predicate == other.predicate and _typed(self.args) == _typed(other.args)

    def to_source(self) -> str:
        return f"{self.predicate}({', '.join(format_term(a) for a in self.args)})."


def _typed(args):
    return tuple((isinstance(a, Atom), str(a)) for a in args)


def format_term(term: Term) -> str:
    if isinstance(term, Atom):
        return str(term)
    escaped = term.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


# -- tokenizer ---------------------------------------------------------------

class Token(NamedTuple):
    kind: str  # ident, var, string, punct
    value: str
    line: int
    column: int


_PUNCT = (":-", "(", ")", ",", ".", "[", "]", "|")
_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def tokenize(text: str) -> Iterator[Token]:
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(count: int):
        nonlocal i, line, col
        for ch in text[i:i + count]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += count

    while i < n:
        ch = text[i]
        if ch.isspace():
            advance(1)
            continue
        if ch == "%":
            end = text.find("\n", i)
            advance((n if end < 0 else end) - i)
            continue
        start_line, start_col = line, col
        if ch == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise ParseError("unterminated string", start_line, start_col)
                c = text[j]
                if c == "\\":
                    if j + 1 >= n or text[j + 1] not in '"\\':
                        raise ParseError("invalid escape in string", start_line, start_col)
                    buf.append(text[j + 1])
                    j += 2
                elif c == '"':
                    j += 1
                    break
                else:
                    buf.append(c)
                    j += 1
            advance(j - i)
            yield Token("string", "".join(buf), start_line, start_col)
            continue
        m = _WORD_RE.match(text, i)
        if m:
            word = m.group()
            kind = "ident" if word[0].islower() else "var"
            advance(len(word))
            yield Token(kind, word, start_line, start_col)
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                advance(len(p))
                yield Token("punct", p, start_line, start_col)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", start_line, start_col)


# -- parser ------------------------------------------------------------------

def _split_clauses(tokens: Iterable[Token]) -> Iterator[list[Token]]:
    clause: list[Token] = []
    depth = 0
    for tok in tokens:
        if tok.kind == "punct" and tok.value in ("(", "["):
            depth += 1
        elif tok.kind == "punct" and tok.value in (")", "]"):
            depth -= 1
        if tok.kind == "punct" and tok.value == "." and depth == 0:
            yield clause + [tok]
            clause = []
        else:
            clause.append(tok)
    if clause:
        t = clause[-1]
        raise ParseError("clause not terminated by '.'", t.line, t.column + len(t.value))


def _parse_fact(toks: list[Token]) -> Fact:
    pos = 0

    def expect(kind: str, value: str | None = None) -> Token:
        nonlocal pos
        tok = toks[pos]
        if tok.kind != kind or (value is not None and tok.value != value):
            want = repr(value) if value else kind
            raise ParseError(f"expected {want}, found {tok.value!r}", tok.line, tok.column)
        pos += 1
        return tok

    head = expect("ident")
    expect("punct", "(")
    args: list[Term] = []
    while True:
        tok = toks[pos]
        if tok.kind == "ident":
            args.append(Atom(tok.value))
        elif tok.kind == "string":
            args.append(tok.value)
        elif tok.kind == "var":
            raise ParseError(f"variable {tok.value!r} not allowed in a fact", tok.line, tok.column)
        else:
            raise ParseError(f"expected atom or string, found {tok.value!r}", tok.line, tok.column)
        pos += 1
        sep = toks[pos]
        if sep.kind == "punct" and sep.value == ",":
            pos += 1
            continue
        expect("punct", ")")
        break
    expect("punct", ".")
    return Fact(head.value, tuple(args))


def parse_facts(text: str) -> list[Fact]:
    """Parse rule-file text into facts without checking rule-base invariants."""
    facts = []
    for clause in _split_clauses(tokenize(text)):
        if any(t.kind == "punct" and t.value == ":-" for t in clause):
            head = clause[0]
            if head.kind != "ident":
                raise ParseError("rule head must start with an identifier", head.line, head.column)
            log.warning("line %d: skipping rule with head %s; rule bodies are not evaluated",
                        head.line, head.value)
            continue
        facts.append(_parse_fact(clause))
    return facts


# -- rule base ---------------------------------------------------------------

@dataclass(frozen=True)
class RuleBase:
    facts: tuple
    name: str = ""
    source_path: str | None = None

    @property
    def fact_set(self) -> frozenset:
        return frozenset(self.facts)

    def lookup(self, predicate: str, tag: UncertaintyTag) -> Fact:
        for f in self.facts:
            if f.predicate == predicate and f.arity == 2 and f.args[0] == tag.value:
                return f
        raise KeyError((predicate, tag.value))

    def to_source(self) -> str:
        return "".join(f.to_source() + "\n" for f in self.facts)


def validate(facts: Iterable[Fact]) -> None:
    problems = []
    seen: dict[tuple[str, str], int] = {}
    for f in facts:
        if f.predicate not in ("action", "rationale"):
            continue
        if f.arity != 2:
            problems.append(f"{f.predicate}/{f.arity}: expected arity 2")
            continue
        tag, value = f.args
        if not isinstance(tag, Atom) or tag not in {t.value for t in TAGS}:
            problems.append(f"{f.predicate}({format_term(tag)}, _): unknown uncertainty tag")
            continue
        if f.predicate == "action" and not isinstance(value, Atom):
            problems.append(f"action({tag}, _): action must be an atom")
        if f.predicate == "rationale" and isinstance(value, Atom):
            problems.append(f"rationale({tag}, _): rationale must be a quoted string")
        seen[(f.predicate, tag)] = seen.get((f.predicate, tag), 0) + 1
    for pred in ("action", "rationale"):
        for t in TAGS:
            count = seen.get((pred, t.value), 0)
            if count == 0:
                problems.append(f"missing {pred}({t.value},_)")
            elif count > 1:
                problems.append(f"duplicated {pred}({t.value},_) x{count}")
    if problems:
        raise ValidationError(problems)


def parse_rule_file(text: str, name: str = "", source_path: str | None = None) -> RuleBase:
    """Parse and validate rule-file text.

    Raises :class:`ParseError` on malformed syntax and :class:`ValidationError`
    when ``action/2`` or ``rationale/2`` is missing or duplicated for a tag.
    """
    facts = parse_facts(text)
    validate(facts)
    return RuleBase(tuple(facts), name=name, source_path=source_path)


def load_rules(path: str | Path, name: str | None = None) -> RuleBase:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_rule_file(text, name=name or path.stem, source_path=str(path))


@dataclass(frozen=True)
class Decision:
    tag: UncertaintyTag
    action: str
    rationale: str
    ruleset_name: str = ""

    @property
    def virtue(self) -> str:
        return virtue_of(self.tag)


def decide(rb: RuleBase, tag: UncertaintyTag | str) -> Decision:
    tag = UncertaintyTag(tag)
    action = rb.lookup("action", tag).args[1]
    rationale = rb.lookup("rationale", tag).args[1]
    return Decision(tag, str(action), str(rationale), rb.name)
