"""Line-based N-Triples reading and writing.

Covers the subset used by the multi-modal KG files: IRIs, plain literals,
typed literals, plus blank nodes and language tags (parsed and preserved,
never interpreted downstream). One statement per line, terminated by ``.``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

__all__ = [
    "RdfTerm",
    "RdfStatement",
    "NTriplesParseError",
    "iri",
    "literal",
    "parse_ntriples",
    "parse_ntriples_text",
    "serialize_ntriples",
    "serialize_statement",
]

IRI = "iri"
LITERAL = "literal"
BLANK = "blank"

_WS = " \t"


def _check_iri_text(value: str) -> None:
    if not value:
        raise ValueError("empty IRI")
    if any(c in value for c in "<> \t\n\r"):
        raise ValueError(f"IRI contains whitespace or angle bracket: {value!r}")


class NTriplesParseError(ValueError):
    """Malformed line, carrying its number and the offending fragment."""

    def __init__(self, message: str, lineno: int, fragment: str):
        super().__init__(f"line {lineno}: {message}: {fragment!r}")
        self.lineno = lineno
        self.fragment = fragment


@dataclass(frozen=True)
class RdfTerm:
    kind: str
    value: str
    datatype: str | None = None
    lang: str | None = None

    def __post_init__(self):
        if self.kind == IRI:
            _check_iri_text(self.value)
        if self.datatype is not None:
            _check_iri_text(self.datatype)

    @property
    def is_iri(self) -> bool:
        return self.kind == IRI

    @property
    def is_literal(self) -> bool:
        return self.kind == LITERAL


@dataclass(frozen=True)
class RdfStatement:
    subject: RdfTerm
    predicate: RdfTerm
    object: RdfTerm

    def __post_init__(self):
        if self.subject.kind == LITERAL:
            raise ValueError("statement subject cannot be a literal")
        if self.predicate.kind != IRI:
            raise ValueError("statement predicate must be an IRI")


def iri(value: str) -> RdfTerm:
    return RdfTerm(IRI, value)


def literal(value: str, datatype: str | None = None, lang: str | None = None) -> RdfTerm:
    return RdfTerm(LITERAL, value, datatype, lang)


_UNESCAPE = {
    "t": "\t",
    "b": "\b",
    "n": "\n",
    "r": "\r",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}


def _decode_escapes(raw: str, lineno: int) -> str:
    if "\\" not in raw:
        return raw
    out = []
    i = 0
    n = len(raw)
    while i < n:
        c = raw[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if i + 1 >= n:
            raise NTriplesParseError("dangling backslash", lineno, raw)
        e = raw[i + 1]
        if e in _UNESCAPE:
            out.append(_UNESCAPE[e])
            i += 2
        elif e == "u" or e == "U":
            width = 4 if e == "u" else 8
            hexdigits = raw[i + 2:i + 2 + width]
            if len(hexdigits) != width:
                raise NTriplesParseError("truncated \\%s escape" % e, lineno, raw)
            try:
                out.append(chr(int(hexdigits, 16)))
            except ValueError:
                raise NTriplesParseError("bad hex in \\%s escape" % e, lineno, raw) from None
            i += 2 + width
        else:
            raise NTriplesParseError(f"unknown escape \\{e}", lineno, raw)
    return "".join(out)


class _LineScanner:
    def __init__(self, line: str, lineno: int):
        self.line = line
        self.lineno = lineno
        self.pos = 0

    def fail(self, message: str):
        raise NTriplesParseError(message, self.lineno, self.line[self.pos:self.pos + 40] or self.line)

    def skip_ws(self):
        while self.pos < len(self.line) and self.line[self.pos] in _WS:
            self.pos += 1

    def at_end(self) -> bool:
        return self.pos >= len(self.line)

    def term(self) -> RdfTerm:
        self.skip_ws()
        if self.at_end():
            self.fail("expected a term")
        c = self.line[self.pos]
        if c == "<":
            return self._iri()
        if c == '"':
            return self._literal()
        if c == "_" and self.line[self.pos:self.pos + 2] == "_:":
            return self._blank()
        self.fail("unrecognized term start")

    def _iri(self) -> RdfTerm:
        end = self.line.find(">", self.pos + 1)
        if end < 0:
            self.fail("unterminated IRI")
        raw = self.line[self.pos + 1:end]
        self.pos = end + 1
        value = _decode_escapes(raw, self.lineno)
        try:
            return RdfTerm(IRI, value)
        except ValueError as exc:
            raise NTriplesParseError(str(exc), self.lineno, raw) from None

    def _literal(self) -> RdfTerm:
        # find the closing quote, honouring backslash escapes
        i = self.pos + 1
        line = self.line
        n = len(line)
        while i < n:
            if line[i] == "\\":
                i += 2
                continue
            if line[i] == '"':
                break
            i += 1
        if i >= n:
            self.fail("unterminated literal")
        raw = line[self.pos + 1:i]
        self.pos = i + 1
        value = _decode_escapes(raw, self.lineno)
        datatype = None
        lang = None
        if line[self.pos:self.pos + 2] == "^^":
            self.pos += 2
            if self.pos >= n or line[self.pos] != "<":
                self.fail("expected datatype IRI after ^^")
            dt = self._iri()
            datatype = dt.value
        elif line[self.pos:self.pos + 1] == "@":
            j = self.pos + 1
            while j < n and (line[j].isalnum() or line[j] == "-"):
                j += 1
            if j == self.pos + 1:
                self.fail("empty language tag")
            lang = line[self.pos + 1:j]
            self.pos = j
        return RdfTerm(LITERAL, value, datatype, lang)

    def _blank(self) -> RdfTerm:
        j = self.pos + 2
        line = self.line
        while j < len(line) and line[j] not in _WS:
            j += 1
        label = line[self.pos + 2:j]
        if not label:
            self.fail("empty blank node label")
        self.pos = j
        return RdfTerm(BLANK, label)

    def end_of_statement(self):
        self.skip_ws()
        if self.at_end() or self.line[self.pos] != ".":
            self.fail("expected final '.'")
        self.pos += 1
        self.skip_ws()
        if not self.at_end():
            self.fail("trailing content after '.'")


def parse_line(line: str, lineno: int = 1) -> RdfStatement | None:
    """Parse one line; returns None for blank and comment lines."""
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    scanner = _LineScanner(line.rstrip("\n\r"), lineno)
    subject = scanner.term()
    if subject.kind == LITERAL:
        scanner.fail("subject cannot be a literal")
    predicate = scanner.term()
    if predicate.kind != IRI:
        scanner.fail("predicate must be an IRI")
    obj = scanner.term()
    scanner.end_of_statement()
    return RdfStatement(subject, predicate, obj)


def parse_ntriples(source: Iterable[str] | TextIO, lenient: bool = False,
                   errors: list[NTriplesParseError] | None = None) -> Iterator[RdfStatement]:
    """Yield one statement per non-blank, non-comment line.

    strict (default): the first malformed line raises NTriplesParseError.
    lenient: malformed lines are skipped; pass ``errors`` to collect them
    (their count is the skip count).
    """
    for lineno, line in enumerate(source, start=1):
        try:
            statement = parse_line(line, lineno)
        except NTriplesParseError as exc:
            if not lenient:
                raise
            if errors is not None:
                errors.append(exc)
            continue
        if statement is not None:
            yield statement


def parse_ntriples_text(text: str, lenient: bool = False,
                        errors: list[NTriplesParseError] | None = None) -> list[RdfStatement]:
    # split on newlines only: exotic line separators (U+2028, U+001E, ...)
    # may occur raw inside terms and must not break statements apart
    return list(parse_ntriples(text.split("\n"), lenient=lenient, errors=errors))


_ESCAPE = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _escape_literal(value: str) -> str:
    return "".join(_ESCAPE.get(c, c) for c in value)


def _iri_text_escaped(value: str) -> str:
    # a raw backslash would be re-read as an escape introducer
    return "<" + value.replace("\\", "\\u005C") + ">"


def _term_text(term: RdfTerm) -> str:
    if term.kind == IRI:
        return _iri_text_escaped(term.value)
    if term.kind == BLANK:
        return f"_:{term.value}"
    text = f'"{_escape_literal(term.value)}"'
    if term.datatype is not None:
        text += "^^" + _iri_text_escaped(term.datatype)
    elif term.lang is not None:
        text += f"@{term.lang}"
    return text


def serialize_statement(statement: RdfStatement) -> str:
    return (f"{_term_text(statement.subject)} {_term_text(statement.predicate)} "
            f"{_term_text(statement.object)} .")


def serialize_ntriples(statements: Iterable[RdfStatement]) -> str:
    """One statement per line; parse(serialize(S)) == S for any valid S."""
    lines = [serialize_statement(s) for s in statements]
    return "\n".join(lines) + ("\n" if lines else "")
