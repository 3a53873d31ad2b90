"""Minimal DOT writing and parsing.

The writer emits plain undirected ``graph`` documents with attribute lists;
the parser understands exactly that subset and exists so tests can round-trip
every emitted file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import InputFormatError

_ID_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def quote(ident: str) -> str:
    if _ID_RE.match(ident):
        return ident
    return '"' + ident.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _attr_list(attrs: dict[str, str]) -> str:
    if not attrs:
        return ""
    inner = ", ".join(f"{quote(k)}={quote(str(v))}" for k, v in attrs.items())
    return f" [{inner}]"


@dataclass
class DotGraph:
    name: str = "G"
    nodes: list[tuple[str, dict[str, str]]] = field(default_factory=list)
    edges: list[tuple[str, str, dict[str, str]]] = field(default_factory=list)

    def add_node(self, ident: str, **attrs: str) -> None:
        self.nodes.append((ident, {k: str(v) for k, v in attrs.items()}))

    def add_edge(self, a: str, b: str, **attrs: str) -> None:
        self.edges.append((a, b, {k: str(v) for k, v in attrs.items()}))

    def to_text(self) -> str:
        lines = [f"graph {quote(self.name)} {{"]
        for ident, attrs in self.nodes:
            lines.append(f"  {quote(ident)}{_attr_list(attrs)};")
        for a, b, attrs in self.edges:
            lines.append(f"  {quote(a)} -- {quote(b)}{_attr_list(attrs)};")
        lines.append("}")
        return "\n".join(lines) + "\n"


_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<quoted>"(?:[^"\\]|\\.)*")
      | (?P<id>[A-Za-z_][A-Za-z0-9_]*|-?\d+(?:\.\d+)?)
      | (?P<punct>--|[{}\[\];=,])
    )""",
    re.VERBOSE,
)


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if not match:
            if text[pos:].strip() == "":
                break
            raise InputFormatError(f"DOT: unexpected input at offset {pos}: {text[pos:pos + 20]!r}")
        pos = match.end()
        tok = match.group("quoted") or match.group("id") or match.group("punct")
        if tok is not None:
            tokens.append(tok)
    return tokens


def _unquote(tok: str) -> str:
    if tok.startswith('"'):
        return tok[1:-1].replace('\\"', '"').replace("\\\\", "\\")
    return tok


def parse(text: str) -> DotGraph:
    """Parse the subset of DOT emitted by :class:`DotGraph`."""
    tokens = _tokenize(text)
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise InputFormatError("DOT: unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if expected is not None and tok != expected:
            raise InputFormatError(f"DOT: expected {expected!r}, got {tok!r}")
        return tok

    take("graph")
    name = "G"
    if peek() != "{":
        name = _unquote(take())
    take("{")
    graph = DotGraph(name=name)
    while peek() != "}":
        ident = _unquote(take())
        if peek() == "--":
            take("--")
            other = _unquote(take())
            attrs = _parse_attrs(tokens, lambda: pos, take, peek)
            graph.edges.append((ident, other, attrs))
        else:
            attrs = _parse_attrs(tokens, lambda: pos, take, peek)
            graph.nodes.append((ident, attrs))
        if peek() == ";":
            take(";")
    take("}")
    return graph


def _parse_attrs(tokens, posfn, take, peek) -> dict[str, str]:
    attrs: dict[str, str] = {}
    if peek() != "[":
        return attrs
    take("[")
    while peek() != "]":
        key = _unquote(take())
        take("=")
        attrs[key] = _unquote(take())
        if peek() == ",":
            take(",")
    take("]")
    return attrs
