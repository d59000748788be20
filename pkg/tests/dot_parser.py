"""Minimal DOT parser, used only by tests to check exported diagrams.

Supports the directed-graph subset the exporter emits: a digraph block
with node statements, edge statements (`a -> b`), attribute lists in
brackets, quoted identifiers with backslash escapes, and bare
`key=value` graph attributes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<string>"(?:[^"\\]|\\.)*")
      | (?P<arrow>->)
      | (?P<symbol>[{}\[\];=,])
      | (?P<ident>[A-Za-z0-9_.:+-]+)
    )""",
    re.VERBOSE,
)


class DotSyntaxError(ValueError):
    pass


def _tokenize(text: str) -> List[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            rest = text[pos:].strip()
            if not rest:
                break
            raise DotSyntaxError(f"unexpected input at {rest[:20]!r}")
        pos = match.end()
        token = match.group().strip()
        if token:
            tokens.append(token)
    return tokens


def _unquote(token: str) -> str:
    if token.startswith('"'):
        body = token[1:-1]
        return body.replace('\\"', '"').replace("\\n", "\n").replace("\\\\", "\\")
    return token


@dataclass
class DotGraph:
    name: str
    nodes: Dict[str, Dict[str, str]] = field(default_factory=dict)
    edges: List[Tuple[str, str, Dict[str, str]]] = field(default_factory=list)
    attrs: Dict[str, str] = field(default_factory=dict)


def parse_dot(text: str) -> DotGraph:
    tokens = _tokenize(text)
    pos = 0

    def expect(value: str) -> None:
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] != value:
            got = tokens[pos] if pos < len(tokens) else "<eof>"
            raise DotSyntaxError(f"expected {value!r}, got {got!r}")
        pos += 1

    def take() -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise DotSyntaxError("unexpected end of input")
        token = tokens[pos]
        pos += 1
        return token

    def attr_list() -> Dict[str, str]:
        nonlocal pos
        attrs: Dict[str, str] = {}
        if pos < len(tokens) and tokens[pos] == "[":
            pos += 1
            while tokens[pos] != "]":
                key = _unquote(take())
                expect("=")
                attrs[key] = _unquote(take())
                if tokens[pos] == ",":
                    pos += 1
            pos += 1
        return attrs

    expect("digraph")
    graph = DotGraph(name=_unquote(take()))
    expect("{")
    while tokens[pos] != "}":
        first = _unquote(take())
        if pos < len(tokens) and tokens[pos] == "=":
            pos += 1
            graph.attrs[first] = _unquote(take())
        elif pos < len(tokens) and tokens[pos] == "->":
            pos += 1
            dst = _unquote(take())
            attrs = attr_list()
            graph.edges.append((first, dst, attrs))
            graph.nodes.setdefault(first, {})
            graph.nodes.setdefault(dst, {})
        else:
            attrs = attr_list()
            if first in ("node", "edge", "graph"):
                graph.attrs[first] = str(attrs)
            else:
                graph.nodes.setdefault(first, {}).update(attrs)
        if pos < len(tokens) and tokens[pos] == ";":
            pos += 1
    expect("}")
    if pos != len(tokens):
        raise DotSyntaxError("trailing tokens after closing brace")
    return graph
