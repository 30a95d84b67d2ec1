"""YAML node walking with positioned errors."""

from __future__ import annotations

import re
from collections.abc import Callable
from typing import TypeVar

import yaml
from yaml.nodes import MappingNode, Node, ScalarNode, SequenceNode

from datawalls.errors import ParseError

IDENT = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_.\-]*$")
T = TypeVar("T")


def node_error(node: Node, message: str) -> ParseError:
    mark = node.start_mark
    return ParseError(message, mark.line + 1, mark.column + 1)


def compose_node(text: str) -> Node:
    if not text.strip():
        raise ParseError("empty document", 1, 1)
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line, col = (mark.line + 1, mark.column + 1) if mark else (None, None)
        raise ParseError(str(exc.problem or exc), line, col) from None
    if node is None:
        raise ParseError("empty document", 1, 1)
    return node


def mapping(
    node: Node, required: tuple[str, ...], optional: tuple[str, ...] | None = ()
) -> dict[str, Node]:
    """Keys of a mapping node. ``optional=None`` accepts any extra key."""
    if not isinstance(node, MappingNode):
        raise node_error(node, "expected a mapping")
    out: dict[str, Node] = {}
    for key, value in node.value:
        if not isinstance(key, ScalarNode):
            raise node_error(key, "mapping keys must be plain strings")
        if key.value in out:
            raise node_error(key, f"duplicate key {key.value!r}")
        if optional is not None and key.value not in required and key.value not in optional:
            raise node_error(key, f"unknown key {key.value!r}")
        out[key.value] = value
    for name in required:
        if name not in out:
            raise node_error(node, f"missing key {name!r}")
    return out


def sequence(node: Node) -> list[Node]:
    if isinstance(node, ScalarNode) and node.value == "" and node.tag.endswith(":null"):
        return []
    if not isinstance(node, SequenceNode):
        raise node_error(node, "expected a list")
    return list(node.value)


def scalar(node: Node) -> str:
    if not isinstance(node, ScalarNode):
        raise node_error(node, "expected a scalar")
    return node.value


def ident(node: Node) -> str:
    value = scalar(node)
    if not IDENT.match(value):
        raise node_error(node, f"invalid identifier {value!r}")
    return value


def convert(node: Node, fn: Callable[[str], T], what: str) -> T:
    try:
        return fn(scalar(node))
    except ValueError:
        raise node_error(node, f"invalid {what} {node.value!r}") from None


def ident_set(node: Node) -> frozenset[str]:
    items = [ident(n) for n in sequence(node)]
    seen: set[str] = set()
    for n, v in zip(sequence(node), items):
        if v in seen:
            raise node_error(n, f"duplicate entry {v!r}")
        seen.add(v)
    return frozenset(items)


def ensure_unique(items: list[tuple[Node, str]], what: str) -> None:
    seen: set[str] = set()
    for node, key in items:
        if key in seen:
            raise node_error(node, f"duplicate {what} {key!r}")
        seen.add(key)
