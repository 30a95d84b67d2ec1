"""Trace files: one request per line, ``seq subject object operation``.

Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import os
from collections.abc import Iterable

from datawalls.checkpoint import AccessRequest
from datawalls.errors import ParseError
from datawalls.store._io import read_text, write_atomic


def parse_request(line: str, lineno: int = 1) -> AccessRequest:
    fields = line.split()
    if len(fields) != 4:
        raise ParseError(f"expected 'seq subject object op', got {len(fields)} fields", lineno, 1)
    try:
        seq = int(fields[0])
    except ValueError:
        raise ParseError(f"sequence number {fields[0]!r} is not an integer", lineno, 1) from None
    return AccessRequest(seq, fields[1], fields[2], fields[3].lower())


def parse_trace(text: str) -> list[AccessRequest]:
    out: list[AccessRequest] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        req = parse_request(line, lineno)
        if out and req.seq <= out[-1].seq:
            raise ParseError(f"sequence number {req.seq} is not increasing", lineno, 1)
        out.append(req)
    return out


def render_trace(trace: Iterable[AccessRequest]) -> str:
    return "".join(f"{r}\n" for r in trace)


def read_trace(path: str | os.PathLike[str]) -> list[AccessRequest]:
    return parse_trace(read_text(path))


def write_trace(path: str | os.PathLike[str], trace: Iterable[AccessRequest]) -> None:
    write_atomic(path, render_trace(trace))
