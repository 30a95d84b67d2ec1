"""Line protocol for the long-running decision service.

Request:  ``seq subject object op``
Response: ``seq GRANTED|DENIED reason``, or ``ERR message`` for a malformed line.

Connections are handled on threads, but every decision goes through one
:class:`~datawalls.checkpoint.Checkpoint`, so requests are applied one at a time.
"""

from __future__ import annotations

import socketserver
from typing import IO

from datawalls.checkpoint import Checkpoint
from datawalls.errors import ParseError
from datawalls.store.traces import parse_request


def handle_line(checkpoint: Checkpoint, line: str) -> str | None:
    line = line.strip()
    if not line or line.startswith("#"):
        return None
    try:
        req = parse_request(line)
    except ParseError as exc:
        return f"ERR {exc.message}"
    return checkpoint.submit(req).wire()


def serve_stream(checkpoint: Checkpoint, rfile: IO[str], wfile: IO[str]) -> int:
    answered = 0
    for line in rfile:
        reply = handle_line(checkpoint, line)
        if reply is not None:
            wfile.write(reply + "\n")
            wfile.flush()
            answered += 1
    return answered


class DecisionServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address: tuple[str, int], checkpoint: Checkpoint):
        self.checkpoint = checkpoint
        super().__init__(address, _Handler)


class _Handler(socketserver.StreamRequestHandler):
    server: DecisionServer

    def handle(self) -> None:
        for raw in self.rfile:
            reply = handle_line(self.server.checkpoint, raw.decode("utf-8", "replace"))
            if reply is not None:
                self.wfile.write((reply + "\n").encode())
                self.wfile.flush()
