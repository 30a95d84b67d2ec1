"""Append-only audit log.

One record per line, tab-separated::

    timestamp version seq subject object op outcome reason pre_subject pre_object post_subject post_object

Walls use the brace notation (``S1 {100, 011}``); ``-`` marks a missing wall.
A final line without its newline is a torn write and is reported, not parsed.
"""

from __future__ import annotations

import os
from collections.abc import Iterator
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from datawalls.checkpoint import AccessRequest, AuditRecord, Decision, Outcome, Reason
from datawalls.errors import ParseError, StorageFailure, WallError
from datawalls.walls import ObjectWall, SubjectWall

FIELDS = 12


def _wall(w) -> str:
    return "-" if w is None else str(w)


def render_record(record: AuditRecord) -> str:
    d = record.decision
    r = d.request
    return "\t".join(
        [
            record.timestamp.isoformat(),
            str(d.version),
            str(r.seq),
            r.subject,
            r.object,
            r.operation,
            d.outcome.value,
            d.reason.value,
            _wall(d.pre_subject),
            _wall(d.pre_object),
            _wall(d.post_subject),
            _wall(d.post_object),
        ]
    )


def parse_record(line: str, lineno: int = 1) -> AuditRecord:
    parts = line.split("\t")
    if len(parts) != FIELDS:
        raise ParseError(f"audit record has {len(parts)} fields, expected {FIELDS}", lineno, 1)
    ts, version, seq, subject, obj, op, outcome, reason, *walls = parts
    try:
        sws = [None if w == "-" else SubjectWall.parse(w) for w in (walls[0], walls[2])]
        ows = [None if w == "-" else ObjectWall.parse(w) for w in (walls[1], walls[3])]
        decision = Decision(
            AccessRequest(int(seq), subject, obj, op),
            Outcome(outcome),
            Reason(reason),
            int(version),
            sws[0],
            ows[0],
            sws[1],
            ows[1],
        )
        return AuditRecord(decision, datetime.fromisoformat(ts))
    except (ValueError, WallError) as exc:
        raise ParseError(f"bad audit record: {exc}", lineno, 1) from None


@dataclass(frozen=True)
class AuditScan:
    records: list[AuditRecord]
    truncated: bool
    valid_bytes: int


def scan_audit(data: bytes) -> AuditScan:
    """Parse every complete line; flag an unterminated tail."""
    records = []
    end = data.rfind(b"\n") + 1
    for lineno, raw in enumerate(data[:end].split(b"\n")[:-1], start=1):
        records.append(parse_record(raw.decode("utf-8"), lineno))
    return AuditScan(records, truncated=end < len(data), valid_bytes=end)


def read_audit(path: str | os.PathLike[str]) -> AuditScan:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        return AuditScan([], False, 0)
    except OSError as exc:
        raise StorageFailure(f"cannot read {path}: {exc}") from exc
    return scan_audit(data)


class AuditLog:
    """In-memory record list, optionally mirrored to an append-only file.

    Opening a file whose last line is torn raises :class:`StorageFailure`
    unless ``repair`` is set, in which case the torn tail is cut off.
    """

    def __init__(self, path: str | os.PathLike[str] | None = None, *, repair: bool = False):
        self.path = Path(path) if path is not None else None
        self.records: list[AuditRecord] = []
        self.repaired = False
        if self.path is not None and self.path.exists():
            scan = read_audit(self.path)
            if scan.truncated:
                if not repair:
                    raise StorageFailure(
                        f"{self.path}: torn final record after byte {scan.valid_bytes}"
                    )
                with open(self.path, "r+b") as fh:
                    fh.truncate(scan.valid_bytes)
                self.repaired = True
            self.records = scan.records
        elif self.path is not None:
            try:
                self.path.touch()
            except OSError as exc:
                raise StorageFailure(f"cannot create {self.path}: {exc}") from exc

    def append(self, record: AuditRecord) -> AuditLog:
        if self.path is not None:
            line = render_record(record) + "\n"
            try:
                with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                    fh.write(line)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageFailure(f"cannot append to {self.path}: {exc}") from exc
        self.records.append(record)
        return self

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[AuditRecord]:
        return iter(self.records)

    def decisions(self) -> list[Decision]:
        return [r.decision for r in self.records]


def append_audit(log: AuditLog, record: AuditRecord) -> AuditLog:
    return log.append(record)
