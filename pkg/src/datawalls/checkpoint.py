"""The security checkpoint: authorize a request, then apply its wall updates.

:func:`authorize` is pure. :func:`apply` is the only place wall state moves,
and it refuses decisions computed against an older state version.
"""

from __future__ import annotations

import threading
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Protocol

from datawalls.errors import StaleDecision
from datawalls.policy import Operation
from datawalls.store.state import EngineState
from datawalls.walls import (
    ObjectWall,
    SubjectWall,
    check_access,
    update_on_read,
    update_on_write,
)


class Outcome(str, Enum):
    GRANTED = "Granted"
    DENIED = "Denied"

    def __str__(self) -> str:
        return self.value


class Reason(str, Enum):
    OK = "Ok"
    WALL_CONFLICT = "WallConflict"
    NO_RIGHT = "NoRight"
    UNKNOWN_PRINCIPAL = "UnknownPrincipal"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class AccessRequest:
    seq: int
    subject: str
    object: str
    operation: str

    def __str__(self) -> str:
        return f"{self.seq} {self.subject} {self.object} {self.operation}"


@dataclass(frozen=True, slots=True)
class Decision:
    request: AccessRequest
    outcome: Outcome
    reason: Reason
    version: int
    pre_subject: SubjectWall | None
    pre_object: ObjectWall | None
    post_subject: SubjectWall | None
    post_object: ObjectWall | None

    @property
    def granted(self) -> bool:
        return self.outcome is Outcome.GRANTED

    def wire(self) -> str:
        """Service-protocol response line: ``seq GRANTED|DENIED reason``."""
        return f"{self.request.seq} {self.outcome.value.upper()} {self.reason.value}"

    def summary(self) -> str:
        return "Granted" if self.granted else f"Denied ({self.reason.value})"


@dataclass(frozen=True, slots=True)
class AuditRecord:
    decision: Decision
    timestamp: datetime


class AuditSink(Protocol):
    def append(self, record: AuditRecord) -> object: ...


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def _deny(state: EngineState, req: AccessRequest, reason: Reason, sw, ow) -> Decision:
    return Decision(req, Outcome.DENIED, reason, state.version, sw, ow, sw, ow)


def authorize(state: EngineState, req: AccessRequest) -> Decision:
    """Decide a request without touching the state.

    The wall condition is checked before the rights matrix, so the reason of
    a denial names the first gate that failed.
    """
    sw = state.subject_walls.get(req.subject)
    ow = state.object_walls.get(req.object)
    if sw is None or ow is None:
        return _deny(state, req, Reason.UNKNOWN_PRINCIPAL, sw, ow)
    if not check_access(sw, ow):
        return _deny(state, req, Reason.WALL_CONFLICT, sw, ow)
    try:
        op = Operation.parse(req.operation)
    except ValueError:
        return _deny(state, req, Reason.NO_RIGHT, sw, ow)
    role = state.policy.users[req.subject].active_role
    if op not in state.policy.rights.get(req.object, role):
        return _deny(state, req, Reason.NO_RIGHT, sw, ow)
    if op is Operation.READ:
        post_sw, post_ow = update_on_read(sw, ow), ow
    else:
        post_sw, post_ow = sw, update_on_write(ow, sw)
    return Decision(req, Outcome.GRANTED, Reason.OK, state.version, sw, ow, post_sw, post_ow)


def apply(
    state: EngineState,
    decision: Decision,
    audit: AuditSink | None = None,
    clock: Callable[[], datetime] = utcnow,
) -> EngineState:
    """Commit a decision. Denials leave the walls alone but are still audited."""
    if decision.version != state.version:
        raise StaleDecision(
            f"decision for request {decision.request.seq} was made at version "
            f"{decision.version}, state is at {state.version}"
        )
    if audit is not None:
        audit.append(AuditRecord(decision, clock()))
    if not decision.granted:
        return state
    return state.with_walls(decision.post_subject, decision.post_object)


def replay(
    state: EngineState,
    trace: Iterable[AccessRequest],
    audit: AuditSink | None = None,
    clock: Callable[[], datetime] = utcnow,
) -> tuple[list[Decision], EngineState]:
    decisions = []
    last = None
    for req in trace:
        if last is not None and req.seq <= last:
            raise ValueError(f"sequence number {req.seq} does not exceed {last}")
        last = req.seq
        decision = authorize(state, req)
        state = apply(state, decision, audit, clock)
        decisions.append(decision)
    return decisions, state


class Checkpoint:
    """Single-writer wrapper around an :class:`EngineState`.

    ``submit`` serializes authorize-then-apply; readers may take ``state`` at
    any time and get an immutable snapshot.
    """

    def __init__(self, state: EngineState, audit: AuditSink | None = None):
        self._state = state
        self._audit = audit
        self._lock = threading.Lock()

    @property
    def state(self) -> EngineState:
        return self._state

    def submit(self, req: AccessRequest) -> Decision:
        with self._lock:
            decision = authorize(self._state, req)
            self._state = apply(self._state, decision, self._audit)
            return decision
