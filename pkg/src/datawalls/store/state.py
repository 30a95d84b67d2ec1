"""Runtime engine state and its textual snapshot.

Snapshot layout::

    version 0
    classes DMC DAC DSC
    [objects]
    ODW {100, 011}
    [subjects]
    S1 {100, 011}
"""

from __future__ import annotations

import dataclasses
import os
from collections.abc import Mapping
from dataclasses import dataclass

from datawalls.errors import ParseError, ValidationFailed, WallError
from datawalls.policy import Policy, assign_user, switch_role, validate_policy
from datawalls.store._io import read_text, write_atomic
from datawalls.walls import (
    ObjectWall,
    SubjectWall,
    init_object_wall,
    init_subject_wall,
)


@dataclass(frozen=True)
class EngineState:
    """Policy plus the current walls. ``version`` grows on every mutation."""

    policy: Policy
    subject_walls: Mapping[str, SubjectWall]
    object_walls: Mapping[str, ObjectWall]
    version: int = 0

    @classmethod
    def initial(cls, policy: Policy, *, validate: bool = True) -> EngineState:
        if validate:
            report = validate_policy(policy)
            if not report.ok:
                raise ValidationFailed(report)
        return cls(
            policy,
            {uid: init_subject_wall(policy, uid) for uid in policy.users},
            {oid: init_object_wall(policy, oid) for oid in policy.objects},
        )

    def with_walls(
        self, subject: SubjectWall | None = None, obj: ObjectWall | None = None
    ) -> EngineState:
        sw, ow = self.subject_walls, self.object_walls
        if subject is not None:
            sw = {**sw, subject.subject: subject}
        if obj is not None:
            ow = {**ow, obj.object: obj}
        return dataclasses.replace(
            self, subject_walls=sw, object_walls=ow, version=self.version + 1
        )

    def _reseat(self, policy: Policy, user: str) -> EngineState:
        sw = {**self.subject_walls, user: init_subject_wall(policy, user)}
        return dataclasses.replace(
            self, policy=policy, subject_walls=sw, version=self.version + 1
        )

    def assign_user(self, user: str, role: str) -> EngineState:
        """Assign a role and seed (or reseed) the user's subject wall."""
        return self._reseat(assign_user(self.policy, user, role), user)

    def switch_role(self, user: str, to: str) -> EngineState:
        """Switch to a cooperative role. The subject wall restarts from the new class."""
        return self._reseat(switch_role(self.policy, user, to), user)

    def same_walls(self, other: EngineState) -> bool:
        return (
            dict(self.subject_walls) == dict(other.subject_walls)
            and dict(self.object_walls) == dict(other.object_walls)
        )


def snapshot_state(state: EngineState) -> str:
    policy = state.policy
    lines = [f"version {state.version}", "classes " + " ".join(policy.class_order), "[objects]"]
    lines += [str(state.object_walls[o]) for o in policy.objects]
    lines.append("[subjects]")
    lines += [str(state.subject_walls[u]) for u in policy.users]
    return "\n".join(lines) + "\n"


def load_snapshot(text: str, policy: Policy) -> EngineState:
    """Rebuild an :class:`EngineState` from :func:`snapshot_state` output."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 4:
        raise ParseError("snapshot too short", len(lines) or 1, 1)

    def expect(i: int, prefix: str) -> str:
        if not lines[i].startswith(prefix):
            raise ParseError(f"expected {prefix.strip()!r}", i + 1, 1)
        return lines[i][len(prefix):]

    try:
        version = int(expect(0, "version "))
    except ValueError:
        raise ParseError("version must be an integer", 1, 9) from None
    classes = tuple(expect(1, "classes ").split())
    if classes != policy.class_order:
        raise ParseError(f"classes {classes} do not match policy {policy.class_order}", 2, 9)
    expect(2, "[objects]")

    objects: dict[str, ObjectWall] = {}
    subjects: dict[str, SubjectWall] = {}
    section: dict = objects
    for i, line in enumerate(lines[3:], start=4):
        if line == "[subjects]" and section is objects:
            section = subjects
            continue
        try:
            wall = ObjectWall.parse(line) if section is objects else SubjectWall.parse(line)
        except (ValueError, WallError) as exc:
            raise ParseError(str(exc), i, 1) from None
        if wall.width != policy.width:
            raise ParseError(f"wall width {wall.width} != {policy.width}", i, 1)
        name = wall.object if section is objects else wall.subject
        if name in section:
            raise ParseError(f"duplicate wall {name}", i, 1)
        section[name] = wall
    if section is not subjects:
        raise ParseError("missing [subjects] section", len(lines), 1)
    if set(objects) != set(policy.objects) or set(subjects) != set(policy.users):
        raise ParseError("snapshot walls do not match the policy's objects and users", 3, 1)
    return EngineState(policy, subjects, objects, version)


def read_snapshot(path: str | os.PathLike[str], policy: Policy) -> EngineState:
    return load_snapshot(read_text(path), policy)


def write_snapshot(path: str | os.PathLike[str], state: EngineState) -> None:
    write_atomic(path, snapshot_state(state))
