"""Roles, role classes, the conflict-of-interest relation and access rights.

A :class:`Policy` is an immutable value. Operations that change user
membership (:func:`assign_user`, :func:`switch_role`) return a new policy.

Conflicts are declared between role *classes*. A declared pair may also name
individual roles; such an endpoint is lifted to the class containing the role.
"""

from __future__ import annotations

import dataclasses
import itertools
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

from datawalls.errors import (
    ConflictingAssignment,
    ConflictingSwitch,
    UnknownObject,
    UnknownRole,
    UnknownUser,
)


class Operation(str, Enum):
    READ = "read"
    WRITE = "write"

    @classmethod
    def parse(cls, text: str) -> Operation:
        key = text.strip().lower()
        aliases = {"r": cls.READ, "w": cls.WRITE}
        if key in aliases:
            return aliases[key]
        return cls(key)

    def __str__(self) -> str:
        return self.value


class ObjectKind(str, Enum):
    ODW = "ODW"
    DDW = "DDW"
    ADW = "ADW"
    GENERIC = "Generic"

    def __str__(self) -> str:
        return self.value


WAREHOUSE_KINDS = (ObjectKind.ODW, ObjectKind.DDW, ObjectKind.ADW)
ALL_OPERATIONS = frozenset(Operation)


@dataclass(frozen=True)
class Role:
    id: str
    domain: str
    users: frozenset[str] = frozenset()
    operations: frozenset[Operation] = ALL_OPERATIONS


@dataclass(frozen=True)
class User:
    id: str
    active_role: str


@dataclass(frozen=True)
class DataObject:
    """A protected object: a warehouse, a file, or any set of records."""

    id: str
    kind: ObjectKind
    domain: str
    owning_class: str
    entities: frozenset[str] = frozenset()


@dataclass(frozen=True)
class RoleClass:
    id: str
    index: int
    roles: frozenset[str] = frozenset()


@dataclass(frozen=True)
class ConflictRelation:
    """Symmetric relation stored as declared, unordered pairs."""

    pairs: tuple[tuple[str, str], ...] = ()

    @cached_property
    def _lookup(self) -> frozenset[frozenset[str]]:
        return frozenset(frozenset(p) for p in self.pairs)

    def conflicts(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self._lookup

    def __contains__(self, pair: object) -> bool:
        a, b = pair  # type: ignore[misc]
        return self.conflicts(a, b)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class AccessRights:
    """Rights matrix keyed by ``(object, role)``. Absent entries mean no rights."""

    entries: Mapping[tuple[str, str], frozenset[Operation]] = field(default_factory=dict)

    def get(self, obj: str, role: str) -> frozenset[Operation]:
        return self.entries.get((obj, role), frozenset())


@dataclass(frozen=True)
class Policy:
    domains: tuple[str, ...]
    roles: Mapping[str, Role]
    objects: Mapping[str, DataObject]
    classes: Mapping[str, RoleClass]
    conflicts: ConflictRelation = ConflictRelation()
    rights: AccessRights = AccessRights()

    # -- derived views (computed once per immutable policy) ---------------

    @cached_property
    def users(self) -> dict[str, User]:
        """Users derived from role membership; the first declaring role wins."""
        out: dict[str, User] = {}
        for role in self.roles.values():
            for uid in sorted(role.users):
                out.setdefault(uid, User(uid, role.id))
        return out

    @cached_property
    def class_of_role(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for rc in self.classes.values():
            for rid in sorted(rc.roles):
                out.setdefault(rid, rc.id)
        return out

    @cached_property
    def class_order(self) -> tuple[str, ...]:
        """Class ids sorted by bit index; position ``j-1`` holds the class with index ``j``."""
        return tuple(sorted(self.classes, key=lambda c: (self.classes[c].index, c)))

    @property
    def width(self) -> int:
        return len(self.classes)

    def resolve_class(self, ident: str) -> str | None:
        if ident in self.classes:
            return ident
        return self.class_of_role.get(ident)

    @cached_property
    def class_conflicts(self) -> frozenset[frozenset[str]]:
        """Conflicting class pairs after lifting role endpoints to their classes."""
        out = set()
        for a, b in self.conflicts.pairs:
            ca, cb = self.resolve_class(a), self.resolve_class(b)
            if ca is not None and cb is not None and ca != cb:
                out.add(frozenset((ca, cb)))
        return frozenset(out)

    def classes_conflict(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.class_conflicts

    def conflicting_classes(self, cls: str) -> frozenset[str]:
        return frozenset(c for c in self.classes if self.classes_conflict(cls, c))

    def roles_conflict(self, a: str, b: str) -> bool:
        """Whether users of role ``a`` are walled off from role ``b``.

        Roles in the same class always cooperate. Otherwise a conflict comes
        either from the classes or from a pair naming both roles directly.
        """
        if a == b:
            return False
        ca, cb = self.class_of_role.get(a), self.class_of_role.get(b)
        if ca is not None and ca == cb:
            return False
        if ca is not None and cb is not None and self.classes_conflict(ca, cb):
            return True
        return self.conflicts.conflicts(a, b)

    def role(self, rid: str) -> Role:
        try:
            return self.roles[rid]
        except KeyError:
            raise UnknownRole(rid) from None

    def user(self, uid: str) -> User:
        try:
            return self.users[uid]
        except KeyError:
            raise UnknownUser(uid) from None

    def object(self, oid: str) -> DataObject:
        try:
            return self.objects[oid]
        except KeyError:
            raise UnknownObject(oid) from None

    def with_objects(self, objects: Iterable[DataObject]) -> Policy:
        merged = dict(self.objects)
        for obj in objects:
            merged[obj.id] = obj
        return dataclasses.replace(self, objects=merged)


# -- validation ------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()
    info: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> list[str]:
        return [v.kind for v in self.violations]

    def render(self) -> str:
        lines = [f"violations: {len(self.violations)}"]
        lines += [f"  {v}" for v in self.violations]
        lines += [f"  note: {n}" for n in self.info]
        return "\n".join(lines)


SELF_CONFLICT = "self-conflict"
INTRA_CLASS_CONFLICT = "intra-class-conflict"
DANGLING_REFERENCE = "dangling-reference"
CLASS_INDEX = "class-index"
ROLE_IN_MULTIPLE_CLASSES = "role-in-multiple-classes"
DUPLICATE_WAREHOUSE = "duplicate-warehouse-kind"
CONFLICTING_MEMBERSHIP = "conflicting-membership"
MULTIPLE_ROLES = "multiple-roles"
RIGHTS_EXCEED_OPERATIONS = "rights-exceed-operations"


def validate_policy(policy: Policy) -> ValidationReport:
    """Check the structural properties every wall computation relies on.

    Never raises. Non-transitive conflict chains are reported as notes only.
    """
    out: list[Violation] = []
    domains = set(policy.domains)

    def dangling(what: str, ref: str) -> None:
        out.append(Violation(DANGLING_REFERENCE, f"{what} -> {ref!r}"))

    for role in policy.roles.values():
        if role.domain not in domains:
            dangling(f"role {role.id} domain", role.domain)

    seen_in_class: dict[str, str] = {}
    for rc in policy.classes.values():
        for rid in sorted(rc.roles):
            if rid not in policy.roles:
                dangling(f"class {rc.id} member", rid)
            elif rid in seen_in_class:
                out.append(
                    Violation(
                        ROLE_IN_MULTIPLE_CLASSES,
                        f"{rid} in {seen_in_class[rid]} and {rc.id}",
                    )
                )
            else:
                seen_in_class[rid] = rc.id

    indices = sorted(rc.index for rc in policy.classes.values())
    if indices != list(range(1, len(indices) + 1)):
        out.append(Violation(CLASS_INDEX, f"indices {indices} are not 1..{len(indices)}"))

    warehouse_seen: set[tuple[str, ObjectKind]] = set()
    for obj in policy.objects.values():
        if obj.domain not in domains:
            dangling(f"object {obj.id} domain", obj.domain)
        if obj.owning_class not in policy.classes:
            dangling(f"object {obj.id} owner", obj.owning_class)
        if obj.kind in WAREHOUSE_KINDS:
            key = (obj.domain, obj.kind)
            if key in warehouse_seen:
                out.append(
                    Violation(DUPLICATE_WAREHOUSE, f"{obj.kind} repeated in domain {obj.domain}")
                )
            warehouse_seen.add(key)

    for a, b in policy.conflicts.pairs:
        missing = [x for x in (a, b) if x not in policy.classes and x not in policy.roles]
        if missing:
            for x in dict.fromkeys(missing):
                dangling(f"conflict ({a}, {b})", x)
        elif a == b:
            out.append(Violation(SELF_CONFLICT, f"{a} conflicts with itself"))
        else:
            ca, cb = policy.resolve_class(a), policy.resolve_class(b)
            if ca is not None and ca == cb:
                out.append(
                    Violation(INTRA_CLASS_CONFLICT, f"{a} and {b} are both in class {ca}")
                )

    for (oid, rid), ops in policy.rights.entries.items():
        if oid not in policy.objects:
            dangling("rights entry object", oid)
        if rid not in policy.roles:
            dangling("rights entry role", rid)
        elif not ops <= policy.roles[rid].operations:
            extra = sorted(str(o) for o in ops - policy.roles[rid].operations)
            out.append(
                Violation(RIGHTS_EXCEED_OPERATIONS, f"{rid} on {oid}: {', '.join(extra)}")
            )

    memberships: dict[str, list[str]] = {}
    for role in policy.roles.values():
        for uid in role.users:
            memberships.setdefault(uid, []).append(role.id)
    for uid in sorted(memberships):
        held = memberships[uid]
        if len(held) < 2:
            continue
        clash = [(a, b) for a, b in itertools.combinations(held, 2) if policy.roles_conflict(a, b)]
        if clash:
            a, b = clash[0]
            out.append(Violation(CONFLICTING_MEMBERSHIP, f"{uid} in conflicting roles {a}, {b}"))
        else:
            out.append(Violation(MULTIPLE_ROLES, f"{uid} holds {', '.join(held)}"))

    return ValidationReport(tuple(out), tuple(_transitivity_notes(policy)))


def _transitivity_notes(policy: Policy) -> list[str]:
    notes = []
    order = policy.class_order
    for a, c in itertools.combinations(order, 2):
        if policy.classes_conflict(a, c):
            continue
        via = [b for b in order if policy.classes_conflict(a, b) and policy.classes_conflict(b, c)]
        if via:
            notes.append(f"{a} and {c} both conflict with {', '.join(via)} but not with each other")
    return notes


# -- membership changes ----------------------------------------------------


def _move_user(policy: Policy, uid: str, role_id: str) -> Policy:
    roles = {}
    for rid, role in policy.roles.items():
        users = role.users - {uid}
        if rid == role_id:
            users = users | {uid}
        roles[rid] = role if users == role.users else dataclasses.replace(role, users=users)
    return dataclasses.replace(policy, roles=roles)


def assign_user(policy: Policy, user: str, role: str) -> Policy:
    """Make ``role`` the user's active role, creating the user if needed.

    Raises :class:`ConflictingAssignment` if the user currently holds a role
    that is walled off from ``role``.
    """
    policy.role(role)
    current = policy.users.get(user)
    if current is not None and policy.roles_conflict(current.active_role, role):
        raise ConflictingAssignment(
            f"{user} holds {current.active_role}, which conflicts with {role}"
        )
    return _move_user(policy, user, role)


def switch_role(policy: Policy, user: str, to: str) -> Policy:
    """Move an existing user to a cooperative role."""
    policy.role(to)
    current = policy.user(user)
    if policy.roles_conflict(current.active_role, to):
        raise ConflictingSwitch(f"{current.active_role} and {to} are in conflict")
    return _move_user(policy, user, to)


def lookup_rights(policy: Policy, obj: str, role: str) -> frozenset[Operation]:
    policy.object(obj)
    policy.role(role)
    return policy.rights.get(obj, role)
