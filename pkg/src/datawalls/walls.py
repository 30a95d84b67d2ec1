"""Binary subject and object walls.

A wall side is a fixed-width :class:`BitVector` with one bit per role class.
Bit ``j`` (1-based) belongs to the class with index ``j`` and is printed
``j``-th from the left, so ``100`` means "the class with index 1".
"""

from __future__ import annotations

import re
from collections.abc import Iterable
from dataclasses import dataclass

from datawalls.errors import DisjointnessBroken, UnknownObject, WidthMismatch
from datawalls.policy import Policy


@dataclass(frozen=True, slots=True)
class BitVector:
    width: int
    bits: int = 0

    def __post_init__(self) -> None:
        if self.width < 0 or self.bits < 0 or self.bits >> self.width:
            raise ValueError(f"bits {self.bits:b} do not fit width {self.width}")

    @classmethod
    def zeros(cls, width: int) -> BitVector:
        return cls(width, 0)

    @classmethod
    def ones(cls, width: int) -> BitVector:
        return cls(width, (1 << width) - 1)

    @classmethod
    def from_indices(cls, width: int, indices: Iterable[int]) -> BitVector:
        """Build from 1-based slot indices."""
        bits = 0
        for j in indices:
            if not 1 <= j <= width:
                raise ValueError(f"slot {j} outside 1..{width}")
            bits |= 1 << (width - j)
        return cls(width, bits)

    @classmethod
    def parse(cls, text: str) -> BitVector:
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls(len(text), int(text, 2))

    def indices(self) -> frozenset[int]:
        return frozenset(j for j in range(1, self.width + 1) if self.bits >> (self.width - j) & 1)

    def __getitem__(self, j: int) -> bool:
        if not 1 <= j <= self.width:
            raise IndexError(j)
        return bool(self.bits >> (self.width - j) & 1)

    def set(self, j: int) -> BitVector:
        """Return a copy with slot ``j`` raised to 1. Bits are never cleared."""
        return self | BitVector.from_indices(self.width, (j,))

    def _check(self, other: BitVector) -> None:
        if self.width != other.width:
            raise WidthMismatch(f"width {self.width} vs {other.width}")

    def __and__(self, other: BitVector) -> BitVector:
        self._check(other)
        return BitVector(self.width, self.bits & other.bits)

    def __or__(self, other: BitVector) -> BitVector:
        self._check(other)
        return BitVector(self.width, self.bits | other.bits)

    def is_zero(self) -> bool:
        return self.bits == 0

    def covers(self, other: BitVector) -> bool:
        """True when every set bit of ``other`` is also set here."""
        self._check(other)
        return other.bits & ~self.bits == 0

    def __str__(self) -> str:
        return format(self.bits, f"0{self.width}b") if self.width else ""


def _render(name: str, a: BitVector, b: BitVector) -> str:
    return f"{name} {{{a}, {b}}}"


_WALL_RE = re.compile(r"^(\S+) \{([01]+), ([01]+)\}$")


def parse_wall_text(text: str) -> tuple[str, BitVector, BitVector]:
    """Parse ``"NAME {100, 011}"`` into its parts."""
    m = _WALL_RE.match(text.strip())
    if not m:
        raise ValueError(f"not a wall rendering: {text!r}")
    a, b = BitVector.parse(m.group(2)), BitVector.parse(m.group(3))
    if a.width != b.width:
        raise WidthMismatch(text)
    return m.group(1), a, b


@dataclass(frozen=True, slots=True)
class ObjectWall:
    object: str
    authorized: BitVector
    conflicting: BitVector

    def __post_init__(self) -> None:
        self.authorized._check(self.conflicting)
        if not (self.authorized & self.conflicting).is_zero():
            raise DisjointnessBroken(f"{self.object}: {self.authorized} & {self.conflicting}")

    @property
    def width(self) -> int:
        return self.authorized.width

    def __str__(self) -> str:
        return _render(self.object, self.authorized, self.conflicting)

    @classmethod
    def parse(cls, text: str) -> ObjectWall:
        return cls(*parse_wall_text(text))


@dataclass(frozen=True, slots=True)
class SubjectWall:
    subject: str
    granted: BitVector
    denied: BitVector

    def __post_init__(self) -> None:
        self.granted._check(self.denied)
        if not (self.granted & self.denied).is_zero():
            raise DisjointnessBroken(f"{self.subject}: {self.granted} & {self.denied}")

    @property
    def width(self) -> int:
        return self.granted.width

    def __str__(self) -> str:
        return _render(self.subject, self.granted, self.denied)

    @classmethod
    def parse(cls, text: str) -> SubjectWall:
        return cls(*parse_wall_text(text))


def _class_vectors(policy: Policy, cls: str) -> tuple[BitVector, BitVector]:
    n = policy.width
    own = BitVector.from_indices(n, (policy.classes[cls].index,))
    others = BitVector.from_indices(
        n, (policy.classes[c].index for c in policy.conflicting_classes(cls))
    )
    return own, others


def init_object_wall(policy: Policy, obj: str) -> ObjectWall:
    """Seed an object wall from its owning class and that class's conflicts."""
    if obj not in policy.objects:
        raise UnknownObject(obj)
    own, others = _class_vectors(policy, policy.objects[obj].owning_class)
    return ObjectWall(obj, own, others)


def init_subject_wall(policy: Policy, user: str) -> SubjectWall:
    """Seed a subject wall from the user's active role.

    Users whose role belongs to no class are denied every class.
    """
    role = policy.user(user).active_role
    cls = policy.class_of_role.get(role)
    if cls is None:
        n = policy.width
        return SubjectWall(user, BitVector.zeros(n), BitVector.ones(n))
    own, others = _class_vectors(policy, cls)
    return SubjectWall(user, own, others)


def check_access(sw: SubjectWall, ow: ObjectWall) -> bool:
    """The access condition: no granted class is conflicting for the object,
    and no denied class is authorized on it."""
    return (sw.granted & ow.conflicting).is_zero() and (sw.denied & ow.authorized).is_zero()


def update_on_read(sw: SubjectWall, ow: ObjectWall) -> SubjectWall:
    """Reading pulls the object's wall into the subject's wall."""
    return SubjectWall(sw.subject, sw.granted | ow.authorized, sw.denied | ow.conflicting)


def update_on_write(ow: ObjectWall, sw: SubjectWall) -> ObjectWall:
    """Writing pushes the subject's wall into the object's wall."""
    return ObjectWall(ow.object, ow.authorized | sw.granted, ow.conflicting | sw.denied)

