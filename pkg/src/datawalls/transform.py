"""De-identification, k-anonymisation and the confidentiality score.

Data moves through three tiers: original (OD), de-identified (DD) and
anonymised (AD). Each tier carries a confidentiality score ``alpha``:

* 1.0 when any direct identifier is still readable,
* ``1 / k_eff`` otherwise, where ``k_eff`` is the smallest group of rows
  sharing the same quasi-identifier values,
* 0.0 when no quasi-identifier carries information any more.
"""

from __future__ import annotations

import dataclasses
import hashlib
import hmac
import os
import secrets
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

from datawalls.errors import (
    EmptyDataset,
    MissingAction,
    TierError,
    TransformError,
    UnachievableK,
)
from datawalls.policy import DataObject, ObjectKind, Policy

SUPPRESSED = "*"
KEY_ENV = "DATAWALLS_PSEUDONYM_KEY"


class Sensitivity(str, Enum):
    IDENTIFIER = "identifier"
    QUASI = "quasi"
    SENSITIVE = "sensitive"
    INSENSITIVE = "insensitive"

    def __str__(self) -> str:
        return self.value


class Tier(str, Enum):
    OD = "OD"
    DD = "DD"
    AD = "AD"

    def __str__(self) -> str:
        return self.value


# -- generalization hierarchies -------------------------------------------


class Hierarchy:
    """Maps a raw value to level ``0..height``. Level ``height`` is always ``"*"``."""

    height: int

    def generalize(self, value: str, level: int) -> str:
        if not 0 <= level <= self.height:
            raise ValueError(f"level {level} outside 0..{self.height}")
        if level == 0:
            return value
        if level == self.height:
            return SUPPRESSED
        return self._step(value, level)

    def _step(self, value: str, level: int) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class MaskHierarchy(Hierarchy):
    """Replace trailing characters with ``*``, one more per level.

    ``depth`` levels mask 1..depth-1 characters; level ``depth`` suppresses.
    """

    depth: int

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError("mask depth must be >= 1")

    @property
    def height(self) -> int:  # type: ignore[override]
        return self.depth

    def _step(self, value: str, level: int) -> str:
        keep = max(len(value) - level, 0)
        return value[:keep] + SUPPRESSED * (len(value) - keep)


@dataclass(frozen=True)
class IntervalHierarchy(Hierarchy):
    """Bucket integers into ranges ``lo-hi`` of growing width.

    Each width must divide the next so that buckets only ever merge.
    """

    widths: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(w < 1 for w in self.widths):
            raise ValueError("interval widths must be positive")
        for a, b in zip(self.widths, self.widths[1:]):
            if b % a:
                raise ValueError(f"width {a} does not divide {b}")

    @property
    def height(self) -> int:  # type: ignore[override]
        return len(self.widths) + 1

    def _step(self, value: str, level: int) -> str:
        try:
            x = int(value)
        except ValueError:
            raise TransformError(f"interval hierarchy needs integers, got {value!r}") from None
        w = self.widths[level - 1]
        lo = (x // w) * w
        return f"{lo}-{lo + w - 1}"


@dataclass(frozen=True)
class TaxonomyHierarchy(Hierarchy):
    """Explicit value-to-label tables, one per intermediate level."""

    levels: tuple[Mapping[str, str], ...] = ()

    def __post_init__(self) -> None:
        for lower, upper in zip(self.levels, self.levels[1:]):
            seen: dict[str, str] = {}
            for raw, label in lower.items():
                if raw not in upper:
                    raise ValueError(f"{raw!r} missing from a higher taxonomy level")
                if seen.setdefault(label, upper[raw]) != upper[raw]:
                    raise ValueError(f"taxonomy splits group {label!r}")

    @property
    def height(self) -> int:  # type: ignore[override]
        return len(self.levels) + 1

    def _step(self, value: str, level: int) -> str:
        try:
            return self.levels[level - 1][value]
        except KeyError:
            raise TransformError(f"{value!r} not in taxonomy level {level}") from None


# -- datasets -------------------------------------------------------------


@dataclass(frozen=True)
class Column:
    name: str
    sensitivity: Sensitivity
    hierarchy: Hierarchy | None = None
    # Identifier column whose values are keyed tokens rather than identities.
    pseudonymized: bool = False


@dataclass(frozen=True)
class AttributeSchema:
    columns: tuple[Column, ...]

    def __post_init__(self) -> None:
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names in {names}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def position(self, name: str) -> int:
        return self.names.index(name)

    def column(self, name: str) -> Column:
        return self.columns[self.position(name)]

    def of(self, sensitivity: Sensitivity) -> list[Column]:
        return [c for c in self.columns if c.sensitivity is sensitivity]


@dataclass(frozen=True)
class Dataset:
    schema: AttributeSchema
    rows: tuple[tuple[str, ...], ...]
    tier: Tier = Tier.OD
    # generalization level per quasi column and suppressed row count; not persisted
    levels: Mapping[str, int] = field(default_factory=dict, compare=False)
    suppressed: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        width = len(self.schema.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} fields, schema has {width}")

    @classmethod
    def from_records(
        cls, schema: AttributeSchema, records: Iterable[Mapping[str, object]], tier: Tier = Tier.OD
    ) -> Dataset:
        rows = tuple(tuple(str(r[name]) for name in schema.names) for r in records)
        return cls(schema, rows, tier)

    def column_values(self, name: str) -> list[str]:
        i = self.schema.position(name)
        return [row[i] for row in self.rows]

    def records(self) -> list[dict[str, str]]:
        return [dict(zip(self.schema.names, row)) for row in self.rows]

    @cached_property
    def alpha(self) -> float:
        return measure_confidentiality(self)

    def __len__(self) -> int:
        return len(self.rows)


class DeidAction(str, Enum):
    DROP = "drop"
    PSEUDONYMIZE = "pseudonymize"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TransformRecipe:
    deid_steps: tuple[tuple[str, DeidAction], ...] = ()
    k: int = 1
    max_suppression: float = 0.0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.max_suppression <= 1.0:
            raise ValueError("max_suppression must lie in [0, 1]")


# -- confidentiality ------------------------------------------------------


def _readable(value: str) -> bool:
    return value not in ("", SUPPRESSED)


def informative_quasi(ds: Dataset) -> list[str]:
    """Quasi columns that are not fully suppressed."""
    out = []
    for col in ds.schema.of(Sensitivity.QUASI):
        if any(v != SUPPRESSED for v in ds.column_values(col.name)):
            out.append(col.name)
    return out


def smallest_group(ds: Dataset, quasi: Sequence[str]) -> int:
    idx = [ds.schema.position(q) for q in quasi]
    counts = Counter(tuple(row[i] for i in idx) for row in ds.rows)
    return min(counts.values())


def measure_confidentiality(ds: Dataset) -> float:
    if not ds.rows:
        raise EmptyDataset("confidentiality is undefined for an empty dataset")
    for col in ds.schema.of(Sensitivity.IDENTIFIER):
        if not col.pseudonymized and any(map(_readable, ds.column_values(col.name))):
            return 1.0
    quasi = informative_quasi(ds)
    if not quasi:
        return 0.0
    return 1.0 / smallest_group(ds, quasi)


# -- de-identification ----------------------------------------------------


def resolve_key(key: bytes | str | None = None) -> bytes:
    """Pseudonym key: explicit, else the environment, else a fresh random key."""
    if key is None:
        key = os.environ.get(KEY_ENV)
    if key is None:
        return secrets.token_bytes(32)
    return key.encode() if isinstance(key, str) else key


def pseudonym(key: bytes, value: str) -> str:
    if value == "":
        return ""
    return hmac.new(key, value.encode(), hashlib.sha256).hexdigest()[:16]


def deidentify(
    ds: Dataset, recipe: TransformRecipe, key: bytes | str | None = None
) -> Dataset:
    """Drop or pseudonymize every identifier column; other columns are untouched."""
    if ds.tier is not Tier.OD:
        raise TierError(f"deidentify needs tier OD, got {ds.tier}")
    steps = dict(recipe.deid_steps)
    for name in steps:
        if name not in ds.schema.names:
            raise TransformError(f"de-identification step for unknown column {name!r}")
        if ds.schema.column(name).sensitivity is not Sensitivity.IDENTIFIER:
            raise TransformError(f"{name!r} is not an identifier column")
    for col in ds.schema.of(Sensitivity.IDENTIFIER):
        if col.name not in steps and not col.pseudonymized:
            raise MissingAction(f"identifier column {col.name!r} has no de-identification step")

    secret = resolve_key(key) if DeidAction.PSEUDONYMIZE in steps.values() else b""
    keep: list[int] = []
    columns: list[Column] = []
    tokenize: set[int] = set()
    for i, col in enumerate(ds.schema.columns):
        action = steps.get(col.name)
        if action is DeidAction.DROP:
            continue
        if action is DeidAction.PSEUDONYMIZE and not col.pseudonymized:
            tokenize.add(len(keep))
            col = dataclasses.replace(col, pseudonymized=True)
        keep.append(i)
        columns.append(col)

    rows = tuple(
        tuple(pseudonym(secret, row[i]) if j in tokenize else row[i] for j, i in enumerate(keep))
        for row in ds.rows
    )
    return Dataset(AttributeSchema(tuple(columns)), rows, Tier.DD)


# -- anonymisation --------------------------------------------------------


def _generalized(ds: Dataset, levels: Mapping[str, int]) -> list[tuple[str, ...]]:
    plan = [
        (i, col.hierarchy, levels[col.name])
        for i, col in enumerate(ds.schema.columns)
        if col.name in levels and levels[col.name] > 0
    ]
    if not plan:
        return list(ds.rows)
    out = []
    for row in ds.rows:
        values = list(row)
        for i, h, lvl in plan:
            values[i] = h.generalize(row[i], lvl)  # type: ignore[union-attr]
        out.append(tuple(values))
    return out


def anonymize(ds: Dataset, recipe: TransformRecipe) -> Dataset:
    """k-anonymise a DD dataset by greedy full-domain generalization.

    While the rows outside groups of size ``k`` exceed the suppression budget,
    the quasi column with the most distinct values climbs one hierarchy level.
    Remaining small groups are then removed.
    """
    if ds.tier is not Tier.DD:
        raise TierError(f"anonymize needs tier DD, got {ds.tier}")
    quasi = ds.schema.of(Sensitivity.QUASI)
    missing = [c.name for c in quasi if c.hierarchy is None]
    if missing:
        raise TransformError(f"quasi columns without hierarchy: {missing}")

    n = len(ds.rows)
    budget = int(recipe.max_suppression * n + 1e-9)
    idx = [ds.schema.position(c.name) for c in quasi]
    levels = {c.name: 0 for c in quasi}

    while True:
        rows = _generalized(ds, levels)
        counts = Counter(tuple(r[i] for i in idx) for r in rows)
        small = sum(c for c in counts.values() if c < recipe.k)
        if small <= budget:
            break
        climbable = [c for c in quasi if levels[c.name] < c.hierarchy.height]  # type: ignore[union-attr]
        if not climbable:
            raise UnachievableK(
                f"{small} of {n} rows remain in groups below k={recipe.k} "
                f"with every quasi column suppressed (budget {budget})"
            )
        distinct = {c.name: len({r[ds.schema.position(c.name)] for r in rows}) for c in climbable}
        target = max(climbable, key=lambda c: distinct[c.name])
        levels[target.name] += 1

    kept = tuple(r for r in rows if counts[tuple(r[i] for i in idx)] >= recipe.k)
    if not kept:
        raise UnachievableK(f"k={recipe.k} would suppress every row")
    return Dataset(ds.schema, kept, Tier.AD, levels=levels, suppressed=n - len(kept))


def verify_k_anonymity(ds: Dataset, k: int) -> bool:
    """Check that every run of identical quasi projections has at least ``k`` rows."""
    if k <= 1:
        return True
    idx = [i for i, c in enumerate(ds.schema.columns) if c.sensitivity is Sensitivity.QUASI]
    keys = sorted(tuple(row[i] for i in idx) for row in ds.rows)
    run = 0
    for i, key in enumerate(keys):
        run = run + 1 if i and key == keys[i - 1] else 1
        ends = i == len(keys) - 1 or keys[i + 1] != key
        if ends and run < k:
            return False
    return True


# -- the warehouse chain --------------------------------------------------


@dataclass(frozen=True)
class WarehouseChain:
    od: Dataset
    dd: Dataset
    ad: Dataset

    def tiers(self) -> tuple[Dataset, Dataset, Dataset]:
        return self.od, self.dd, self.ad

    @property
    def alphas(self) -> tuple[float, float, float]:
        return self.od.alpha, self.dd.alpha, self.ad.alpha

    def register(
        self, policy: Policy, domain: str, entities: Mapping[ObjectKind, str] | None = None
    ) -> Policy:
        """Record the three tiers as the domain's ODW/DDW/ADW objects."""
        names = entities or {k: f"{k.value.lower()}.csv" for k in ObjectKind if k is not ObjectKind.GENERIC}
        updated: list[DataObject] = []
        for kind in (ObjectKind.ODW, ObjectKind.DDW, ObjectKind.ADW):
            match = [o for o in policy.objects.values() if o.kind is kind and o.domain == domain]
            if not match:
                raise TransformError(f"domain {domain!r} has no {kind} object")
            updated.append(dataclasses.replace(match[0], entities=frozenset({names[kind]})))
        return policy.with_objects(updated)


def build_warehouse_chain(
    od: Dataset, recipe: TransformRecipe, key: bytes | str | None = None
) -> WarehouseChain:
    if od.tier is not Tier.OD:
        raise TierError(f"chain must start from tier OD, got {od.tier}")
    dd = deidentify(od, recipe, key)
    return WarehouseChain(od, dd, anonymize(dd, recipe))
