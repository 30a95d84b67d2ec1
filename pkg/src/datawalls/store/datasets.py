"""Dataset tables (CSV with a header row) and attribute schemas (YAML).

Schema document::

    columns:
    - {name: name, sensitivity: identifier}
    - {name: zip, sensitivity: quasi, hierarchy: {type: mask, depth: 5}}
    - {name: age, sensitivity: quasi, hierarchy: {type: interval, widths: [5, 10, 20]}}
    - {name: sex, sensitivity: quasi, hierarchy: {type: taxonomy, levels: []}}
    - {name: diagnosis, sensitivity: sensitive}
"""

from __future__ import annotations

import csv
import io
import os

from yaml.nodes import Node

from datawalls.errors import ParseError
from datawalls.store._io import read_text, write_atomic
from datawalls.store._yaml import compose_node, convert, mapping, node_error, scalar, sequence
from datawalls.store.policy_io import yaml_scalar
from datawalls.transform import (
    AttributeSchema,
    Column,
    Dataset,
    Hierarchy,
    IntervalHierarchy,
    MaskHierarchy,
    Sensitivity,
    TaxonomyHierarchy,
    Tier,
)

# -- schema ---------------------------------------------------------------


def _hierarchy(node: Node) -> Hierarchy:
    m = mapping(node, ("type",), ("depth", "widths", "levels"))
    kind = scalar(m["type"])
    try:
        if kind == "mask":
            return MaskHierarchy(convert(m["depth"], int, "depth"))
        if kind == "interval":
            return IntervalHierarchy(tuple(convert(n, int, "width") for n in sequence(m["widths"])))
        if kind == "taxonomy":
            levels = []
            for level in sequence(m["levels"]) if "levels" in m else []:
                table = mapping(level, (), None)
                levels.append({k: scalar(v) for k, v in table.items()})
            return TaxonomyHierarchy(tuple(levels))
    except KeyError as exc:
        raise node_error(node, f"{kind} hierarchy needs {exc.args[0]!r}") from None
    except ValueError as exc:
        raise node_error(node, str(exc)) from None
    raise node_error(m["type"], f"unknown hierarchy type {kind!r}")


def parse_schema(text: str) -> AttributeSchema:
    root = mapping(compose_node(text), ("columns",))
    columns = []
    seen: set[str] = set()
    for n in sequence(root["columns"]):
        m = mapping(n, ("name", "sensitivity"), ("hierarchy", "pseudonymized"))
        name = scalar(m["name"])
        if name in seen:
            raise node_error(m["name"], f"duplicate column {name!r}")
        seen.add(name)
        pseudo = scalar(m["pseudonymized"]) if "pseudonymized" in m else "false"
        if pseudo not in ("true", "false"):
            raise node_error(m["pseudonymized"], "pseudonymized must be true or false")
        columns.append(
            Column(
                name,
                convert(m["sensitivity"], Sensitivity, "sensitivity"),
                _hierarchy(m["hierarchy"]) if "hierarchy" in m else None,
                pseudo == "true",
            )
        )
    return AttributeSchema(tuple(columns))


def _render_hierarchy(h: Hierarchy) -> str:
    if isinstance(h, MaskHierarchy):
        return f"{{type: mask, depth: {h.depth}}}"
    if isinstance(h, IntervalHierarchy):
        return "{type: interval, widths: [" + ", ".join(map(str, h.widths)) + "]}"
    if isinstance(h, TaxonomyHierarchy):
        levels = [
            "{" + ", ".join(f"{yaml_scalar(k)}: {yaml_scalar(v)}" for k, v in lvl.items()) + "}"
            for lvl in h.levels
        ]
        return "{type: taxonomy, levels: [" + ", ".join(levels) + "]}"
    raise TypeError(f"cannot render {type(h).__name__}")


def render_schema(schema: AttributeSchema) -> str:
    out = ["columns:"]
    for c in schema.columns:
        parts = [f"name: {yaml_scalar(c.name)}", f"sensitivity: {c.sensitivity.value}"]
        if c.hierarchy is not None:
            parts.append(f"hierarchy: {_render_hierarchy(c.hierarchy)}")
        if c.pseudonymized:
            parts.append("pseudonymized: true")
        out.append("- {" + ", ".join(parts) + "}")
    return "\n".join(out) + "\n"


def read_schema(path: str | os.PathLike[str]) -> AttributeSchema:
    return parse_schema(read_text(path))


def write_schema(path: str | os.PathLike[str], schema: AttributeSchema) -> None:
    write_atomic(path, render_schema(schema))


# -- tables ---------------------------------------------------------------


def parse_table(text: str, schema: AttributeSchema, tier: Tier = Tier.OD) -> Dataset:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header row", 1, 1) from None
    if tuple(header) != schema.names:
        raise ParseError(f"header {header} does not match schema {list(schema.names)}", 1, 1)
    rows = []
    for row in reader:
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", reader.line_num, 1)
        rows.append(tuple(row))
    return Dataset(schema, tuple(rows), tier)


def render_table(ds: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ds.schema.names)
    writer.writerows(ds.rows)
    return buf.getvalue()


def read_dataset(
    path: str | os.PathLike[str], schema: AttributeSchema, tier: Tier = Tier.OD
) -> Dataset:
    return parse_table(read_text(path), schema, tier)


def write_dataset(path: str | os.PathLike[str], ds: Dataset) -> None:
    write_atomic(path, render_table(ds))
