"""Policy documents.

A policy document is YAML with a fixed set of keys::

    domains: [healthcare]
    classes:
    - {id: DMC, index: 1, roles: [R2, R3]}
    roles:
    - {id: R2, domain: healthcare, users: [S1], operations: [read, write]}
    objects:
    - {id: ODW, kind: ODW, domain: healthcare, owner: DMC, entities: [od.csv]}
    conflicts:
    - [DMC, DAC]
    rights:
    - {object: ODW, role: R2, ops: [read, write]}
    recipe:                      # optional
      deidentify:
      - {column: name, action: drop}
      k: 2
      max_suppression: 0.05

Scalars are read verbatim (no YAML type coercion), so ``no`` stays ``"no"``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from yaml.nodes import Node

from datawalls.errors import ParseError, ValidationFailed
from datawalls.policy import (
    ALL_OPERATIONS,
    AccessRights,
    ConflictRelation,
    DataObject,
    ObjectKind,
    Operation,
    Policy,
    Role,
    RoleClass,
    validate_policy,
)
from datawalls.store._io import read_text, write_atomic
from datawalls.store._yaml import (
    IDENT,
    compose_node,
    convert,
    node_error,
    ident,
    ident_set,
    mapping,
    scalar,
    sequence,
    ensure_unique,
)
from datawalls.transform import DeidAction, TransformRecipe



@dataclass(frozen=True)
class PolicyDocument:
    policy: Policy
    recipe: TransformRecipe | None = None


def _operations(node: Node) -> frozenset[Operation]:
    return frozenset(convert(n, Operation.parse, "operation") for n in sequence(node))


# -- parse ----------------------------------------------------------------


def parse_document(text: str) -> PolicyDocument:
    """Parse without validating the policy's semantics."""
    root = mapping(
        compose_node(text),
        required=("domains", "classes", "roles", "objects"),
        optional=("conflicts", "rights", "recipe"),
    )

    domain_nodes = sequence(root["domains"])
    domains = tuple(ident(n) for n in domain_nodes)
    ensure_unique(list(zip(domain_nodes, domains)), "domain")

    classes: dict[str, RoleClass] = {}
    for n in sequence(root["classes"]):
        m = mapping(n, ("id", "index"), ("roles",))
        rc = RoleClass(
            ident(m["id"]),
            convert(m["index"], int, "index"),
            ident_set(m["roles"]) if "roles" in m else frozenset(),
        )
        if rc.id in classes:
            raise node_error(m["id"], f"duplicate class {rc.id!r}")
        classes[rc.id] = rc

    roles: dict[str, Role] = {}
    for n in sequence(root["roles"]):
        m = mapping(n, ("id", "domain"), ("users", "operations"))
        role = Role(
            ident(m["id"]),
            ident(m["domain"]),
            ident_set(m["users"]) if "users" in m else frozenset(),
            _operations(m["operations"]) if "operations" in m else ALL_OPERATIONS,
        )
        if role.id in roles:
            raise node_error(m["id"], f"duplicate role {role.id!r}")
        if role.id in classes:
            raise node_error(m["id"], f"{role.id!r} names both a role and a class")
        roles[role.id] = role

    objects: dict[str, DataObject] = {}
    for n in sequence(root["objects"]):
        m = mapping(n, ("id", "kind", "domain", "owner"), ("entities",))
        obj = DataObject(
            ident(m["id"]),
            convert(m["kind"], ObjectKind, "object kind"),
            ident(m["domain"]),
            ident(m["owner"]),
            ident_set(m["entities"]) if "entities" in m else frozenset(),
        )
        if obj.id in objects:
            raise node_error(m["id"], f"duplicate object {obj.id!r}")
        objects[obj.id] = obj

    pairs = []
    for n in sequence(root["conflicts"]) if "conflicts" in root else []:
        ends = sequence(n)
        if len(ends) != 2:
            raise node_error(n, "a conflict is a pair [a, b]")
        pairs.append((ident(ends[0]), ident(ends[1])))

    entries = {}
    for n in sequence(root["rights"]) if "rights" in root else []:
        m = mapping(n, ("object", "role", "ops"))
        key = (ident(m["object"]), ident(m["role"]))
        if key in entries:
            raise node_error(n, f"duplicate rights entry {key}")
        entries[key] = _operations(m["ops"])

    recipe = _recipe(root["recipe"]) if "recipe" in root else None
    policy = Policy(
        domains, roles, objects, classes, ConflictRelation(tuple(pairs)), AccessRights(entries)
    )
    return PolicyDocument(policy, recipe)


def _recipe(node: Node) -> TransformRecipe:
    m = mapping(node, (), ("deidentify", "k", "max_suppression"))
    steps = []
    for n in sequence(m["deidentify"]) if "deidentify" in m else []:
        s = mapping(n, ("column", "action"))
        steps.append((scalar(s["column"]), convert(s["action"], DeidAction, "action")))
    k = convert(m["k"], int, "k") if "k" in m else 1
    supp = convert(m["max_suppression"], float, "fraction") if "max_suppression" in m else 0.0
    try:
        return TransformRecipe(tuple(steps), k, supp)
    except ValueError as exc:
        raise node_error(node, str(exc)) from None


def parse_policy(text: str) -> Policy:
    return parse_document(text).policy


def load_policy(text: str, *, validate: bool = True) -> Policy:
    """Parse a policy document; with ``validate`` raise on any violation."""
    policy = parse_policy(text)
    if validate:
        report = validate_policy(policy)
        if not report.ok:
            raise ValidationFailed(report)
    return policy


def read_document(path: str | os.PathLike[str]) -> PolicyDocument:
    return parse_document(read_text(path))


def read_policy(path: str | os.PathLike[str], *, validate: bool = True) -> Policy:
    return load_policy(read_text(path), validate=validate)


# -- render ---------------------------------------------------------------


def _flow(items) -> str:
    return "[" + ", ".join(items) + "]"


def _ops(ops: frozenset[Operation]) -> str:
    return _flow(o.value for o in Operation if o in ops)


def render_document(doc: PolicyDocument) -> str:
    p = doc.policy
    out = [f"domains: {_flow(p.domains)}", "classes:"]
    for rc in p.classes.values():
        out.append(f"- {{id: {rc.id}, index: {rc.index}, roles: {_flow(sorted(rc.roles))}}}")
    out.append("roles:")
    for r in p.roles.values():
        out.append(
            f"- {{id: {r.id}, domain: {r.domain}, users: {_flow(sorted(r.users))}, "
            f"operations: {_ops(r.operations)}}}"
        )
    out.append("objects:")
    for o in p.objects.values():
        out.append(
            f"- {{id: {o.id}, kind: {o.kind.value}, domain: {o.domain}, owner: {o.owning_class}, "
            f"entities: {_flow(sorted(o.entities))}}}"
        )
    out.append("conflicts:")
    out += [f"- [{a}, {b}]" for a, b in p.conflicts.pairs]
    out.append("rights:")
    for (obj, role), ops in p.rights.entries.items():
        out.append(f"- {{object: {obj}, role: {role}, ops: {_ops(ops)}}}")
    if doc.recipe is not None:
        rc = doc.recipe
        out.append("recipe:")
        out.append("  deidentify:")
        out += [f"  - {{column: {yaml_scalar(c)}, action: {a.value}}}" for c, a in rc.deid_steps]
        out.append(f"  k: {rc.k}")
        out.append(f"  max_suppression: {rc.max_suppression!r}")
    return "\n".join(out) + "\n"


def render_policy(policy: Policy) -> str:
    return render_document(PolicyDocument(policy))


def yaml_scalar(value: str) -> str:
    """Render a free-text scalar so that it reads back verbatim."""
    if IDENT.match(value):
        return value
    return "'" + value.replace("'", "''") + "'"


def write_document(path: str | os.PathLike[str], doc: PolicyDocument) -> None:
    write_atomic(path, render_document(doc))
