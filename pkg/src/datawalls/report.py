"""Operator reports: the class/wall table, the alpha chain, and their figures.

Tables are ``" | "``-delimited text. Figures are written with the
object-oriented matplotlib API so no interactive backend is needed.
"""

from __future__ import annotations

import itertools
import os
from pathlib import Path

import numpy as np
from matplotlib.colors import ListedColormap
from matplotlib.figure import Figure

from datawalls.store.state import EngineState
from datawalls.transform import WarehouseChain, informative_quasi, smallest_group

SEP = " | "
EMPTY = "-"
WALL_HEADER = (
    "Equivalent Roles Classes",
    "Conflicting Roles Classes",
    "Access Objects",
    "Binary Object Wall {BinOWRC, BinOWCRC}",
    "Subjects",
    "Binary Subject Wall {BinSWG, BinSWD}",
)


def _pair(text: str) -> str:
    # "ODW {100, 011}" -> "{100, 011}"
    return text[text.index("{"):]


def wall_table(state: EngineState) -> str:
    """One row per role class: its conflicts, owned objects and member subjects."""
    policy = state.policy
    lines = [SEP.join(WALL_HEADER)]
    for cls in policy.class_order:
        rivals = sorted(policy.conflicting_classes(cls), key=lambda c: policy.classes[c].index)
        objects = [o for o in policy.objects.values() if o.owning_class == cls]
        subjects = [
            u for u in policy.users.values() if policy.class_of_role.get(u.active_role) == cls
        ]
        rows = itertools.zip_longest(objects, subjects) if objects or subjects else [(None, None)]
        for i, (obj, user) in enumerate(rows):
            lines.append(
                SEP.join(
                    [
                        cls if i == 0 else EMPTY,
                        ("{" + ", ".join(rivals) + "}") if i == 0 else EMPTY,
                        obj.id if obj else EMPTY,
                        _pair(str(state.object_walls[obj.id])) if obj else EMPTY,
                        user.id if user else EMPTY,
                        _pair(str(state.subject_walls[user.id])) if user else EMPTY,
                    ]
                )
            )
    for u in policy.users.values():
        if u.active_role not in policy.class_of_role:
            wall = _pair(str(state.subject_walls[u.id]))
            lines.append(SEP.join([EMPTY] * 4 + [u.id, wall]))
    return "\n".join(lines) + "\n"


def alpha_table(chain: WarehouseChain, k: int) -> str:
    lines = [SEP.join(("Tier", "Rows", "Smallest quasi group", "alpha"))]
    for ds in chain.tiers():
        quasi = informative_quasi(ds)
        group = str(smallest_group(ds, quasi)) if quasi and ds.rows else EMPTY
        lines.append(SEP.join((ds.tier.value, str(len(ds)), group, f"{ds.alpha:.6g}")))
    lines.append(SEP.join(("k", str(k), EMPTY, f"{1 / k:.6g}")))
    return "\n".join(lines) + "\n"


# -- figures --------------------------------------------------------------

_WALL_CMAP = ListedColormap(["#c0392b", "#f4f4f4", "#27ae60"])


def _wall_matrix(rows: list[tuple[str, object, object]], width: int) -> np.ndarray:
    m = np.zeros((len(rows), width))
    for i, (_, allow, deny) in enumerate(rows):
        for j in allow.indices():  # type: ignore[attr-defined]
            m[i, j - 1] = 1
        for j in deny.indices():  # type: ignore[attr-defined]
            m[i, j - 1] = -1
    return m


def plot_walls(state: EngineState, path: str | os.PathLike[str]) -> Path:
    """Heatmap of every wall: green = granted/authorized, red = denied/conflicting."""
    policy = state.policy
    objects = [(w.object, w.authorized, w.conflicting) for w in state.object_walls.values()]
    subjects = [(w.subject, w.granted, w.denied) for w in state.subject_walls.values()]
    fig = Figure(figsize=(2 + 0.6 * policy.width * 2, 1.5 + 0.35 * max(len(objects), len(subjects), 1)))
    axes = fig.subplots(1, 2, squeeze=False)[0]
    for ax, title, rows in ((axes[0], "Object walls", objects), (axes[1], "Subject walls", subjects)):
        ax.set_title(title)
        if not rows:
            ax.set_axis_off()
            continue
        ax.imshow(_wall_matrix(rows, policy.width), cmap=_WALL_CMAP, vmin=-1, vmax=1, aspect="auto")
        ax.set_xticks(range(policy.width), policy.class_order)
        ax.set_yticks(range(len(rows)), [r[0] for r in rows])
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    return out


def plot_alpha_chain(chain: WarehouseChain, k: int, path: str | os.PathLike[str]) -> Path:
    fig = Figure(figsize=(4.5, 3.2))
    ax = fig.subplots()
    tiers = [ds.tier.value for ds in chain.tiers()]
    ax.bar(tiers, chain.alphas, color=["#34495e", "#2980b9", "#16a085"])
    ax.axhline(1 / k, color="#c0392b", linestyle="--", linewidth=1, label=f"1/k (k={k})")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("alpha")
    ax.legend(loc="upper right", frameon=False)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    return out
