from typing import Any, List, Optional
from dataclasses import dataclass, field
import math

import numpy as np
import pandas as pd
from rich.table import Table
from rich.text import Text
from rich.tree import Tree

from .lattice_disorder import LakeDecomposition
from .lattice_energy import WaveFunction


@dataclass(slots=True)
class _Node:
    """
    A group of intervals (lakes or barriers) or a single interval.

    Attributes
    ----------
    name : str
        Label of the node.
    start : int
        First site of the interval, -1 for groups.
    length : int
        Number of sites; for groups, the total over children.
    mass : float
        Squared norm of the state on the node, NaN without a state.
    children : List[_Node]
        Child intervals of a group.
    """
    name: str
    start: int = -1
    length: int = 0
    mass: float = math.nan
    children: List["_Node"] = field(default_factory=list)


def _build_nodes(decomposition: LakeDecomposition, state: Optional[WaveFunction]) -> _Node:
    sq = state.amplitudes ** 2 if state is not None else None
    root = _Node(name=f"lattice L={decomposition.total_length}")

    for label, intervals in (("lakes", decomposition.lakes), ("barriers", decomposition.barriers)):
        group = _Node(name=label, mass=0.0 if sq is not None else math.nan)
        for iv in intervals:
            mass = float(np.sum(sq[iv.start:iv.stop])) if sq is not None else math.nan
            group.children.append(_Node(name=f"[{iv.start}, {iv.stop})", start=iv.start, length=iv.length, mass=mass))
            group.length += iv.length
            if sq is not None:
                group.mass += mass
        root.children.append(group)
        root.length += group.length

    if sq is not None:
        root.mass = float(np.sum(sq))
    return root


def _sorted_children(node: _Node, by_mass: bool) -> List[_Node]:
    kids = list(node.children)
    if by_mass:
        kids.sort(key=lambda n: (-n.mass, -n.length, n.start))
    else:
        kids.sort(key=lambda n: (-n.length, n.start))
    return kids


def _suffix(node: _Node) -> str:
    out = f" (len {node.length}"
    if not math.isnan(node.mass):
        out += f", mass {node.mass:.4g}"
    return out + ")"


def render_decomposition(
    decomposition: LakeDecomposition,
    *,
    state: Optional[WaveFunction] = None,
    max_children: Optional[int] = 20,
) -> Tree:
    """
    Renders a lake decomposition as a rich Tree.

    Intervals are listed longest first, or heaviest first when a state is
    given, and each group is truncated to ``max_children`` entries.

    Parameters
    ----------
    decomposition : LakeDecomposition
        Decomposition to render.
    state : WaveFunction, optional
        When given, each interval shows the squared norm of the state on it.
    max_children : Optional[int]
        Maximum number of intervals shown per group. None shows all.

    Returns
    -------
    Tree
        A rich Tree with one branch for lakes and one for barriers.
    """
    root = _build_nodes(decomposition, state)
    root_text = Text(root.name, style="bold")
    root_text.append(_suffix(root), style="dim")
    t = Tree(root_text)

    for group in root.children:
        line = Text(f"{group.name} ({len(group.children)})", style="bold")
        line.append(_suffix(group), style="dim")
        branch = t.add(line)

        kids = _sorted_children(group, by_mass=state is not None)
        if max_children is not None and len(kids) > max_children:
            shown, hidden = kids[:max_children], kids[max_children:]
        else:
            shown, hidden = kids, []

        for c in shown:
            text = Text(c.name)
            text.append(_suffix(c), style="dim")
            branch.add(text)

        if hidden:
            more = Text(f"+{len(hidden)} more", style="dim italic")
            more.append(f" (len {sum(x.length for x in hidden)})", style="dim")
            branch.add(more)

    return t


def render_table(df: pd.DataFrame, *, title: Optional[str] = None, float_digits: int = 6) -> Table:
    """
    Renders a summary DataFrame as a rich Table.
    """
    table = Table(title=title, show_lines=False)
    for col in df.columns:
        table.add_column(str(col), justify="right" if pd.api.types.is_numeric_dtype(df[col]) else "left")

    def fmt(v: Any) -> str:
        if isinstance(v, (float, np.floating)):
            return "nan" if math.isnan(v) else f"{v:.{float_digits}g}"
        return str(v)

    for row in df.itertuples(index=False):
        table.add_row(*(fmt(v) for v in row))
    return table
