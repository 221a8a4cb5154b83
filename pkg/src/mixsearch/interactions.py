"""The three interaction channels: free-form intake, pivot questions, sketch intake.

Pivot questions walk per-attribute binary search trees: each node's item is
the median of its score-sorted slice, so truthful more/less answers halve the
set of items still consistent with the answers. A round-robin cursor rotates
across attributes, skipping exhausted ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .catalog import Catalog
from .relevance import AttributeCompare, Polarity

__all__ = [
    "InteractionKind",
    "InteractionRequest",
    "PivotNode",
    "PivotTree",
    "RoundRobinState",
    "build_pivot_tree",
    "build_pivot_trees",
    "next_question",
    "descend",
    "question_to_constraint",
]


class InteractionKind(str, Enum):
    FREEFORM = "freeform"
    QUESTION = "question"
    SKETCH = "sketch"


@dataclass(frozen=True)
class InteractionRequest:
    """What the engine asks of the user this iteration."""

    kind: InteractionKind
    attr: int | None = None
    pivot_id: int | None = None


@dataclass(frozen=True)
class PivotNode:
    """One tree node: the pivot item plus its sorted-slice bounds [lo, hi)."""

    item_id: int
    lo: int
    hi: int
    left: "PivotNode | None"
    right: "PivotNode | None"

    @property
    def slice_size(self) -> int:
        return self.hi - self.lo


@dataclass(frozen=True)
class PivotTree:
    """Balanced median-pivot BST over one attribute's scores."""

    attr: int
    root: PivotNode
    sorted_ids: tuple[int, ...]  # ids by ascending (score, id)

    def depth(self) -> int:
        def go(node: PivotNode | None) -> int:
            if node is None:
                return 0
            return 1 + max(go(node.left), go(node.right))

        return go(self.root)

    def in_order(self) -> list[int]:
        out: list[int] = []

        def go(node: PivotNode | None) -> None:
            if node is None:
                return
            go(node.left)
            out.append(node.item_id)
            go(node.right)

        go(self.root)
        return out


def build_pivot_tree(catalog: Catalog, attr: int) -> PivotTree:
    """Build one attribute's tree: recursive lower-median pivots, score ties by id."""
    scores = catalog.attrs[:, attr]
    ids = np.lexsort((np.arange(catalog.n), scores))

    def go(lo: int, hi: int) -> PivotNode | None:
        if lo >= hi:
            return None
        mid = lo + (hi - lo - 1) // 2  # lower median
        return PivotNode(
            item_id=int(ids[mid]),
            lo=lo,
            hi=hi,
            left=go(lo, mid),
            right=go(mid + 1, hi),
        )

    root = go(0, catalog.n)
    assert root is not None
    return PivotTree(attr=attr, root=root, sorted_ids=tuple(int(i) for i in ids))


def build_pivot_trees(catalog: Catalog) -> list[PivotTree]:
    """One median-pivot tree per attribute."""
    return [build_pivot_tree(catalog, a) for a in range(catalog.m)]


@dataclass
class RoundRobinState:
    """Rotating cursor over the attribute trees.

    ``cursors[a]`` is the live node for attribute a, or None once that
    attribute is exhausted (leaf reached or an 'equally' answer localized it).
    """

    trees: list[PivotTree]
    order: list[int] = field(default_factory=list)
    next_ptr: int = 0
    cursors: dict[int, PivotNode | None] = field(default_factory=dict)

    def __post_init__(self):
        if not self.order:
            self.order = [t.attr for t in self.trees]
        if not self.cursors:
            self.cursors = {t.attr: t.root for t in self.trees}

    def exhausted(self, attr: int) -> bool:
        return self.cursors[attr] is None

    def all_exhausted(self) -> bool:
        return all(self.cursors[a] is None for a in self.order)


def next_question(rr: RoundRobinState) -> tuple[int, int] | None:
    """Current (attr, pivot_id) of the next live attribute; None if all exhausted.

    Advances the rotation pointer past the returned attribute. The cursor
    itself moves only via descend(), after the answer arrives.
    """
    n = len(rr.order)
    for step in range(n):
        attr = rr.order[(rr.next_ptr + step) % n]
        node = rr.cursors[attr]
        if node is not None:
            rr.next_ptr = (rr.next_ptr + step + 1) % n
            return attr, node.item_id
    return None


def descend(rr: RoundRobinState, attr: int, response: Polarity) -> RoundRobinState:
    """Move an attribute's cursor by one answer.

    'more' steps to the higher-score child, 'less' to the lower-score child,
    'equally' marks the attribute exhausted (the target is localized). Hitting
    a missing child also exhausts the attribute.
    """
    node = rr.cursors.get(attr)
    if node is None:
        raise ValueError(f"attribute {attr} has no live cursor")
    if response is Polarity.EQUAL:
        rr.cursors[attr] = None
    elif response is Polarity.MORE:
        rr.cursors[attr] = node.right
    elif response is Polarity.LESS:
        rr.cursors[attr] = node.left
    else:
        raise ValueError(f"bad response {response!r}")
    return rr


def question_to_constraint(attr: int, pivot_id: int, response: Polarity) -> AttributeCompare:
    """A question answer is just an attribute comparison against the pivot."""
    return AttributeCompare(attr=attr, ref_id=pivot_id, polarity=response)
