"""FP-tree construction, frequent itemset mining and rule generation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .dataset import BinaryMatrix
from .rules import Itemset, Rule, RuleSet, ScoredRule, confidence_from_counts


class FPNode:
    __slots__ = ("item", "count", "children", "parent", "link")

    def __init__(self, item: int | None, parent: "FPNode | None"):
        self.item = item
        self.count = 0
        self.children: dict[int, FPNode] = {}
        self.parent = parent
        self.link: FPNode | None = None

    def __repr__(self):
        return f"FPNode({self.item}, {self.count})"


@dataclass
class FPTree:
    """Prefix tree plus header chains.

    ``order`` lists the frequent items by descending count (ties by lower
    id); transactions are inserted in that order. ``header[item]`` is the
    first node of the item's chain, linked through ``FPNode.link``.
    """

    root: FPNode = field(default_factory=lambda: FPNode(None, None))
    order: list[int] = field(default_factory=list)
    counts: dict[int, int] = field(default_factory=dict)
    header: dict[int, FPNode] = field(default_factory=dict)
    n_rows: int = 0
    _tails: dict[int, FPNode] = field(default_factory=dict, repr=False)

    def insert(self, items: Iterable[int], count: int = 1) -> None:
        node = self.root
        for item in items:
            child = node.children.get(item)
            if child is None:
                child = FPNode(item, node)
                node.children[item] = child
                if item in self._tails:
                    self._tails[item].link = child
                else:
                    self.header[item] = child
                self._tails[item] = child
            child.count += count
            node = child

    def chain(self, item: int):
        node = self.header.get(item)
        while node is not None:
            yield node
            node = node.link

    def prefix_paths(self, item: int) -> list[tuple[list[int], int]]:
        """Conditional pattern base: (path to root, count) for every ``item`` node."""
        base = []
        for node in self.chain(item):
            path = []
            parent = node.parent
            while parent.item is not None:
                path.append(parent.item)
                parent = parent.parent
            if path:
                path.reverse()
                base.append((path, node.count))
        return base

    @property
    def is_empty(self) -> bool:
        return not self.root.children


@dataclass(frozen=True)
class FrequentItemset:
    items: Itemset
    count: int
    support: float


def _is_frequent(count: int, n_rows: int, min_support: float) -> bool:
    # same comparison the brute-force miner uses, so both agree at the boundary
    return count / n_rows >= min_support


def _tree_from_base(
    base: list[tuple[list[int], int]], n_rows: int, min_support: float
) -> FPTree:
    totals: dict[int, int] = {}
    for path, count in base:
        for item in path:
            totals[item] = totals.get(item, 0) + count
    frequent = {i: c for i, c in totals.items() if _is_frequent(c, n_rows, min_support)}
    tree = FPTree(n_rows=n_rows)
    tree.order = sorted(frequent, key=lambda i: (-frequent[i], i))
    tree.counts = frequent
    rank = {item: r for r, item in enumerate(tree.order)}
    for path, count in base:
        kept = sorted((i for i in path if i in rank), key=rank.__getitem__)
        if kept:
            tree.insert(kept, count)
    return tree


def build_tree(data: BinaryMatrix, min_support: float) -> FPTree:
    if not 0 < min_support <= 1:
        raise ValueError("min_support must lie in (0, 1]")
    counts = data.cells.sum(axis=0)
    frequent = {
        int(i): int(c)
        for i, c in enumerate(counts)
        if _is_frequent(int(c), data.n_rows, min_support)
    }
    tree = FPTree(n_rows=data.n_rows)
    tree.order = sorted(frequent, key=lambda i: (-frequent[i], i))
    tree.counts = frequent
    if not tree.order:
        return tree
    columns = np.array(tree.order)
    # identical rows share one insertion
    projected = data.cells[:, columns]
    patterns, multiplicity = np.unique(projected, axis=0, return_counts=True)
    for pattern, count in zip(patterns, multiplicity):
        items = columns[pattern].tolist()
        if items:
            tree.insert(items, int(count))
    return tree


def mine_frequent(tree: FPTree, min_support: float, max_size: int) -> list[FrequentItemset]:
    """All frequent itemsets of at most ``max_size`` items, each exactly once."""
    n_rows = tree.n_rows
    found: list[FrequentItemset] = []

    def emit(items: tuple[int, ...], count: int):
        found.append(FrequentItemset(tuple(sorted(items)), count, count / n_rows))

    def recurse(t: FPTree, suffix: tuple[int, ...], depth_left: int):
        # least frequent first, the usual FP-growth traversal
        for item in reversed(t.order):
            itemset = suffix + (item,)
            emit(itemset, t.counts[item])
            if depth_left <= 1:
                continue
            base = t.prefix_paths(item)
            if depth_left == 2:
                # last level: a tree is not needed, only item totals
                totals: dict[int, int] = {}
                for path, count in base:
                    for i in path:
                        totals[i] = totals.get(i, 0) + count
                for i, c in totals.items():
                    if _is_frequent(c, n_rows, min_support):
                        emit(itemset + (i,), c)
            else:
                sub = _tree_from_base(base, n_rows, min_support)
                if not sub.is_empty:
                    recurse(sub, itemset, depth_left - 1)

    if max_size >= 1:
        recurse(tree, (), max_size)
    found.sort(key=lambda f: (len(f.items), f.items))
    return found


def generate_rules(
    frequent: list[FrequentItemset],
    data: BinaryMatrix,
    min_confidence: float,
    max_antecedent: int,
) -> RuleSet:
    """Split each frequent itemset into antecedent => single consequent.

    Supports and confidences come from the frequent itemset counts; a
    missing antecedent means ``frequent`` was incomplete.
    """
    n_rows = data.n_rows
    table = {f.items: f.count for f in frequent}
    out = RuleSet()
    for f in frequent:
        size = len(f.items)
        if size < 2 or size > max_antecedent + 1:
            continue
        for consequent in f.items:
            antecedent = tuple(i for i in f.items if i != consequent)
            try:
                ante_count = table[antecedent]
            except KeyError:
                raise ValueError(
                    f"antecedent {antecedent} missing from the frequent itemsets"
                ) from None
            conf = confidence_from_counts(f.count, ante_count)
            if conf >= min_confidence:
                out.add(ScoredRule(Rule(antecedent, consequent), f.count / n_rows, conf))
    return out


def fpgrowth_rules(
    data: BinaryMatrix,
    min_support: float,
    min_confidence: float,
    max_antecedent: int = 2,
) -> RuleSet:
    tree = build_tree(data, min_support)
    frequent = mine_frequent(tree, min_support, max_antecedent + 1)
    return generate_rules(frequent, data, min_confidence, max_antecedent)

