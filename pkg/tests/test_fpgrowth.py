from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from armae.dataset import BinaryMatrix
from armae.fpgrowth import build_tree, fpgrowth_rules, generate_rules, mine_frequent
from armae.rules import brute_force_mine, score_rule

from conftest import A, B, C, count_rows, random_matrix


def enumerate_frequent(data, min_support, max_size):
    out = {}
    for size in range(1, max_size + 1):
        for items in combinations(range(data.n_items), size):
            n = count_rows(data, items)
            if n > 0 and n / data.n_rows >= min_support:
                out[items] = n
    return out


def as_table(frequent):
    return {f.items: f.count for f in frequent}


def walk(node, path=()):
    yield node, path
    for child in node.children.values():
        yield from walk(child, path + (child,))


class TestBuildTree:
    def test_toy_frequency_order(self, toy):
        tree = build_tree(toy, 0.5)
        assert tree.counts == {A: 3, B: 3, C: 2}
        assert tree.order == [A, B, C]

    def test_nothing_frequent(self, toy):
        tree = build_tree(toy, 1.0)
        assert tree.is_empty and tree.order == []

    def test_single_row(self):
        data = BinaryMatrix(("A", "B"), np.array([[1, 1]], dtype=bool))
        tree = build_tree(data, 0.5)
        (a,) = tree.root.children.values()
        (b,) = a.children.values()
        assert (a.item, a.count, b.item, b.count) == (A, 1, B, 1)
        assert not b.children

    def test_header_chains_sum_to_item_counts(self):
        data = random_matrix(np.random.default_rng(0), 150, 9)
        tree = build_tree(data, 0.1)
        for item in tree.order:
            assert sum(n.count for n in tree.chain(item)) == data.cells[:, item].sum()

    def test_counts_non_increasing_down_paths(self):
        data = random_matrix(np.random.default_rng(1), 150, 9)
        tree = build_tree(data, 0.05)
        for node, path in walk(tree.root):
            counts = [n.count for n in path]
            assert counts == sorted(counts, reverse=True)

    def test_rejects_bad_threshold(self, toy):
        with pytest.raises(ValueError):
            build_tree(toy, 0.0)


@pytest.mark.parametrize("min_support", [0.25, 0.5, 0.75])
def test_frequent_itemsets_on_toy(toy, min_support):
    frequent = mine_frequent(build_tree(toy, min_support), min_support, 3)
    assert as_table(frequent) == enumerate_frequent(toy, min_support, 3)
    assert len(frequent) == len(as_table(frequent))


def test_max_size_one_gives_single_items(toy):
    frequent = mine_frequent(build_tree(toy, 0.25), 0.25, 1)
    assert as_table(frequent) == {(A,): 3, (B,): 3, (C,): 2}


def test_lower_threshold_gives_superset():
    data = random_matrix(np.random.default_rng(2), 100, 8)
    prev = set()
    for s in (0.5, 0.3, 0.2, 0.1, 0.05):
        cur = set(as_table(mine_frequent(build_tree(data, s), s, 3)))
        assert prev <= cur
        prev = cur


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), items=st.integers(2, 10), rows=st.integers(1, 60),
       min_support=st.sampled_from([0.02, 0.1, 0.25, 0.5]), max_size=st.integers(1, 4))
def test_frequent_matches_enumeration(seed, items, rows, min_support, max_size):
    data = random_matrix(np.random.default_rng(seed), rows, items, density=0.45)
    frequent = mine_frequent(build_tree(data, min_support), min_support, max_size)
    assert as_table(frequent) == enumerate_frequent(data, min_support, max_size)
    for f in frequent:
        assert f.support == f.count / rows


def test_rules_on_toy_match_brute_force(toy):
    fp = fpgrowth_rules(toy, 0.25, 0.5, 2)
    bf = brute_force_mine(toy, 0.25, 0.5, 2)
    assert {(r.rule, r.support, r.confidence) for r in fp} == \
           {(r.rule, r.support, r.confidence) for r in bf}


def test_unsatisfiable_confidence(toy):
    assert len(fpgrowth_rules(toy, 0.25, 1.01, 2)) == 0


def test_incomplete_frequent_list_is_an_error(toy):
    frequent = [f for f in mine_frequent(build_tree(toy, 0.25), 0.25, 3) if len(f.items) != 1]
    with pytest.raises(ValueError):
        generate_rules(frequent, toy, 0.0, 2)


def test_confidences_equal_rescoring():
    data = random_matrix(np.random.default_rng(4), 200, 10)
    for r in fpgrowth_rules(data, 0.05, 0.1, 2):
        again = score_rule(data, r.rule)
        assert (r.support, r.confidence) == (again.support, again.confidence)


def test_row_order_does_not_matter():
    rng = np.random.default_rng(5)
    data = random_matrix(rng, 120, 9)
    shuffled = BinaryMatrix(data.items, data.cells[rng.permutation(120)])
    a = fpgrowth_rules(data, 0.05, 0.2, 2)
    b = fpgrowth_rules(shuffled, 0.05, 0.2, 2)
    assert {(r.rule, r.support, r.confidence) for r in a} == \
           {(r.rule, r.support, r.confidence) for r in b}
