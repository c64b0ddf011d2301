import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import BERN, random_means, random_tree, trees
from tmcts.errors import MalformedTree, TreeSyntaxError
from tmcts.tree import (MAX, MIN, Answer, GameTree, answer, complete_tree, from_nested, good_children,
                        node_answers, parse_means, parse_tree, serialize_means, serialize_tree, validate, value)

SAMPLE = ('{"root": {"label":"MAX","children":[{"label":"MIN","children":[{"leaf":"a"},{"leaf":"b"}]},'
          ' {"leaf":"c"}]}}')


def test_single_leaf_tree_is_valid():
    t = GameTree((None,), ((),))
    validate(t)
    assert t.n_leaves == 1 and t.root == 0 and t.leaf_names == ["l0"]
    assert value(t, 0, [0.3]) == 0.3


def test_unlabelled_internal_node_rejected():
    with pytest.raises(MalformedTree):
        GameTree((None, None), ((1,), ()))


def test_two_roots_rejected():
    with pytest.raises(MalformedTree):
        GameTree((MAX, None, None), ((1,), (), ()))


def test_other_structural_errors():
    with pytest.raises(MalformedTree):
        GameTree((MAX, MAX), ((1,), (0,)))          # cycle, no root
    with pytest.raises(MalformedTree):
        GameTree((MAX, None, None), ((1, 2), (), ()), (None, "a", "a"))
    with pytest.raises(MalformedTree):
        GameTree((MAX, "MIN"), ((1,), ()))            # labelled leaf


def test_values_and_answers():
    t = from_nested([0, 0])
    assert value(t, t.root, [0.3, 0.7]) == 0.7
    assert answer(t, t.root, [0.3, 0.7], 0.8) is Answer.LOSE
    t2 = from_nested([[0, 0], [0, 0]])
    means = [0.2, 0.9, 0.6, 0.8]
    assert value(t2, t2.root, means) == 0.6
    assert answer(t2, t2.root, means, 0.5) is Answer.WIN
    leaf = GameTree((None,), ((),))
    assert answer(leaf, 0, [0.5], 0.5) is Answer.WIN


def test_good_children():
    t = from_nested([0, 0])
    means = [0.3, 0.7]
    assert good_children(t, t.root, means, 0.5) == {2}
    assert good_children(t, t.root, means, 0.1) == {1, 2}
    assert good_children(t, t.root, means, 0.9) == set()


def test_parse_sample_document():
    t = parse_tree(SAMPLE)
    assert t.leaf_names == ["a", "b", "c"]
    assert t.labels[t.root] == MAX and t.labels[1] == MIN
    assert t.height == 2


def test_parse_six_leaf_document():
    doc = {"root": {"label": "MAX", "children": [
        {"label": "MIN", "children": [{"leaf": n} for n in "abc"]},
        {"label": "MIN", "children": [{"leaf": n} for n in "def"]}]}}
    t = parse_tree(json.dumps(doc))
    assert t.n_leaves == 6 and t.height == 2


@pytest.mark.parametrize("text", ["", "   ", "{", '{"root": {"label": "MAX"}}', '{"root": {"leaf": 3}}',
                                  '{"root": {"label": "AVG", "children": [{"leaf": "a"}]}}', "[]"])
def test_syntax_errors(text):
    with pytest.raises(TreeSyntaxError):
        parse_tree(text)


def test_syntax_error_position():
    with pytest.raises(TreeSyntaxError) as info:
        parse_tree('{"root":\n  {"label": MAX}}')
    assert info.value.line == 2


def test_duplicate_leaf_names_are_syntax_errors():
    with pytest.raises(TreeSyntaxError):
        parse_tree('{"root": {"label":"MAX","children":[{"leaf":"a"},{"leaf":"a"}]}}')


def test_means_round_trip_and_errors():
    t = parse_tree(SAMPLE)
    means = parse_means('{"a": 0.1, "b": 0.2, "c": 0.3}', t)
    assert means == [0.1, 0.2, 0.3]
    assert parse_means(serialize_means(t, means), t) == means
    with pytest.raises(ValueError):
        parse_means('{"a": 0.1, "b": 0.2}', t)
    with pytest.raises(ValueError):
        parse_means('{"a": 0.1, "b": 0.2, "c": 0.3, "z": 1}', t)


@given(trees())
def test_serialize_parse_round_trip(t):
    text = serialize_tree(t)
    back = parse_tree(text)
    assert back == t
    assert serialize_tree(back) == text


@given(trees(), st.integers(0, 2**32 - 1))
def test_answer_depends_only_on_descendants(t, seed):
    rng = np.random.default_rng(seed)
    means = random_means(rng, t, BERN)
    before = node_answers(t, means, 0.5)
    i = int(rng.integers(t.n_leaves))
    moved = list(means)
    moved[i] = float(rng.uniform(0.0, 1.0))
    after = node_answers(t, moved, 0.5)
    leaf_node = t.leaves[i]
    for s in range(t.n_nodes):
        if s not in t.path_to_root(leaf_node):
            assert before[s] == after[s]


@given(trees(), st.integers(0, 2**32 - 1))
def test_root_value_monotone_in_each_leaf(t, seed):
    rng = np.random.default_rng(seed)
    means = random_means(rng, t, BERN)
    i = int(rng.integers(t.n_leaves))
    up = list(means)
    up[i] += float(rng.uniform(0.0, 0.5))
    assert value(t, t.root, up) >= value(t, t.root, means)


def test_complete_tree_shape_and_labels():
    t = complete_tree(3, 3)
    assert t.n_leaves == 27 and t.height == 3
    for s in range(t.n_nodes):
        if t.children[s]:
            assert t.labels[s] == (MAX if t.depth[s] % 2 == 0 else MIN)
            assert len(t.children[s]) == 3


def test_leaf_index_is_document_order():
    t = random_tree(np.random.default_rng(7), 4, 3)
    assert [t.leaf_index[s] for s in t.leaves] == list(range(t.n_leaves))
    assert list(t.leaves) == sorted(t.leaves)
    for s in range(t.n_nodes):
        below = [t.leaf_index[x] for x in range(t.n_nodes)
                 if not t.children[x] and s in t.path_to_root(x)]
        assert t.descendant_leaves(s) == sorted(below)

