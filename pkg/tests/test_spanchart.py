import numpy as np
import pytest

from headspan.oracle import brute_force_best_span_tree
from headspan.scoring import SENTINEL, SpanScoreTable
from headspan.spanchart import (ChartError, backtrack, cost_augmented_parse, fill_chart,
                                parse_spans)
from headspan.synthetic import random_projective_heads
from headspan.treebank import DepTree, extract_headed_spans, is_projective, span_hamming

from conftest import FIG1_HEADS, FIG1_SPANS


def test_single_word():
    table = SpanScoreTable.from_dict(1, {(0, 1, 1): 2.5})
    chart = fill_chart(1, table)
    assert chart.alpha[0, 1] == 2.5
    assert chart.B[0, 1] == 1 and chart.H[0, 1] == 1
    res = backtrack(chart, 1)
    assert res.tree.heads == (0,)
    assert list(res.spans) == [(0, 1, 1)]


def test_two_words_zero_scores():
    chart = fill_chart(2, SpanScoreTable(2))
    assert chart.alpha[0, 2] == 0
    # tie between heads 1 and 2 goes to the smaller head
    assert chart.H[0, 2] == 1


def test_empty_sentence_rejected():
    with pytest.raises(ValueError):
        fill_chart(0, SpanScoreTable(1))


def test_n3_matches_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(50):
        table = SpanScoreTable.random(3, rng)
        _, best = brute_force_best_span_tree(3, table)
        assert fill_chart(3, table).alpha[0, 3] == best


def test_fig1_indicator_scores():
    table = SpanScoreTable.from_dict(10, {s: 1.0 for s in FIG1_SPANS}, default=-1000.0)
    res = parse_spans(10, table)
    assert res.tree.heads == FIG1_HEADS
    assert res.score == 10.0
    assert set(map(tuple, res.spans)) == FIG1_SPANS


def test_root_cell_is_single_headed_span():
    # concatenating (0,1,1) and (1,2,2) would score 10, but that is two roots
    table = SpanScoreTable.from_dict(2, {(0, 1, 1): 5, (1, 2, 2): 5}, default=-5)
    res = parse_spans(2, table)
    assert res.score == 0
    assert res.tree.heads.count(0) == 1


@pytest.mark.parametrize("n", range(2, 8))
def test_random_tables_match_brute_force(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(84):
        table = SpanScoreTable.random(n, rng)
        res = parse_spans(n, table)
        _, best = brute_force_best_span_tree(n, table)
        assert res.score == best
        assert table.tree_score(res.spans) == res.score
        assert extract_headed_spans(res.tree) == res.spans


def test_optimality_n8_and_float_scores():
    rng = np.random.default_rng(8)
    for _ in range(10):
        table = SpanScoreTable.random(8, rng)
        assert parse_spans(8, table).score == brute_force_best_span_tree(8, table)[1]
    for n in (4, 6):
        for _ in range(20):
            blocks = [np.zeros((n + 1, 0))] + [rng.normal(size=(n - w + 1, w))
                                                for w in range(1, n + 1)]
            table = SpanScoreTable(n, blocks)
            assert abs(parse_spans(n, table).score - brute_force_best_span_tree(n, table)[1]) <= 1e-9


def test_chart_invariants():
    rng = np.random.default_rng(11)
    n = 9
    chart = fill_chart(n, SpanScoreTable.random(n, rng))
    assert np.all(np.diag(chart.alpha) == 0)
    for i in range(n):
        for j in range(i + 1, n + 1):
            if chart.B[i, j] == 1:
                assert i < chart.H[i, j] <= j
            else:
                assert i < chart.C[i, j] < j


def test_shift_invariance():
    rng = np.random.default_rng(5)
    for n in (3, 5, 7):
        for c in (-3.0, 2.0, 7.0):
            table = SpanScoreTable.random(n, rng)
            base = parse_spans(n, table)
            shifted_table = table.shifted(c)
            shifted = parse_spans(n, shifted_table)
            assert shifted.score == base.score + n * c
            # the original argmax is still optimal under the shifted scores
            assert shifted_table.tree_score(base.spans) == shifted.score


def test_wellformed_output_long_sentence():
    rng = np.random.default_rng(0)
    n = 60
    blocks = [np.zeros((n + 1, 0))] + [rng.normal(size=(n - w + 1, w)) for w in range(1, n + 1)]
    table = SpanScoreTable(n, blocks)
    res = parse_spans(n, table)
    assert res.tree.is_well_formed() and is_projective(res.tree)
    assert abs(table.tree_score(res.spans) - res.score) <= 1e-9


def test_sentinel_survives():
    table = SpanScoreTable.from_dict(4, {(0, 4, 2): 1.0, (0, 1, 1): 1.0, (2, 4, 3): 1.0,
                                         (3, 4, 4): 1.0}, default=SENTINEL)
    res = parse_spans(4, table)
    assert res.tree.heads == (2, 0, 2, 3)
    assert res.score == 4.0


def test_inconsistent_tables_raise():
    chart = fill_chart(3, SpanScoreTable(3))
    chart.H[0, 3] = 7
    with pytest.raises(ChartError):
        backtrack(chart, 3)


# -- cost augmentation ---------------------------------------------------------

def test_cost_zero_is_plain_parse():
    rng = np.random.default_rng(1)
    table = SpanScoreTable.random(5, rng)
    gold = extract_headed_spans(DepTree(random_projective_heads(5, rng)))
    a = cost_augmented_parse(5, table, gold, 0.0)
    b = parse_spans(5, table)
    assert a.tree == b.tree and a.score == b.score


def test_cost_two_words_zero_scores():
    # gold (2, 0) has spans (0,1,1), (0,2,2); the other tree (0, 1) has (0,2,1), (1,2,2)
    gold = extract_headed_spans(DepTree((2, 0)))
    res = cost_augmented_parse(2, SpanScoreTable(2), gold, 1.0)
    assert res.tree.heads == (0, 1)
    assert res.score == 2.0


@pytest.mark.parametrize("n", range(2, 7))
def test_cost_augmented_matches_brute_force(n):
    rng = np.random.default_rng(200 + n)
    for _ in range(100):
        table = SpanScoreTable.random(n, rng)
        gold = extract_headed_spans(DepTree(random_projective_heads(n, rng)))
        cost = float(rng.integers(1, 4))
        res = cost_augmented_parse(n, table, gold, cost)
        _, best = brute_force_best_span_tree(n, table, gold, cost)
        assert res.score == best
        assert table.tree_score(res.spans) + cost * span_hamming(res.spans, gold) == res.score


def test_cost_rejects_bad_gold():
    from headspan.treebank import SpanSet, TreeStructureError
    bad = SpanSet([(0, 1, 1), (1, 2, 2)])
    with pytest.raises(TreeStructureError):
        cost_augmented_parse(2, SpanScoreTable(2), bad, 1.0)
