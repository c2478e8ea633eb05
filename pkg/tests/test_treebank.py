import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from headspan.oracle import enumerate_projective_trees
from headspan.synthetic import random_projective_heads
from headspan.treebank import (ConlluError, DepTree, NonProjectiveError, Sentence, SpanSet,
                               TreeStructureError, extract_headed_spans, is_projective,
                               read_conllu, read_conllu_file, spans_to_tree, write_conllu)

from conftest import FIG1_HEADS, FIG1_SPANS


def _line(i, form, head, label="dep", upos="X"):
    return "\t".join([str(i), form, "_", upos, "_", "_", str(head), label, "_", "_"])


def test_read_two_tokens():
    text = "\n".join([_line(1, "hello", 2), _line(2, "world", 0, "root")]) + "\n\n"
    [(sent, tree)] = read_conllu(text)
    assert sent.n == 2
    assert sent.forms == ["hello", "world"]
    assert tree.heads == (2, 0)
    assert tree.labels == ("dep", "root")


def test_read_fig1(fig1):
    sent, tree = fig1
    assert sent.id == "fig1"
    assert tree.heads == FIG1_HEADS
    assert tree.head(6) == 0


@pytest.mark.parametrize("bad, lineno, fragment", [
    ([_line(1, "a", 0), _line(2, "b", "x")], 2, "non-integer head"),
    ([_line(1, "a", 0), "2\tb\t_"], 2, "expected 10 columns"),
    ([_line(1, "a", 0), _line(2, "b", 7)], 2, "out of range"),
    ([_line(1, "a", 0), _line(1, "b", 1)], 2, "duplicate"),
])
def test_read_errors_name_line(bad, lineno, fragment):
    with pytest.raises(ConlluError, match=f"line {lineno}: .*{fragment}"):
        read_conllu("\n".join(bad) + "\n")


def test_multiword_and_empty_nodes_skipped():
    text = "\n".join([
        "# sent_id = mw",
        "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_",
        _line(1, "de", 2), _line(2, "el", 0, "root"),
        "2.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_",
    ]) + "\n"
    [(sent, tree)] = read_conllu(text)
    assert sent.forms == ["de", "el"]
    assert tree.heads == (2, 0)


def test_write_empty_and_single():
    assert write_conllu([]) == ""
    sent = Sentence.from_words(["x"])
    out = write_conllu([(sent, DepTree((0,), ("root",)))])
    lines = out.split("\n")
    assert lines[0].split("\t")[6] == "0"
    assert lines[1:] == ["", ""]  # one data line, one blank separator


def test_round_trip_fixture(data_dir):
    for name in ("fig1.conllu", "nonproj.conllu"):
        items = read_conllu_file(data_dir / name)
        again = read_conllu(write_conllu(items))
        assert [(s.forms, t.heads, t.labels) for s, t in items] == \
               [(s.forms, t.heads, t.labels) for s, t in again]
        assert [s.tokens for s, _ in items] == [s.tokens for s, _ in again]


def test_round_trip_is_text_identical(data_dir):
    text = (data_dir / "fig1.conllu").read_text(encoding="utf-8")
    assert write_conllu(read_conllu(text)) == text


def test_is_projective_examples(fig1_tree):
    assert is_projective(fig1_tree)
    assert is_projective(DepTree((0,)))
    # word 3 hangs off 4, which hangs off 2: yields {1},{1,2,3,4},{3},{3,4}
    assert is_projective(DepTree((2, 0, 4, 2)))
    # word 4 yields {2, 4} around its own head 3
    assert not is_projective(DepTree((3, 4, 0, 3)))


def test_problems_detects_bad_trees():
    assert DepTree((0, 0)).problems()
    assert DepTree((2, 1, 0)).problems()  # 1 <-> 2 cycle
    assert DepTree((1,)).problems()
    with pytest.raises(TreeStructureError):
        DepTree((2, 3, 1)).check()


def test_extract_fig1(fig1_tree):
    spans = extract_headed_spans(fig1_tree)
    assert set(map(tuple, spans)) == FIG1_SPANS
    assert (0, 5, 2) in spans
    assert spans.span_of(1) == (0, 1, 1)
    assert spans.span_of(3) == (2, 5, 3)


def test_extract_single_word():
    assert list(extract_headed_spans(DepTree((0,)))) == [(0, 1, 1)]


def test_extract_rejects_nonprojective():
    with pytest.raises(NonProjectiveError):
        extract_headed_spans(DepTree((3, 4, 0, 3)))


def test_spans_to_tree_fig1():
    tree = spans_to_tree(SpanSet(FIG1_SPANS))
    assert tree.heads == FIG1_HEADS
    # (0,1) sits inside (0,5), (0,10); the smallest container is headed by word 2
    assert tree.head(1) == 2
    assert spans_to_tree([(0, 1, 1)]).heads == (0,)


def test_spans_to_tree_errors():
    with pytest.raises(TreeStructureError):
        spans_to_tree([(0, 2, 1), (1, 3, 2), (0, 3, 3)])  # crossing
    with pytest.raises(TreeStructureError):
        spans_to_tree([(0, 1, 1), (1, 2, 2)])  # no (0, n)


@pytest.mark.parametrize("n", range(1, 8))
def test_round_trip_all_trees(n):
    for tree in enumerate_projective_trees(n):
        spans = extract_headed_spans(tree)
        assert not spans.problems()
        assert spans_to_tree(spans) == tree


def _ancestors(tree, d):
    out = set()
    while tree.head(d):
        d = tree.head(d)
        out.add(d)
    return out


def random_trees(max_n=12):
    return st.builds(lambda n, seed: DepTree(random_projective_heads(n, np.random.default_rng(seed))),
                     st.integers(1, max_n), st.integers(0, 2**32 - 1))


@given(random_trees())
@settings(max_examples=150, deadline=None)
def test_containment_iff_ancestry(tree):
    spans = extract_headed_spans(tree)
    for a in spans:
        for b in spans:
            if a.h == b.h:
                continue
            contains = a.l <= b.l and b.r <= a.r
            assert contains == (a.h in _ancestors(tree, b.h))


@given(st.integers(1, 6).flatmap(
    lambda n: st.lists(st.integers(0, n), min_size=n, max_size=n)))
@settings(max_examples=300, deadline=None)
def test_projective_iff_extractable(heads):
    tree = DepTree(tuple(heads))
    if not tree.is_well_formed():
        return
    try:
        extract_headed_spans(tree)
        ok = True
    except NonProjectiveError:
        ok = False
    assert ok == is_projective(tree)
