import math

import numpy as np
import pytest

from headspan.scoring import FeatureScorer
from headspan.spanchart import cost_augmented_parse
from headspan.synthetic import synthetic_treebank
from headspan.training import (LossReport, TrainConfig, hinge_loss, label_loss, label_step,
                               label_vocabulary, max_margin_step, span_candidates,
                               span_selection_loss, span_selection_loss_step, train)
from headspan.treebank import (DepTree, NonProjectiveError, Sentence, extract_headed_spans,
                               span_hamming)


def _sent(n, upos=None):
    return Sentence.from_words([f"w{i}" for i in range(1, n + 1)], upos)


# -- hinge -----------------------------------------------------------------------

def test_zero_weights_loss_is_hamming():
    sent = _sent(5)
    gold = DepTree((2, 0, 2, 3, 4))
    sc = FeatureScorer(hash_bits=16)
    loss, pred, gold_spans = hinge_loss(sc, sent, gold, cost=1.0)
    assert loss == span_hamming(pred.spans, gold_spans) >= 1
    rep = max_margin_step(sc, sent, gold, cost=1.0, lr=0.1)
    assert rep.parse_loss == loss


def test_no_update_when_gold_wins(fig1):
    sent, tree = fig1
    sc = FeatureScorer(hash_bits=18)
    feats = sc.span_features(sent)
    sc.weights[feats.of_spans(extract_headed_spans(tree))] = 20.0
    before = sc.weights.copy()
    rep = max_margin_step(sc, sent, tree, cost=1.0, lr=0.1)
    assert rep.parse_loss == 0
    assert np.array_equal(before, sc.weights)


def test_hinge_reaches_zero_on_fig1(fig1):
    sent, tree = fig1
    sc = FeatureScorer(hash_bits=18)
    for step in range(50):
        if max_margin_step(sc, sent, tree, cost=1.0, lr=0.1).parse_loss == 0:
            break
    else:
        pytest.fail("hinge did not reach zero within 50 steps")


def test_delta_decomposition():
    rng = np.random.default_rng(0)
    sc = FeatureScorer(hash_bits=14)
    sc.weights[:] = rng.normal(size=sc.weights.shape)
    sent = _sent(7)
    gold = extract_headed_spans(DepTree((2, 0, 2, 5, 3, 5, 6)))
    table = sc.score_spans(sent)
    for cost in (0.5, 1.0, 3.0):
        res = cost_augmented_parse(7, table, gold, cost)
        matches = sum(1 for a, b in zip(res.spans, gold) if a == b)
        assert res.score - table.tree_score(res.spans) == pytest.approx(cost * (7 - matches),
                                                                        abs=1e-9)


def test_nonprojective_gold_rejected():
    with pytest.raises(NonProjectiveError):
        max_margin_step(FeatureScorer(hash_bits=8), _sent(4), DepTree((3, 4, 0, 3)))
    with pytest.raises(NonProjectiveError):
        span_selection_loss_step(FeatureScorer(hash_bits=8), _sent(4), DepTree((3, 4, 0, 3)))


# -- span selection ----------------------------------------------------------------

def test_single_word_selection_loss_is_zero():
    rep = span_selection_loss_step(FeatureScorer(hash_bits=8), _sent(1), DepTree((0,)))
    assert rep.parse_loss == 0


def test_two_words_uniform():
    loss, _, _ = span_selection_loss(FeatureScorer(hash_bits=12), _sent(2), DepTree((2, 0)))
    assert loss == pytest.approx(2 * math.log(2), abs=1e-12)


@pytest.mark.parametrize("n", range(1, 7))
def test_candidate_set_size(n):
    for k in range(1, n + 1):
        brute = sum(1 for p in range(n + 1) for q in range(n + 1) if p < k <= q)
        assert len(span_candidates(n, k)) == brute == k * (n - k + 1)


def test_selection_loss_decreases_to_small(fig1):
    sent, tree = fig1
    cfg = TrainConfig(epochs=1000, learning_rate=0.7, loss_kind="span_selection",
                      hash_bits=18, train_labels=False)
    seen = []

    def stop_early(epoch, idx, rep):
        seen.append(rep.parse_loss)
        if rep.parse_loss < 1e-3:
            raise StopIteration

    with pytest.raises(StopIteration):
        train([(sent, tree)], cfg, on_step=stop_early)
    assert all(b < a for a, b in zip(seen, seen[1:]))
    assert seen[-1] < 1e-3


# -- labels ------------------------------------------------------------------------

def test_single_label_loss_zero(fig1):
    sent, tree = fig1
    tree = tree.with_labels(["dep"] * sent.n)
    assert label_step(FeatureScorer(["dep"], hash_bits=12), sent, tree).label_loss == 0


def test_uniform_label_loss(fig1):
    sent, tree = fig1
    tree = tree.with_labels(["a"] * sent.n)
    rep = label_step(FeatureScorer(["a", "b", "c", "d"], hash_bits=12), sent, tree)
    assert rep.label_loss == pytest.approx(sent.n * math.log(4), abs=1e-9)


def test_unknown_label(fig1):
    sent, tree = fig1
    with pytest.raises(ValueError, match="unknown gold label"):
        label_step(FeatureScorer(["x"], hash_bits=8), sent, tree)


# -- gradient checks ---------------------------------------------------------------

SIX = Sentence.from_words(["the", "cat", "sat", "on", "a", "mat"],
                          ["DET", "NOUN", "VERB", "ADP", "DET", "NOUN"])
SIX_TREE = DepTree((2, 3, 0, 6, 6, 3), ("det", "nsubj", "root", "case", "det", "obl"))


def _grad_check(loss_fn, weights, ids, coefs, rng, eps=1e-4, samples=20):
    uniq = np.unique(ids)
    grad = np.zeros(len(uniq))
    np.add.at(grad, np.searchsorted(uniq, ids), coefs)
    picks = rng.choice(len(uniq), size=min(samples, len(uniq)), replace=False)
    errs = []
    for p in picks:
        i = uniq[p]
        old = weights[i]
        weights[i] = old + eps
        up = loss_fn()
        weights[i] = old - eps
        down = loss_fn()
        weights[i] = old
        numeric = (up - down) / (2 * eps)
        errs.append(abs(numeric - grad[p]) / max(abs(numeric), abs(grad[p]), 1e-8))
    return max(errs)


def test_span_selection_gradient():
    rng = np.random.default_rng(0)
    sc = FeatureScorer(hash_bits=16)
    _, ids, _ = span_selection_loss(sc, SIX, SIX_TREE)
    sc.weights[np.unique(ids)] = rng.normal(scale=0.3, size=len(np.unique(ids)))
    _, ids, coefs = span_selection_loss(sc, SIX, SIX_TREE)
    err = _grad_check(lambda: span_selection_loss(sc, SIX, SIX_TREE)[0],
                      sc.weights, ids, coefs, rng)
    assert err <= 1e-4


def test_label_gradient():
    rng = np.random.default_rng(1)
    sc = FeatureScorer(label_vocabulary([(SIX, SIX_TREE)]), hash_bits=16)
    _, ids, _ = label_loss(sc, SIX, SIX_TREE)
    sc.label_weights[np.unique(ids)] = rng.normal(scale=0.3, size=len(np.unique(ids)))
    _, ids, coefs = label_loss(sc, SIX, SIX_TREE)
    err = _grad_check(lambda: label_loss(sc, SIX, SIX_TREE)[0],
                      sc.label_weights, ids, coefs, rng)
    assert err <= 1e-4


# -- epoch loop --------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ValueError):
        TrainConfig(loss_kind="hinge")
    assert TrainConfig(loss_kind="span-selection").loss_kind == "span_selection"


def test_empty_corpus():
    with pytest.raises(ValueError):
        train([], TrainConfig(epochs=1))


def test_same_seed_same_weights():
    tb = synthetic_treebank(8, seed=3)
    cfg = TrainConfig(epochs=3, hash_bits=16, shuffle_seed=5)
    a, log_a = train(tb, cfg)
    b, log_b = train(tb, cfg)
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.label_weights, b.label_weights)
    assert [e.mean for e in log_a] == [e.mean for e in log_b]


def test_loss_report_total():
    rep = LossReport(1.5, 0.25) + LossReport(0.5, 0.75)
    assert rep.total == 3.0
