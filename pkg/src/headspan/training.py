"""Training the feature scorer: structured hinge, local span selection, label CE."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .scoring import FeatureScorer, predict_labels
from .spanchart import cost_augmented_parse, parse_spans
from .treebank import (DepTree, NonProjectiveError, Sentence, SpanSet,
                       extract_headed_spans, span_hamming)

log = logging.getLogger(__name__)

LOSS_KINDS = ("max_margin", "span_selection")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 0.1
    cost: float = 1.0
    loss_kind: str = "max_margin"
    shuffle_seed: int = 0
    l2: float = 0.0
    hash_bits: int = 22
    use_pos: bool = True
    train_labels: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.cost < 0:
            raise ValueError("cost must be non-negative")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        kind = self.loss_kind.replace("-", "_")
        if kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}")
        object.__setattr__(self, "loss_kind", kind)


@dataclass
class LossReport:
    parse_loss: float = 0.0
    label_loss: float = 0.0

    @property
    def total(self) -> float:
        return self.parse_loss + self.label_loss

    def __add__(self, other: "LossReport") -> "LossReport":
        return LossReport(self.parse_loss + other.parse_loss, self.label_loss + other.label_loss)


@dataclass
class EpochLog:
    epoch: int
    mean: LossReport
    steps: int
    nonzero_hinge: int = 0


def _gold_spans(tree: DepTree) -> SpanSet:
    try:
        return extract_headed_spans(tree)
    except NonProjectiveError as exc:
        raise NonProjectiveError(f"gold tree must be projective: {exc}") from None


def _apply(weights: np.ndarray, ids: np.ndarray, coefs: np.ndarray, lr: float, l2: float) -> None:
    if l2:
        weights *= 1.0 - lr * l2
    np.add.at(weights, ids, -lr * coefs)


def _logsumexp(x: np.ndarray, axis=None) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    out = m + np.log(np.exp(x - m).sum(axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis) if axis is not None else out.item()


# -- structured hinge --------------------------------------------------------

def hinge_loss(scorer: FeatureScorer, sent: Sentence, gold_tree: DepTree, cost: float = 1.0):
    """Return ``(loss, predicted ParseResult, gold spans)`` without touching weights.

    The loss is ``s(y') + cost * hamming(y', gold) - s(gold)`` for the
    cost-augmented argmax ``y'``, recomputed from the decoded spans and
    clipped at zero.
    """
    gold = _gold_spans(gold_tree)
    table = scorer.score_spans(sent)
    pred = cost_augmented_parse(sent.n, table, gold, cost)
    margin = table.tree_score(pred.spans) + cost * span_hamming(pred.spans, gold)
    loss = max(0.0, margin - table.tree_score(gold))
    return loss, pred, gold


def max_margin_step(scorer: FeatureScorer, sent: Sentence, gold_tree: DepTree,
                    cost: float = 1.0, lr: float = 0.1, l2: float = 0.0) -> LossReport:
    loss, pred, gold = hinge_loss(scorer, sent, gold_tree, cost)
    if loss > 0:
        feats = scorer.span_features(sent)
        ids = np.concatenate([feats.of_spans(pred.spans), feats.of_spans(gold)])
        half = len(ids) // 2
        coefs = np.concatenate([np.ones(half), -np.ones(len(ids) - half)])
        _apply(scorer.weights, ids, coefs, lr, l2)
    return LossReport(parse_loss=loss)


# -- local span selection ----------------------------------------------------

def span_candidates(n: int, k: int) -> list[tuple[int, int]]:
    """Boundaries ``(p, q)`` with ``p < k <= q`` that word k could head."""
    return [(p, q) for p in range(k) for q in range(k, n + 1)]


def span_selection_loss(scorer: FeatureScorer, sent: Sentence, gold_tree: DepTree):
    """Summed per-word ``-log softmax`` of the gold span among the word's candidates.

    Returns ``(loss, ids, coefs)`` where the gradient with respect to
    ``scorer.weights`` is the scatter-sum of ``coefs`` at ``ids``.
    """
    gold = _gold_spans(gold_tree)
    n = sent.n
    feats = scorer.span_features(sent)
    dense = scorer.score_spans(sent).dense()
    loss = 0.0
    ids, coefs = [], []
    for k in range(1, n + 1):
        cand = dense[:k, k:, k]  # (p, q - k)
        lse = _logsumexp(cand)
        g = gold.span_of(k)
        loss += lse - cand[g.l, g.r - k]
        prob = np.exp(cand - lse)
        for p in range(k):
            for q in range(k, n + 1):
                f = feats.of(p, q, k)
                ids.append(f)
                coefs.append(np.full(len(f), prob[p, q - k]))
        f = feats.of(g.l, g.r, k)
        ids.append(f)
        coefs.append(np.full(len(f), -1.0))
    return float(loss), np.concatenate(ids), np.concatenate(coefs)


def span_selection_loss_step(scorer: FeatureScorer, sent: Sentence, gold_tree: DepTree,
                             lr: float = 0.1, l2: float = 0.0) -> LossReport:
    loss, ids, coefs = span_selection_loss(scorer, sent, gold_tree)
    _apply(scorer.weights, ids, coefs, lr, l2)
    return LossReport(parse_loss=loss)


# -- labels ------------------------------------------------------------------

def label_loss(scorer: FeatureScorer, sent: Sentence, gold_tree: DepTree):
    """Cross-entropy of gold arc labels; returns ``(loss, ids, coefs)`` like the span loss."""
    if not scorer.labels:
        raise ValueError("empty label vocabulary")
    try:
        gold_r = np.array([scorer.label_id(lab) for lab in gold_tree.labels])
    except KeyError as exc:
        raise ValueError(f"unknown gold label: {exc}") from None
    arcs = [(h, d) for d, h in enumerate(gold_tree.heads, start=1)]
    ids = scorer.label_feature_ids(scorer.arc_feature_ids(sent, arcs))  # (A, R, F)
    scores = scorer.label_weights[ids].sum(axis=-1)
    lse = _logsumexp(scores, axis=1)
    rows = np.arange(len(arcs))
    loss = float((lse - scores[rows, gold_r]).sum())
    grad = np.exp(scores - lse[:, None])
    grad[rows, gold_r] -= 1.0
    coefs = np.broadcast_to(grad[:, :, None], ids.shape)
    return loss, ids.ravel(), coefs.ravel().copy()


def label_step(scorer: FeatureScorer, sent: Sentence, gold_tree: DepTree,
               lr: float = 0.1, l2: float = 0.0) -> LossReport:
    loss, ids, coefs = label_loss(scorer, sent, gold_tree)
    _apply(scorer.label_weights, ids, coefs, lr, l2)
    return LossReport(label_loss=loss)


# -- epoch loop --------------------------------------------------------------

def label_vocabulary(corpus: Sequence[tuple[Sentence, DepTree]]) -> tuple[str, ...]:
    return tuple(sorted({lab for _, tree in corpus for lab in tree.labels}))


def train(corpus: Sequence[tuple[Sentence, DepTree]], config: TrainConfig,
          scorer: FeatureScorer | None = None,
          on_step: Callable[[int, int, LossReport], None] | None = None):
    """Plain SGD over shuffled sentences; returns ``(scorer, [EpochLog, ...])``.

    ``corpus`` must already be restricted to projective trees.
    ``on_step(epoch, index, report)`` sees every per-sentence report.
    """
    if not corpus:
        raise ValueError("empty training corpus")
    if scorer is None:
        scorer = FeatureScorer(label_vocabulary(corpus), config.hash_bits, config.use_pos)
    rng = np.random.default_rng(config.shuffle_seed)
    history = []
    for epoch in range(1, config.epochs + 1):
        total = LossReport()
        nonzero = 0
        for idx in rng.permutation(len(corpus)):
            sent, tree = corpus[idx]
            if config.loss_kind == "max_margin":
                rep = max_margin_step(scorer, sent, tree, config.cost,
                                      config.learning_rate, config.l2)
                nonzero += rep.parse_loss > 0
            else:
                rep = span_selection_loss_step(scorer, sent, tree,
                                               config.learning_rate, config.l2)
            if config.train_labels:
                rep = rep + label_step(scorer, sent, tree, config.learning_rate, config.l2)
            if on_step is not None:
                on_step(epoch, int(idx), rep)
            total = total + rep
        m = len(corpus)
        entry = EpochLog(epoch, LossReport(total.parse_loss / m, total.label_loss / m), m, nonzero)
        history.append(entry)
        log.info("epoch %d parse=%.4f label=%.4f", epoch, entry.mean.parse_loss,
                 entry.mean.label_loss)
    return scorer, history


def predict(scorer: FeatureScorer, sent: Sentence, labels: bool = True) -> DepTree:
    tree = parse_spans(sent.n, scorer.score_spans(sent)).tree
    if labels and scorer.labels:
        arcs = [(h, d) for d, h in enumerate(tree.heads, start=1)]
        tree = predict_labels(scorer.score_labels(sent, arcs), tree)
    return tree
