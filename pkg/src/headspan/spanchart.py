"""Exact O(n^3) inference over headed spans.

Chart items:

* ``alpha[i, j]`` -- best score of fencepost interval ``(i, j)`` used as a
  left or right child span, i.e. a concatenation of one or more sibling
  headed spans.
* ``beta(i, j, h) = alpha[i, h-1] + alpha[h, j] + s(i, j, h)`` -- best score
  of the headed span ``(i, j, h)``. It is never stored; ``H`` keeps the
  winning head of each cell instead.

``alpha[i, j]`` is the larger of the best split ``alpha[i, k] + alpha[k, j]``
and the best ``beta(i, j, h)``. The top cell ``(0, n)`` admits only the
headed-span case, since a parse has exactly one word attached to ROOT.

Tables are filled one width at a time, vectorized over all start points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scoring import SpanScoreTable
from .treebank import DepTree, SpanSet, extract_headed_spans


class ChartError(RuntimeError):
    """Backtrack tables are inconsistent with each other."""


@dataclass
class Chart:
    n: int
    alpha: np.ndarray  # (n+1, n+1)
    B: np.ndarray      # 1: headed span, 0: split
    C: np.ndarray      # split point when B == 0
    H: np.ndarray      # head word when B == 1 (always filled for i < j)

    @property
    def score(self) -> float:
        return float(self.alpha[0, self.n])


@dataclass
class ParseResult:
    tree: DepTree
    spans: SpanSet
    score: float


def fill_chart(n: int, scores: SpanScoreTable) -> Chart:
    if n < 1:
        raise ValueError("cannot parse an empty sentence")
    if scores.n != n:
        raise ValueError(f"score table is for n={scores.n}, not {n}")
    alpha = np.zeros((n + 1, n + 1))
    B = np.zeros((n + 1, n + 1), dtype=np.int8)
    C = np.full((n + 1, n + 1), -1, dtype=np.int64)
    H = np.full((n + 1, n + 1), -1, dtype=np.int64)

    for w in range(1, n + 1):
        starts = np.arange(n - w + 1)
        i = starts[:, None]
        j = starts + w

        # headed span (i, i+w, h) with h = i+1+m
        m = np.arange(w)[None, :]
        beta = alpha[i, i + m] + alpha[i + m + 1, i + w] + scores.width(w)
        hbest = beta.argmax(axis=1)
        bbest = beta[starts, hbest]
        H[starts, j] = starts + 1 + hbest

        if w == 1 or w == n:
            alpha[starts, j] = bbest
            B[starts, j] = 1
            continue

        # split (i, k) + (k, i+w) with k = i+1+m
        m = np.arange(w - 1)[None, :]
        conc = alpha[i, i + m + 1] + alpha[i + m + 1, i + w]
        kbest = conc.argmax(axis=1)
        cbest = conc[starts, kbest]
        C[starts, j] = starts + 1 + kbest

        headed = bbest >= cbest
        alpha[starts, j] = np.where(headed, bbest, cbest)
        B[starts, j] = headed
    return Chart(n, alpha, B, C, H)


def backtrack(chart: Chart, n: int | None = None) -> ParseResult:
    """Recover the tree from the backtrack tables.

    Every cell is either one headed span (whose head takes the heads of
    its left and right child spans as dependents) or a split into two
    adjacent child spans. Runs with an explicit stack so long sentences do
    not hit the recursion limit.
    """
    n = chart.n if n is None else n
    if n != chart.n:
        raise ValueError("chart was filled for a different length")
    B, C, H = chart.B, chart.C, chart.H
    heads = [-1] * (n + 1)

    # (i, j, parent): collect the heads of child span (i, j) under `parent`
    if B[0, n] != 1:
        raise ChartError("top cell is not a headed span")
    stack = [(0, n, 0)]
    while stack:
        i, j, parent = stack.pop()
        if B[i, j] == 1:
            h = int(H[i, j])
            if not i < h <= j:
                raise ChartError(f"head {h} outside cell ({i}, {j})")
            if heads[h] != -1:
                raise ChartError(f"word {h} attached twice")
            heads[h] = parent
            if h - 1 > i:
                stack.append((i, h - 1, h))
            if j > h:
                stack.append((h, j, h))
        else:
            k = int(C[i, j])
            if not i < k < j:
                raise ChartError(f"split {k} outside cell ({i}, {j})")
            stack.append((k, j, parent))
            stack.append((i, k, parent))
    if -1 in heads[1:]:
        raise ChartError("some words were never attached")
    tree = DepTree(tuple(heads[1:]))
    return ParseResult(tree, extract_headed_spans(tree), chart.score)


def parse_spans(n: int, scores: SpanScoreTable) -> ParseResult:
    return backtrack(fill_chart(n, scores), n)


def cost_augmented_parse(n: int, scores: SpanScoreTable, gold: SpanSet,
                         cost: float) -> ParseResult:
    """Argmax of ``s(y) + cost * hamming(y, gold)``; the reported score is the augmented one."""
    if cost < 0:
        raise ValueError("cost must be non-negative")
    if cost == 0:
        gold.check()
        return parse_spans(n, scores)
    return parse_spans(n, scores.with_hamming_cost(gold, cost))
