"""Ground truth for the chart parser: tree enumeration, brute force, Eisner.

Nothing here shares code with :mod:`headspan.spanchart`.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterator

import numpy as np

from .scoring import ArcScoreTable, SpanScoreTable
from .treebank import DepTree, SpanSet, extract_headed_spans, is_projective

MAX_ENUM_N = 10


def _guard(n: int) -> None:
    if not 1 <= n <= MAX_ENUM_N:
        raise ValueError(f"enumeration supports 1 <= n <= {MAX_ENUM_N}, got {n}")


def _subtrees(a: int, b: int) -> Iterator[tuple[int, dict[int, int]]]:
    """All projective trees over words a..b as (root, {dep: head})."""
    for h in range(a, b + 1):
        for left in _forests(a, h - 1):
            for right in _forests(h + 1, b):
                heads = {}
                for root, sub in left + right:
                    heads.update(sub)
                    heads[root] = h
                yield h, heads


def _forests(a: int, b: int) -> Iterator[list[tuple[int, dict[int, int]]]]:
    """All sequences of adjacent subtrees exactly covering words a..b."""
    if a > b:
        yield []
        return
    for m in range(a, b + 1):
        for first in _subtrees(a, m):
            for rest in _forests(m + 1, b):
                yield [first] + rest


def enumerate_projective_trees(n: int) -> Iterator[DepTree]:
    """Yield every projective tree over n words exactly once."""
    _guard(n)
    for root, heads in _subtrees(1, n):
        heads[root] = 0
        yield DepTree(tuple(heads[d] for d in range(1, n + 1)))


def filter_projective_trees(n: int) -> Iterator[DepTree]:
    """Independent count oracle: scan all n^n head arrays, keep valid projective ones."""
    _guard(n)
    for heads in itertools.product(range(n + 1), repeat=n):
        if heads.count(0) != 1:
            continue
        if any(h == d for d, h in enumerate(heads, start=1)):
            continue
        tree = DepTree(heads)
        if tree.is_well_formed() and is_projective(tree):
            yield tree


@lru_cache(maxsize=None)
def _span_index(n: int) -> tuple[tuple[DepTree, ...], np.ndarray]:
    """Enumerated trees and the flat ``[l, r, h]`` indices of their spans."""
    trees = tuple(enumerate_projective_trees(n))
    size = n + 1
    idx = np.array([[(s.l * size + s.r) * size + s.h for s in extract_headed_spans(t)]
                    for t in trees], dtype=np.int64)
    return trees, idx


def brute_force_best_span_tree(n: int, scores: SpanScoreTable, gold: SpanSet | None = None,
                               cost: float = 0.0) -> tuple[DepTree, float]:
    """Exhaustive argmax of the span-factored score (plus ``cost`` per span mismatch)."""
    _guard(n)
    trees, idx = _span_index(n)
    flat = scores.dense().ravel()
    totals = flat[idx].sum(axis=1)
    if gold is not None and cost:
        size = n + 1
        gidx = np.array([(s.l * size + s.r) * size + s.h for s in gold])
        mismatches = (idx != gidx[None, :]).sum(axis=1)
        totals = totals + cost * mismatches
    best = int(np.argmax(totals))
    return trees[best], float(totals[best])


def brute_force_best_arc_tree(n: int, arcs: ArcScoreTable) -> tuple[DepTree, float]:
    _guard(n)
    trees, _ = _span_index(n)
    heads = np.array([t.heads for t in trees])
    deps = np.arange(1, n + 1)[None, :]
    totals = arcs.values[heads, deps].sum(axis=1)
    best = int(np.argmax(totals))
    return trees[best], float(totals[best])


def eisner_parse(n: int, arc_scores: ArcScoreTable) -> tuple[DepTree, float]:
    """First-order projective argmax with exactly one word attached to ROOT.

    Complete/incomplete items are built over words 1..n only; the root word
    is chosen last, joining a left-facing and a right-facing complete span.
    """
    s = arc_scores.values
    NEG = -np.inf
    # [s][t][d]: d = 0 head on the right (t), d = 1 head on the left (s)
    comp = np.full((n + 2, n + 2, 2), NEG)
    inc = np.full((n + 2, n + 2, 2), NEG)
    comp_bp = np.zeros((n + 2, n + 2, 2), dtype=np.int64)
    inc_bp = np.zeros((n + 2, n + 2, 2), dtype=np.int64)
    for k in range(1, n + 1):
        comp[k, k, 0] = comp[k, k, 1] = 0.0

    for width in range(1, n):
        for a in range(1, n - width + 1):
            b = a + width
            # link: comp[a][r] (right-facing) + comp[r+1][b] (left-facing)
            best, arg = NEG, a
            for r in range(a, b):
                v = comp[a, r, 1] + comp[r + 1, b, 0]
                if v > best:
                    best, arg = v, r
            inc[a, b, 0] = best + s[b, a]
            inc[a, b, 1] = best + s[a, b]
            inc_bp[a, b, 0] = inc_bp[a, b, 1] = arg
            # left-facing complete: comp[a][r] (head r, facing left) + inc[r][b] (head b)
            best, arg = NEG, a
            for r in range(a, b):
                v = comp[a, r, 0] + inc[r, b, 0]
                if v > best:
                    best, arg = v, r
            comp[a, b, 0], comp_bp[a, b, 0] = best, arg
            best, arg = NEG, a + 1
            for r in range(a + 1, b + 1):
                v = inc[a, r, 1] + comp[r, b, 1]
                if v > best:
                    best, arg = v, r
            comp[a, b, 1], comp_bp[a, b, 1] = best, arg

    best, root = NEG, 1
    for h in range(1, n + 1):
        v = comp[1, h, 0] + comp[h, n, 1] + s[0, h]
        if v > best:
            best, root = v, h

    heads = [0] * (n + 1)
    heads[root] = 0
    stack = [("c", 1, root, 0), ("c", root, n, 1)]
    while stack:
        kind, a, b, d = stack.pop()
        if a == b:
            continue
        if kind == "c":
            r = int(comp_bp[a, b, d])
            if d == 0:
                stack += [("c", a, r, 0), ("i", r, b, 0)]
            else:
                stack += [("i", a, r, 1), ("c", r, b, 1)]
        else:
            r = int(inc_bp[a, b, d])
            if d == 0:
                heads[a] = b
            else:
                heads[b] = a
            stack += [("c", a, r, 1), ("c", r + 1, b, 0)]
    tree = DepTree(tuple(heads[1:]))
    return tree, float(best)
