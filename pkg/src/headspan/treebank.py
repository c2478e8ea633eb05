"""CoNLL-U I/O, dependency trees, projectivity and headed-span conversion.

Positions use fenceposts 0..n: word ``k`` occupies the interval ``(k-1, k)``,
so a headed span ``(l, r, h)`` covers words ``l+1 .. r`` and satisfies
``l < h <= r``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence


class ConlluError(ValueError):
    """Malformed CoNLL-U input; the message names the offending line."""


class TreeStructureError(ValueError):
    """A tree or span set violates a structural invariant."""


class NonProjectiveError(TreeStructureError):
    pass


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    upos: str = "_"
    xpos: str = "_"
    feats: str = "_"
    misc: str = "_"
    lemma: str = "_"
    deps: str = "_"


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple[Token, ...]
    comments: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @classmethod
    def from_words(cls, words: Sequence[str], upos: Sequence[str] | None = None,
                   id: str = "s0") -> "Sentence":
        upos = upos if upos is not None else ["_"] * len(words)
        toks = tuple(Token(i + 1, w, p) for i, (w, p) in enumerate(zip(words, upos)))
        return cls(id, toks)


@dataclass(frozen=True)
class DepTree:
    """Head assignment for words 1..n; ``heads[k-1]`` is the head of word k.

    Labels are kept as strings (the CoNLL-U DEPREL values); scorers map them
    to integer ids through their own vocabulary.
    """

    heads: tuple[int, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        heads = tuple(int(h) for h in self.heads)
        object.__setattr__(self, "heads", heads)
        if not self.labels:
            object.__setattr__(self, "labels", ("_",) * len(heads))
        else:
            object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != len(heads):
            raise TreeStructureError("heads and labels differ in length")

    @property
    def n(self) -> int:
        return len(self.heads)

    def head(self, k: int) -> int:
        return self.heads[k - 1]

    def with_labels(self, labels: Sequence[str]) -> "DepTree":
        return DepTree(self.heads, tuple(labels))

    def children(self) -> list[list[int]]:
        """``children()[h]`` lists the dependents of h (0 = ROOT), in order."""
        kids: list[list[int]] = [[] for _ in range(self.n + 1)]
        for d, h in enumerate(self.heads, start=1):
            kids[h].append(d)
        return kids

    def problems(self) -> list[str]:
        """Return the invariant violations of this tree (empty when valid)."""
        n = self.n
        out = []
        if n == 0:
            return ["empty tree"]
        for d, h in enumerate(self.heads, start=1):
            if not 0 <= h <= n:
                out.append(f"head of word {d} out of range: {h}")
            elif h == d:
                out.append(f"word {d} is its own head")
        if out:
            return out
        roots = [d for d, h in enumerate(self.heads, start=1) if h == 0]
        if len(roots) != 1:
            out.append(f"expected exactly one root, found {len(roots)}")
        # every word must reach ROOT without revisiting a node
        state = [0] * (n + 1)  # 0 unknown, 1 reaches root
        state[0] = 1
        for d in range(1, n + 1):
            path = []
            seen = set()
            k = d
            while state[k] == 0:
                if k in seen:
                    out.append(f"cycle through word {k}")
                    break
                seen.add(k)
                path.append(k)
                k = self.heads[k - 1]
            else:
                for p in path:
                    state[p] = 1
                continue
            break
        return out

    def is_well_formed(self) -> bool:
        return not self.problems()

    def check(self) -> "DepTree":
        probs = self.problems()
        if probs:
            raise TreeStructureError("; ".join(probs))
        return self


class HeadedSpan(NamedTuple):
    l: int
    r: int
    h: int

    def valid(self, n: int) -> bool:
        return 0 <= self.l < self.h <= self.r <= n


class SpanSet(tuple):
    """n headed spans; element ``k-1`` is the span headed by word k."""

    __slots__ = ()

    def __new__(cls, spans: Iterable[Sequence[int]]):
        spans = sorted((HeadedSpan(*map(int, s)) for s in spans), key=lambda s: s.h)
        return super().__new__(cls, spans)

    @property
    def n(self) -> int:
        return len(self)

    def span_of(self, k: int) -> HeadedSpan:
        return self[k - 1]

    def problems(self) -> list[str]:
        n = len(self)
        if n == 0:
            return ["empty span set"]
        out = []
        if [s.h for s in self] != list(range(1, n + 1)):
            out.append("expected exactly one span per word 1..n")
        for s in self:
            if not s.valid(n):
                out.append(f"invalid headed span {tuple(s)}")
        if out:
            return out
        pairs = {(s.l, s.r) for s in self}
        if len(pairs) != n:
            out.append("span boundaries are not pairwise distinct")
        roots = [s for s in self if s.l == 0 and s.r == n]
        if len(roots) != 1:
            out.append("missing root span (0, n)")
        for a in self:
            for b in self:
                if a.h < b.h and a.l < b.r and b.l < a.r:
                    nested = (a.l <= b.l and b.r <= a.r) or (b.l <= a.l and a.r <= b.r)
                    if not nested:
                        out.append(f"spans {tuple(a)} and {tuple(b)} cross")
        return out

    def check(self) -> "SpanSet":
        probs = self.problems()
        if probs:
            raise TreeStructureError("; ".join(probs))
        return self


# -- CoNLL-U -----------------------------------------------------------------

def _blocks(text: str):
    block: list[tuple[int, str]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            block.append((lineno, line))
        elif block:
            yield block
            block = []
    if block:
        yield block


def read_conllu(text: str) -> list[tuple[Sentence, DepTree]]:
    """Parse CoNLL-U text into ``(Sentence, DepTree)`` pairs.

    Multiword-token ranges and empty nodes are skipped. Trees are returned
    as read; callers decide what to do with multi-rooted or cyclic ones
    (see :meth:`DepTree.problems`).
    """
    items = []
    for bno, block in enumerate(_blocks(text)):
        comments = []
        sent_id = None
        tokens = []
        heads = []
        labels = []
        first_line = block[0][0]
        for lineno, line in block:
            if line.startswith("#"):
                comments.append(line)
                body = line[1:].strip()
                if body.startswith("sent_id") and "=" in body:
                    sent_id = body.split("=", 1)[1].strip()
                continue
            cols = line.rstrip("\r").split("\t")
            if len(cols) != 10:
                raise ConlluError(f"line {lineno}: expected 10 columns, got {len(cols)}")
            tid = cols[0]
            if "-" in tid or "." in tid:
                continue
            try:
                idx = int(tid)
            except ValueError:
                raise ConlluError(f"line {lineno}: non-integer token id {tid!r}") from None
            if idx != len(tokens) + 1:
                if any(t.index == idx for t in tokens):
                    raise ConlluError(f"line {lineno}: duplicate token id {idx}")
                raise ConlluError(f"line {lineno}: token id {idx} out of sequence")
            try:
                head = int(cols[6])
            except ValueError:
                raise ConlluError(f"line {lineno}: non-integer head {cols[6]!r}") from None
            if not cols[1]:
                raise ConlluError(f"line {lineno}: empty form")
            tokens.append(Token(idx, cols[1], cols[3], cols[4], cols[5], cols[9],
                                lemma=cols[2], deps=cols[8]))
            heads.append((lineno, head))
            labels.append(cols[7])
        if not tokens:
            raise ConlluError(f"line {first_line}: sentence block without tokens")
        n = len(tokens)
        for lineno, head in heads:
            if not 0 <= head <= n:
                raise ConlluError(f"line {lineno}: head {head} out of range 0..{n}")
        sent = Sentence(sent_id if sent_id is not None else f"s{bno + 1}",
                        tuple(tokens), tuple(comments))
        items.append((sent, DepTree(tuple(h for _, h in heads), tuple(labels))))
    return items


def read_conllu_file(path) -> list[tuple[Sentence, DepTree]]:
    with open(path, encoding="utf-8") as f:
        return read_conllu(f.read())


def write_conllu(items: Iterable[tuple[Sentence, DepTree]]) -> str:
    out = []
    for sent, tree in items:
        out.extend(sent.comments)
        for tok, head, label in zip(sent.tokens, tree.heads, tree.labels):
            out.append("\t".join([str(tok.index), tok.form, tok.lemma, tok.upos, tok.xpos,
                                  tok.feats, str(head), label, tok.deps, tok.misc]))
        out.append("")
    return "\n".join(out) + "\n" if out else ""


# -- projectivity and headed spans -------------------------------------------

def is_projective(tree: DepTree) -> bool:
    """True iff every word's full subtree yield is a contiguous interval."""
    tree.check()
    n = tree.n
    yields = [{d} for d in range(n + 1)]
    for d in range(1, n + 1):
        k = tree.heads[d - 1]
        while k != 0:
            yields[k].add(d)
            k = tree.heads[k - 1]
    return all(max(y) - min(y) + 1 == len(y) for y in yields[1:])


def extract_headed_spans(tree: DepTree) -> SpanSet:
    """Post-order traversal collecting ``(l, r, h)`` for each word h.

    Raises :class:`NonProjectiveError` if some subtree yield has a gap.
    """
    tree.check()
    n = tree.n
    kids = tree.children()
    left = list(range(-1, n))  # left[k] = k-1
    right = list(range(n + 1))
    size = [1] * (n + 1)
    order = []
    stack = [kids[0][0]]
    while stack:
        k = stack.pop()
        order.append(k)
        stack.extend(kids[k])
    for k in reversed(order):
        for c in kids[k]:
            left[k] = min(left[k], left[c])
            right[k] = max(right[k], right[c])
            size[k] += size[c]
        if right[k] - left[k] != size[k]:
            raise NonProjectiveError(f"subtree of word {k} is not contiguous")
    return SpanSet((left[k], right[k], k) for k in range(1, n + 1))


def spans_to_tree(spans: SpanSet | Iterable[Sequence[int]]) -> DepTree:
    """Attach each word to the head of the smallest span strictly containing its own."""
    spans = spans if isinstance(spans, SpanSet) else SpanSet(spans)
    spans.check()
    n = spans.n
    heads = []
    for s in spans:
        best = None
        for t in spans:
            if t.h != s.h and t.l <= s.l and s.r <= t.r:
                if best is None or t.r - t.l < best.r - best.l:
                    best = t
        heads.append(0 if best is None else best.h)
    return DepTree(tuple(heads))


def span_hamming(a: SpanSet, b: SpanSet) -> int:
    """Number of words whose headed spans differ."""
    if a.n != b.n:
        raise TreeStructureError("span sets of different length")
    return sum(1 for x, y in zip(a, b) if x != y)


def split_trainable(items: Iterable[tuple[Sentence, DepTree]]):
    """Partition items into (usable, rejected) where rejected carries a reason."""
    ok, bad = [], []
    for sent, tree in items:
        probs = tree.problems()
        if probs:
            bad.append((sent, tree, "; ".join(probs)))
        elif not is_projective(tree):
            bad.append((sent, tree, "non-projective"))
        else:
            ok.append((sent, tree))
    return ok, bad
