"""Score tables and the sparse hashed feature scorer.

A :class:`SpanScoreTable` stores one score per valid triple ``(l, r, h)``,
``0 <= l < h <= r <= n``, laid out by width: ``table.width(w)`` is an array
of shape ``(n - w + 1, w)`` whose entry ``[l, h - l - 1]`` is the score of
``(l, l + w, h)``. This is the layout the chart consumes directly.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .treebank import DepTree, Sentence, SpanSet

SENTINEL = -1e18
SCORE_FILE_DEFAULT = -1e9


class ScoreFileError(ValueError):
    pass


class SpanScoreTable:
    def __init__(self, n: int, by_width: Sequence[np.ndarray] | None = None,
                 default: float = 0.0):
        if n < 1:
            raise ValueError("n must be >= 1")
        if not (math.isfinite(default) or default == SENTINEL):
            raise ValueError("default must be finite")
        self.n = n
        self.default = float(default)
        if by_width is None:
            by_width = [np.full((n - w + 1, w), self.default) for w in range(n + 1)]
        else:
            by_width = [np.asarray(a, dtype=np.float64) for a in by_width]
            for w in range(1, n + 1):
                if by_width[w].shape != (n - w + 1, w):
                    raise ValueError(f"width {w} block has shape {by_width[w].shape}")
        self._w = list(by_width)

    @classmethod
    def from_dict(cls, n: int, values: Mapping[tuple[int, int, int], float],
                  default: float = 0.0) -> "SpanScoreTable":
        table = cls(n, default=default)
        for (l, r, h), v in values.items():
            if not 0 <= l < h <= r <= n:
                raise ValueError(f"invalid triple {(l, r, h)} for n={n}")
            table._w[r - l][l, h - l - 1] = v
        return table

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "SpanScoreTable":
        """Build from an ``(n+1, n+1, n+1)`` array indexed ``[l, r, h]``."""
        n = dense.shape[0] - 1
        blocks = [np.zeros((n + 1, 0))]
        for w in range(1, n + 1):
            l = np.arange(n - w + 1)[:, None]
            m = np.arange(w)[None, :]
            blocks.append(dense[l, l + w, l + m + 1].astype(np.float64))
        return cls(n, blocks)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, low: int = -5,
               high: int = 5) -> "SpanScoreTable":
        """Integer scores drawn uniformly from ``[low, high]`` (exact in float64)."""
        blocks = [np.zeros((n + 1, 0))]
        blocks += [rng.integers(low, high + 1, size=(n - w + 1, w)).astype(np.float64)
                   for w in range(1, n + 1)]
        return cls(n, blocks)

    def width(self, w: int) -> np.ndarray:
        return self._w[w]

    def __getitem__(self, key) -> float:
        l, r, h = key
        if not 0 <= l < h <= r <= self.n:
            raise KeyError(key)
        return float(self._w[r - l][l, h - l - 1])

    def triples(self):
        for w in range(1, self.n + 1):
            for l in range(self.n - w + 1):
                for h in range(l + 1, l + w + 1):
                    yield l, l + w, h

    def dense(self) -> np.ndarray:
        """Full ``[l, r, h]`` array; invalid cells hold the sentinel."""
        n = self.n
        out = np.full((n + 1, n + 1, n + 1), SENTINEL)
        for w in range(1, n + 1):
            l = np.arange(n - w + 1)[:, None]
            m = np.arange(w)[None, :]
            out[l, l + w, l + m + 1] = self._w[w]
        return out

    def tree_score(self, spans: Iterable[Sequence[int]]) -> float:
        return float(sum(self[tuple(s)] for s in spans))

    def shifted(self, c: float) -> "SpanScoreTable":
        return SpanScoreTable(self.n, [b + c for b in self._w], self.default + c)

    def with_hamming_cost(self, gold: SpanSet, cost: float) -> "SpanScoreTable":
        """Add ``cost`` to every triple whose boundaries differ from the gold span of its head."""
        gold.check()
        if gold.n != self.n:
            raise ValueError("gold span set length differs from table")
        blocks = [self._w[0]] + [b + cost for b in self._w[1:]]
        for l, r, h in gold:
            blocks[r - l][l, h - l - 1] -= cost
        return SpanScoreTable(self.n, blocks, self.default)

    def __add__(self, other: "SpanScoreTable") -> "SpanScoreTable":
        return SpanScoreTable(self.n, [a + b for a, b in zip(self._w, other._w)],
                              self.default + other.default)

    def allclose(self, other: "SpanScoreTable", **kw) -> bool:
        return self.n == other.n and all(
            np.allclose(a, b, **kw) for a, b in zip(self._w[1:], other._w[1:]))


@dataclass
class ArcScoreTable:
    """``values[h, d]`` scores the arc h -> d; h in 0..n, d in 1..n (column 0 unused)."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    @classmethod
    def from_dict(cls, n: int, arcs: Mapping[tuple[int, int], float],
                  default: float = 0.0) -> "ArcScoreTable":
        vals = np.full((n + 1, n + 1), float(default))
        for (h, d), v in arcs.items():
            if h == d or not (0 <= h <= n and 1 <= d <= n):
                raise ValueError(f"invalid arc {(h, d)}")
            vals[h, d] = v
        return cls(vals)

    def tree_score(self, tree: DepTree) -> float:
        return float(sum(self.values[h, d] for d, h in enumerate(tree.heads, start=1)))


@dataclass
class LabelScoreTable:
    """Label scores for a set of arcs: ``values[a, r]`` for ``arcs[a] = (head, dep)``."""

    n: int
    labels: tuple[str, ...]
    arcs: list[tuple[int, int]]
    values: np.ndarray

    def __post_init__(self):
        self._index = {a: i for i, a in enumerate(self.arcs)}

    def __getitem__(self, key) -> float:
        h, d, r = key
        return float(self.values[self._index[(h, d)], r])

    def row(self, h: int, d: int) -> np.ndarray:
        return self.values[self._index[(h, d)]]


# -- feature hashing ---------------------------------------------------------

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def feature_hash(name: str) -> int:
    """Stable 64-bit id of a feature string (independent of PYTHONHASHSEED)."""
    return int.from_bytes(hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest(), "little")


def _mix_label(ids: np.ndarray, label: int) -> np.ndarray:
    x = ids.astype(np.uint64) ^ np.uint64(((label + 1) * _GOLDEN) & _M64)
    x = x ^ (x >> np.uint64(31))
    return x * np.uint64(0xBF58476D1CE4E5B9)


def _len_bucket(k: int) -> str:
    if k <= 5:
        return str(k)
    for edge in (7, 10, 15, 20, 30, 40):
        if k <= edge:
            return f"<={edge}"
    return ">40"


def _dist_bucket(k: int) -> str:
    if k <= 4:
        return str(k)
    for edge in (6, 10, 20):
        if k <= edge:
            return f"<={edge}"
    return ">20"


BOS = "<s>"
EOS = "</s>"


class _Lookup:
    """Padded word/tag access by word index; index 0 and n+1 are boundary symbols."""

    def __init__(self, sent: Sentence, use_pos: bool):
        self.form = [BOS] + [t.form for t in sent.tokens] + [EOS]
        if use_pos:
            self.pos = [BOS] + [t.upos for t in sent.tokens] + [EOS]
        else:
            self.pos = None


def span_feature_names(sent: Sentence, l: int, r: int, h: int, use_pos: bool = True) -> list[str]:
    """Feature template strings for headed span ``(l, r, h)``.

    Boundary words are the words just outside (word l, word r+1) and just
    inside (word l+1, word r) the span; word 0 and n+1 are padding.
    """
    return _span_names(_Lookup(sent, use_pos), l, r, h)


def _span_names(lk: _Lookup, l: int, r: int, h: int) -> list[str]:
    f = lk.form
    hw = f[h]
    ln = _len_bucket(r - l)
    dl = _dist_bucket(h - l - 1)
    dr = _dist_bucket(r - h)
    out_l, in_l, in_r, out_r = f[l], f[l + 1], f[r], f[r + 1]
    names = [
        "bias",
        f"hw={hw}",
        f"len={ln}",
        f"hw={hw}|len={ln}",
        f"rel={dl},{dr}",
        f"hw={hw}|rel={dl},{dr}",
        f"ol={out_l}", f"il={in_l}", f"ir={in_r}", f"or={out_r}",
        f"hw={hw}|ol={out_l}", f"hw={hw}|or={out_r}",
        f"hw={hw}|il={in_l}", f"hw={hw}|ir={in_r}",
        f"hw={hw}|ol={out_l}|or={out_r}",
        f"ol={out_l}|il={in_l}|ir={in_r}|or={out_r}",
        f"hw={hw}|il={in_l}|ir={in_r}|len={ln}",
    ]
    if lk.pos is not None:
        p = lk.pos
        hp = p[h]
        names += [
            f"hp={hp}",
            f"hp={hp}|len={ln}",
            f"hp={hp}|rel={dl},{dr}",
            f"hp={hp}|olp={p[l]}|orp={p[r + 1]}",
            f"hp={hp}|ilp={p[l + 1]}|irp={p[r]}",
            f"olp={p[l]}|ilp={p[l + 1]}|irp={p[r]}|orp={p[r + 1]}",
        ]
    return names


def _arc_names(lk: _Lookup, h: int, d: int) -> list[str]:
    f = lk.form
    direction = "L" if d < h else "R"
    dist = _dist_bucket(abs(h - d)) if h else "root"
    names = [
        f"a|bias|{direction}",
        f"a|hw={f[h] if h else '<root>'}",
        f"a|dw={f[d]}",
        f"a|hw={f[h] if h else '<root>'}|dw={f[d]}",
        f"a|dir={direction}|dist={dist}",
        f"a|dw={f[d]}|dir={direction}",
    ]
    if lk.pos is not None:
        p = lk.pos
        hp = p[h] if h else "<root>"
        names += [
            f"a|hp={hp}", f"a|dp={p[d]}",
            f"a|hp={hp}|dp={p[d]}|dir={direction}",
            f"a|hp={hp}|dp={p[d]}|dist={dist}",
        ]
    return names


@dataclass
class SpanFeatures:
    """Hashed feature ids for every valid triple of one sentence.

    ``ids[w]`` has shape ``(n - w + 1, w, F)`` following the table layout.
    """

    n: int
    ids: list[np.ndarray]

    def of(self, l: int, r: int, h: int) -> np.ndarray:
        return self.ids[r - l][l, h - l - 1]

    def of_spans(self, spans: Iterable[Sequence[int]]) -> np.ndarray:
        return np.concatenate([self.of(*s) for s in spans])


class FeatureScorer:
    """Sparse linear model over hashed span and arc-label features.

    Weights live in dense arrays of ``2**hash_bits`` buckets; serialization
    keeps only the non-zero entries.
    """

    def __init__(self, labels: Sequence[str] = ("_",), hash_bits: int = 22,
                 use_pos: bool = True):
        if not 1 <= hash_bits <= 30:
            raise ValueError("hash_bits must lie in 1..30")
        self.hash_bits = hash_bits
        self.labels = tuple(labels)
        self.use_pos = use_pos
        self.weights = np.zeros(1 << hash_bits)
        self.label_weights = np.zeros(1 << hash_bits)
        self._label_index = {lab: i for i, lab in enumerate(self.labels)}
        self._cache: dict[int, tuple] = {}

    @property
    def mask(self) -> int:
        return (1 << self.hash_bits) - 1

    def label_id(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise KeyError(f"label {label!r} not in vocabulary") from None

    def _hash_names(self, names: list[str]) -> np.ndarray:
        return np.array([feature_hash(s) & self.mask for s in names], dtype=np.int64)

    def featurize_span(self, sent: Sentence, l: int, r: int, h: int) -> np.ndarray:
        """Hashed feature ids (with repeats, if any collide) for one triple."""
        if not 0 <= l < h <= r <= sent.n:
            raise ValueError(f"invalid triple {(l, r, h)}")
        return self._hash_names(span_feature_names(sent, l, r, h, self.use_pos))

    def span_features(self, sent: Sentence) -> SpanFeatures:
        key = id(sent)
        hit = self._cache.get(key)
        if hit is not None and hit[0] is sent:
            return hit[1]
        lk = _Lookup(sent, self.use_pos)
        n = sent.n
        memo: dict[str, int] = {}
        mask = self.mask
        ids = [np.zeros((n + 1, 0, 0), dtype=np.int64)]
        for w in range(1, n + 1):
            rows = []
            for l in range(n - w + 1):
                row = []
                for h in range(l + 1, l + w + 1):
                    names = _span_names(lk, l, l + w, h)
                    cur = []
                    for s in names:
                        v = memo.get(s)
                        if v is None:
                            v = memo[s] = feature_hash(s) & mask
                        cur.append(v)
                    row.append(cur)
                rows.append(row)
            ids.append(np.array(rows, dtype=np.int64))
        feats = SpanFeatures(n, ids)
        if len(self._cache) > 4096:
            self._cache.clear()
        self._cache[key] = (sent, feats)
        return feats

    def score_spans(self, sent: Sentence) -> SpanScoreTable:
        feats = self.span_features(sent)
        blocks = [np.zeros((sent.n + 1, 0))]
        blocks += [self.weights[feats.ids[w]].sum(axis=-1) for w in range(1, sent.n + 1)]
        return SpanScoreTable(sent.n, blocks)

    def arc_feature_ids(self, sent: Sentence, arcs: Sequence[tuple[int, int]]) -> np.ndarray:
        """Base (label-free) ids, shape ``(len(arcs), F)``."""
        lk = _Lookup(sent, self.use_pos)
        return np.array([[feature_hash(s) for s in _arc_names(lk, h, d)] for h, d in arcs],
                        dtype=np.uint64).reshape(len(arcs), -1)

    def label_feature_ids(self, base: np.ndarray) -> np.ndarray:
        """Per-label bucket ids, shape ``(len(arcs), |labels|, F)``."""
        mask = np.uint64(self.mask)
        return np.stack([(_mix_label(base, r) & mask).astype(np.int64)
                         for r in range(len(self.labels))], axis=1)

    def score_labels(self, sent: Sentence,
                     arcs: Sequence[tuple[int, int]] | None = None) -> LabelScoreTable:
        if not self.labels:
            raise ValueError("empty label vocabulary")
        if arcs is None:
            arcs = [(h, d) for d in range(1, sent.n + 1) for h in range(sent.n + 1) if h != d]
        arcs = list(arcs)
        ids = self.label_feature_ids(self.arc_feature_ids(sent, arcs))
        values = self.label_weights[ids].sum(axis=-1) if arcs else np.zeros((0, len(self.labels)))
        return LabelScoreTable(sent.n, self.labels, arcs, values)

    # -- persistence ---------------------------------------------------------

    def to_json(self) -> str:
        def sparse(w):
            nz = np.flatnonzero(w)
            return {str(int(i)): float(w[i]) for i in nz}

        doc = {
            "format": "headspan-model",
            "version": 1,
            "hash_bits": self.hash_bits,
            "use_pos": self.use_pos,
            "labels": list(self.labels),
            "span_weights": sparse(self.weights),
            "label_weights": sparse(self.label_weights),
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FeatureScorer":
        doc = json.loads(text)
        if doc.get("format") != "headspan-model" or doc.get("version") != 1:
            raise ValueError("not a headspan model file (format/version mismatch)")
        sc = cls(doc["labels"], doc["hash_bits"], doc["use_pos"])
        for k, v in doc["span_weights"].items():
            sc.weights[int(k)] = v
        for k, v in doc["label_weights"].items():
            sc.label_weights[int(k)] = v
        return sc

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json())

    @classmethod
    def load(cls, path) -> "FeatureScorer":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(f.read())

    def copy(self) -> "FeatureScorer":
        other = FeatureScorer(self.labels, self.hash_bits, self.use_pos)
        other.weights[:] = self.weights
        other.label_weights[:] = self.label_weights
        return other


def score_spans(scorer: FeatureScorer, sent: Sentence) -> SpanScoreTable:
    return scorer.score_spans(sent)


def score_labels(scorer: FeatureScorer, sent: Sentence, arcs=None) -> LabelScoreTable:
    return scorer.score_labels(sent, arcs)


def predict_labels(table: LabelScoreTable, tree: DepTree) -> DepTree:
    """Give each arc its highest-scoring label; ties go to the smallest label id."""
    if not table.labels:
        raise ValueError("empty label vocabulary")
    labels = []
    for d, h in enumerate(tree.heads, start=1):
        labels.append(table.labels[int(np.argmax(table.row(h, d)))])
    return tree.with_labels(labels)


# -- score files -------------------------------------------------------------

def parse_score_record(line: str, where: str = "record") -> tuple[str, SpanScoreTable]:
    try:
        rec = json.loads(line)
        n = int(rec["n"])
        default = float(rec.get("default", SCORE_FILE_DEFAULT))
        spans = rec["spans"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ScoreFileError(f"{where}: malformed score record ({exc})") from None
    if n < 1:
        raise ScoreFileError(f"{where}: n must be >= 1")
    values = {}
    for item in spans:
        if len(item) != 4:
            raise ScoreFileError(f"{where}: span entry {item!r} must be [l, r, h, score]")
        l, r, h = (int(x) for x in item[:3])
        if not 0 <= l < h <= r <= n:
            raise ScoreFileError(f"{where}: invalid triple {(l, r, h)} for n={n}")
        values[(l, r, h)] = float(item[3])
    sid = str(rec.get("sent_id", ""))
    return sid, SpanScoreTable.from_dict(n, values, default)


def load_score_file(path, sentences: Sequence[Sentence] | None = None) -> list[SpanScoreTable]:
    """Read a JSONL span-score file; check lengths against ``sentences`` when given."""
    tables = []
    with open(path, encoding="utf-8") as f:
        lines = [ln for ln in f if ln.strip()]
    for i, line in enumerate(lines, start=1):
        sid, table = parse_score_record(line, f"{path}:{i}")
        if sentences is not None:
            if i > len(sentences):
                raise ScoreFileError(f"{path}:{i}: record {sid!r} has no matching sentence")
            sent = sentences[i - 1]
            if sent.n != table.n:
                raise ScoreFileError(
                    f"{path}:{i}: record {sid or sent.id!r} has n={table.n} but sentence "
                    f"{sent.id!r} has {sent.n} tokens")
        tables.append(table)
    if sentences is not None and len(tables) != len(sentences):
        missing = sentences[len(tables)].id
        raise ScoreFileError(f"{path}: no score record for sentence {missing!r}")
    return tables


def dump_score_record(sent_id: str, n: int, values: Mapping[tuple[int, int, int], float],
                      default: float = SCORE_FILE_DEFAULT) -> str:
    spans = [[l, r, h, float(v)] for (l, r, h), v in sorted(values.items())]
    return json.dumps({"sent_id": sent_id, "n": n, "default": default, "spans": spans})
