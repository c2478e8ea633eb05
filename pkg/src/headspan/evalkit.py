"""Attachment scores, headed-span F1 and bucketed error analysis."""
from __future__ import annotations

import csv
import io
import json
import unicodedata
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .treebank import (DepTree, NonProjectiveError, Sentence, SpanSet, TreeStructureError,
                       extract_headed_spans)

PUNCT_POLICIES = ("upos", "none")

BUCKETS = {
    "sentence_length": ["1-9", "10-19", "20-29", "30-39", ">=40"],
    "root_distance": ["ROOT", "1", "2", "3", "4", "5", "6", ">=7"],
    "dependency_length": ["1", "2", "3", "4", "5", "6", "7", ">=8"],
    "span_length": ["1-10", "11-20", "21-30", "31-40", ">=40"],
}


class EvalError(ValueError):
    pass


def is_punct(tok) -> bool:
    """UPOS ``PUNCT``; without UPOS, a form made only of Unicode punctuation."""
    if tok.upos not in ("_", ""):
        return tok.upos == "PUNCT"
    return all(unicodedata.category(ch).startswith("P") for ch in tok.form)


def _policy(punct_policy: str) -> str:
    p = {"upos_punct": "upos"}.get(punct_policy, punct_policy)
    if p not in PUNCT_POLICIES:
        raise EvalError(f"unknown punctuation policy {punct_policy!r}")
    return p


def _scored_tokens(sent: Sentence, policy: str) -> list[int]:
    if policy == "none":
        return list(range(1, sent.n + 1))
    return [t.index for t in sent.tokens if not is_punct(t)]


def _pct(num: float, den: float) -> float:
    return 100.0 * num / den if den else 100.0


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class BucketStat:
    gold: int = 0
    pred: int = 0
    correct_gold: int = 0
    correct_pred: int = 0

    @property
    def precision(self) -> float:
        return _pct(self.correct_pred, self.pred)

    @property
    def recall(self) -> float:
        return _pct(self.correct_gold, self.gold)

    @property
    def f1(self) -> float:
        return _f1(self.precision, self.recall)

    def as_dict(self) -> dict:
        return {"gold": self.gold, "pred": self.pred, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


@dataclass
class EvalReport:
    uas: float = 100.0
    las: float = 100.0
    span_f1: float = 100.0
    buckets: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"{'metric':<12}{'value':>9}",
                 f"{'UAS':<12}{self.uas:>9.2f}",
                 f"{'LAS':<12}{self.las:>9.2f}",
                 f"{'span F1':<12}{self.span_f1:>9.2f}"]
        for kind, rows in self.buckets.items():
            lines.append("")
            lines.append(f"{kind:<18}{'gold':>7}{'pred':>7}{'P':>8}{'R':>8}{'F1':>8}")
            for name, row in rows.items():
                lines.append(f"{name:<18}{row['gold']:>7}{row['pred']:>7}"
                             f"{row['precision']:>8.2f}{row['recall']:>8.2f}{row['f1']:>8.2f}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["kind", "bucket", "gold", "pred", "precision", "recall", "f1"])
        for kind, rows in self.buckets.items():
            for name, row in rows.items():
                w.writerow([kind, name, row["gold"], row["pred"], f"{row['precision']:.4f}",
                            f"{row['recall']:.4f}", f"{row['f1']:.4f}"])
        return buf.getvalue()


def _check_pair(gs: Sentence, gt: DepTree, ps: Sentence, pt: DepTree) -> None:
    if gs.n != ps.n or gt.n != pt.n or gs.n != gt.n:
        raise EvalError(f"length mismatch in sentence {gs.id!r}: gold {gs.n}, pred {ps.n}")
    if gs.forms != ps.forms:
        raise EvalError(f"token mismatch in sentence {gs.id!r}")


def _as_items(gold, pred):
    gold, pred = list(gold), list(pred)
    if len(gold) != len(pred):
        raise EvalError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    out = []
    for (gs, gt), p in zip(gold, pred):
        ps, pt = p if isinstance(p, tuple) else (gs, p)
        _check_pair(gs, gt, ps, pt)
        out.append((gs, gt, pt))
    return out


def _spans_or_none(tree: DepTree) -> SpanSet | None:
    try:
        return extract_headed_spans(tree)
    except (NonProjectiveError, TreeStructureError):
        return None


def span_f1(gold_spans: SpanSet, pred_spans: SpanSet, n: int | None = None) -> float:
    """Percentage of identical ``(l, r, h)`` triples; P = R = F1 since both hold n spans."""
    if len(gold_spans) != len(pred_spans) or (n is not None and len(gold_spans) != n):
        raise EvalError("span sets must both contain one span per word")
    gold, pred = set(map(tuple, gold_spans)), set(map(tuple, pred_spans))
    return _pct(len(gold & pred), len(gold))


def attachment_scores(gold, pred, punct_policy: str = "upos") -> EvalReport:
    """UAS/LAS over non-punctuation tokens plus corpus span F1.

    ``gold`` is a sequence of ``(Sentence, DepTree)``; ``pred`` holds either
    the same pairs or bare trees aligned with ``gold``. Span F1 covers the
    sentences whose gold and predicted trees are both projective.
    """
    policy = _policy(punct_policy)
    tokens = head_ok = both_ok = 0
    span_total = span_ok = span_sents = 0
    items = _as_items(gold, pred)
    for sent, gt, pt in items:
        for d in _scored_tokens(sent, policy):
            tokens += 1
            if gt.heads[d - 1] == pt.heads[d - 1]:
                head_ok += 1
                both_ok += gt.labels[d - 1] == pt.labels[d - 1]
        gsp, psp = _spans_or_none(gt), _spans_or_none(pt)
        if gsp is not None and psp is not None:
            span_sents += 1
            span_total += sent.n
            span_ok += len(set(gsp) & set(psp))
    return EvalReport(
        uas=_pct(head_ok, tokens), las=_pct(both_ok, tokens), span_f1=_pct(span_ok, span_total),
        counts={"tokens": tokens, "sentences": len(items), "span_sentences": span_sents, "spans": span_total})


# -- buckets -----------------------------------------------------------------

def root_distance(tree: DepTree, d: int) -> int:
    """Arcs between the root word and word d (the root word itself is 0)."""
    steps = 0
    while tree.heads[d - 1] != 0:
        d = tree.heads[d - 1]
        steps += 1
        if steps > tree.n:
            raise TreeStructureError("cycle in tree")
    return steps


def dependency_length(tree: DepTree, d: int) -> int:
    """``|head - d|``; a root arc measures from the ROOT position 0."""
    return abs(tree.heads[d - 1] - d)


def _bucket(kind: str, value: int) -> str:
    if kind == "sentence_length":
        return ">=40" if value >= 40 else BUCKETS[kind][value // 10]
    if kind == "root_distance":
        return "ROOT" if value == 0 else (">=7" if value >= 7 else str(value))
    if kind == "dependency_length":
        return ">=8" if value >= 8 else str(value)
    if kind == "span_length":
        return ">=40" if value > 40 else BUCKETS[kind][(value - 1) // 10]
    raise EvalError(f"unknown bucket kind {kind!r}")


def bucketed_report(gold, pred, bucket_kind: str, punct_policy: str = "upos") -> EvalReport:
    """Per-bucket scores in the layout of the usual error-analysis plots.

    sentence_length reports UAS (recall over tokens of that sentence length);
    root_distance and dependency_length report arc P/R/F1 where gold arcs
    are bucketed by the gold tree and predicted arcs by the predicted tree;
    span_length does the same for headed spans.
    """
    if bucket_kind not in BUCKETS:
        raise EvalError(f"unknown bucket kind {bucket_kind!r}")
    policy = _policy(punct_policy)
    stats = {b: BucketStat() for b in BUCKETS[bucket_kind]}
    items = _as_items(gold, pred)
    for sent, gt, pt in items:
        if bucket_kind == "span_length":
            gsp, psp = _spans_or_none(gt), _spans_or_none(pt)
            if gsp is None or psp is None:
                continue
            gset, pset = set(gsp), set(psp)
            for s in gsp:
                st = stats[_bucket(bucket_kind, s.r - s.l)]
                st.gold += 1
                st.correct_gold += s in pset
            for s in psp:
                st = stats[_bucket(bucket_kind, s.r - s.l)]
                st.pred += 1
                st.correct_pred += s in gset
            continue
        for d in _scored_tokens(sent, policy):
            ok = gt.heads[d - 1] == pt.heads[d - 1]
            if bucket_kind == "sentence_length":
                gb = pb = _bucket(bucket_kind, sent.n)
            elif bucket_kind == "root_distance":
                gb, pb = (_bucket(bucket_kind, root_distance(t, d)) for t in (gt, pt))
            else:
                gb, pb = (_bucket(bucket_kind, dependency_length(t, d)) for t in (gt, pt))
            stats[gb].gold += 1
            stats[gb].correct_gold += ok
            stats[pb].pred += 1
            stats[pb].correct_pred += ok
    base = attachment_scores([(s, g) for s, g, _ in items], [p for _, _, p in items], policy)
    rows = {}
    for name, st in stats.items():
        row = st.as_dict()
        if bucket_kind == "sentence_length":
            row["uas"] = st.recall
        rows[name] = row
    base.buckets = {bucket_kind: rows}
    base.counts[bucket_kind] = {name: st.gold for name, st in stats.items()}
    return base
