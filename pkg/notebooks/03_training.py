"""
Training a hashed linear span scorer
====================================

Span scores are dot products between a hashed weight vector and sparse
indicator features of (sentence, l, r, h). Two objectives are available: a
structured hinge with cost-augmented decoding, and a local per-word softmax
over candidate spans.
"""

from headspan import TrainConfig, train
from headspan.evalkit import attachment_scores
from headspan.synthetic import synthetic_treebank
from headspan.training import predict

corpus = synthetic_treebank(50, seed=0)
print(corpus[0][0].forms, corpus[0][1].heads)

for kind in ("max_margin", "span_selection"):
    config = TrainConfig(epochs=10, loss_kind=kind, hash_bits=20)
    scorer, history = train(corpus, config)
    for entry in history[::3]:
        print(f"{kind:>14} epoch {entry.epoch:2d}  parse loss {entry.mean.parse_loss:8.4f}")
    preds = [predict(scorer, s) for s, _ in corpus]
    rep = attachment_scores(corpus, preds, punct_policy="none")
    print(f"{kind:>14} training UAS {rep.uas:.1f}  LAS {rep.las:.1f}")
