"""
Evaluation and error breakdowns
===============================

Attachment scores count words with the right head (UAS) or the right head and
label (LAS). Span F1 compares the headed-span sets directly. Bucketed reports
split the errors by sentence length, distance to the root, arc length and
span length.
"""

import numpy as np

from headspan import DepTree
from headspan.evalkit import attachment_scores, bucketed_report
from headspan.synthetic import random_projective_heads, synthetic_treebank

gold = synthetic_treebank(40, seed=1, max_len=35)

# corrupt a quarter of the trees to get something to look at
rng = np.random.default_rng(2)
pred = []
for sent, tree in gold:
    if rng.random() < 0.25:
        tree = DepTree(random_projective_heads(sent.n, rng), tree.labels)
    pred.append(tree)

rep = attachment_scores(gold, pred, punct_policy="none")
print(f"UAS {rep.uas:.2f}  LAS {rep.las:.2f}  span F1 {rep.span_f1:.2f}")

print(bucketed_report(gold, pred, "dependency_length", punct_policy="none").to_text())
