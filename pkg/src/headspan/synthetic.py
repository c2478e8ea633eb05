"""Random projective treebanks for overfitting checks, benchmarks and demos."""
from __future__ import annotations

import numpy as np

from .treebank import DepTree, Sentence, Token

_POS = ("NOUN", "VERB", "ADJ", "ADP", "DET", "ADV", "PRON", "PUNCT")


def random_projective_heads(n: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Sample a projective tree by recursive random splitting of word intervals."""
    heads = [0] * (n + 1)

    def attach(a: int, b: int, parent: int) -> None:
        # split words a..b into adjacent subtrees hanging off `parent`
        while a <= b:
            end = int(rng.integers(a, b + 1))
            root = int(rng.integers(a, end + 1))
            heads[root] = parent
            attach(a, root - 1, root)
            attach(root + 1, end, root)
            a = end + 1

    root = int(rng.integers(1, n + 1))
    heads[root] = 0
    attach(1, root - 1, root)
    attach(root + 1, n, root)
    return tuple(heads[1:])


def synthetic_treebank(size: int = 50, seed: int = 0, min_len: int = 3, max_len: int = 10,
                       vocab: int = 40) -> list[tuple[Sentence, DepTree]]:
    """Sentences of random words over random projective trees.

    Each word type has a fixed UPOS; arc labels are a deterministic function
    of the dependent's UPOS and attachment direction, so they are learnable.
    """
    rng = np.random.default_rng(seed)
    pos_of = [_POS[int(rng.integers(len(_POS)))] for _ in range(vocab)]
    items = []
    for s in range(size):
        n = int(rng.integers(min_len, max_len + 1))
        words = rng.integers(vocab, size=n)
        heads = random_projective_heads(n, rng)
        toks = tuple(Token(i + 1, f"w{int(w)}", pos_of[int(w)]) for i, w in enumerate(words))
        labels = []
        for d, h in enumerate(heads, start=1):
            if h == 0:
                labels.append("root")
            else:
                labels.append(f"{toks[d - 1].upos.lower()}:{'L' if d < h else 'R'}")
        items.append((Sentence(f"syn-{s + 1}", toks, (f"# sent_id = syn-{s + 1}",)),
                      DepTree(heads, tuple(labels))))
    return items
