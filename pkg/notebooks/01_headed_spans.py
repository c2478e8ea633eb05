"""
Dependency trees as headed spans
================================

A projective tree over n words is the same thing as a set of n headed spans,
one per word: the span covers the word's yield and remembers which word is the
head. Fenceposts run 0..n, so word k sits between fenceposts k-1 and k.
"""

from headspan import DepTree, Sentence, extract_headed_spans, is_projective, spans_to_tree

words = "An inventory of syntactic function is taken to be primitive".split()
sent = Sentence.from_words(words)
tree = DepTree((2, 6, 2, 5, 3, 0, 6, 7, 8, 9))

# each span is (l, r, h) with l < h <= r
spans = extract_headed_spans(tree)
for l, r, h in spans:
    print(f"{words[h - 1]:>10}  ({l}, {r}, {h})  {' '.join(words[l:r])}")

# the spans are laminar and the tree can be read back from them
assert spans_to_tree(spans).heads == tree.heads

# crossing arcs have no span encoding
crossing = DepTree((3, 4, 0, 3))
print("projective:", is_projective(crossing))
