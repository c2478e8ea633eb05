"""Headed-span projective dependency parsing.

The score of a projective tree is the sum of scores of its headed spans,
one ``(l, r, h)`` per word; :func:`parse_spans` finds the best tree exactly
in O(n^3).
"""
from .evalkit import EvalReport, attachment_scores, bucketed_report, span_f1
from .oracle import (brute_force_best_span_tree, eisner_parse, enumerate_projective_trees,
                     filter_projective_trees)
from .scoring import (ArcScoreTable, FeatureScorer, LabelScoreTable, SpanScoreTable,
                      load_score_file, predict_labels, score_labels, score_spans)
from .spanchart import Chart, ParseResult, backtrack, cost_augmented_parse, fill_chart, parse_spans
from .training import (LossReport, TrainConfig, label_step, max_margin_step,
                       span_selection_loss_step, train)
from .treebank import (DepTree, HeadedSpan, Sentence, SpanSet, Token, extract_headed_spans,
                       is_projective, read_conllu, spans_to_tree, write_conllu)

__version__ = "0.1.0"
