"""Command-line entry point: ``headspan <command> [options]``.

Commands: extract-spans, parse, train, eval, oracle-check, bench.
Log level comes from the PARSER_LOG environment variable (default WARNING).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import evalkit
from .oracle import (brute_force_best_arc_tree, brute_force_best_span_tree, eisner_parse,
                     enumerate_projective_trees, filter_projective_trees)
from .scoring import ArcScoreTable, FeatureScorer, SpanScoreTable, load_score_file
from .spanchart import cost_augmented_parse, fill_chart, parse_spans
from .training import TrainConfig, predict, train
from .synthetic import random_projective_heads
from .treebank import (DepTree, extract_headed_spans, read_conllu_file, span_hamming,
                       split_trainable, write_conllu)

log = logging.getLogger("headspan")


class CliError(Exception):
    pass


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def _read_treebank(path):
    if not os.path.exists(path):
        raise CliError(f"no such file: {path}")
    return read_conllu_file(path)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- commands ----------------------------------------------------------------

def cmd_extract_spans(args) -> int:
    items = _read_treebank(args.input)
    good, bad = split_trainable(items)
    if bad and not args.skip_bad:
        sent, _, why = bad[0]
        raise CliError(f"sentence {sent.id!r}: {why} (use --skip-bad to drop such sentences)")
    keep = {id(s) for s, _ in good}
    lines = []
    for sent, tree in items:
        if id(sent) not in keep:
            continue
        spans = [list(s) for s in extract_headed_spans(tree)]
        lines.append(json.dumps({"sent_id": sent.id, "spans": spans}))
    _write(args.output, "".join(line + "\n" for line in lines))
    return 0


def cmd_parse(args) -> int:
    items = _read_treebank(args.input)
    sents = [s for s, _ in items]
    if bool(args.model) == bool(args.scores):
        raise CliError("parse needs exactly one of --model or --scores")
    if args.scores:
        tables = load_score_file(args.scores, sents)

        def run(i):
            tree = parse_spans(sents[i].n, tables[i]).tree
            return DepTree(tree.heads)
    else:
        scorer = FeatureScorer.load(args.model)

        def run(i):
            return predict(scorer, sents[i])
    trees = _map(run, range(len(sents)), args.threads)
    _write(args.output, write_conllu(zip(sents, trees)))
    return 0


def cmd_train(args) -> int:
    items = _read_treebank(args.input)
    good, bad = split_trainable(items)
    for sent, _, why in bad:
        if not args.skip_bad:
            log.warning("dropping sentence %s: %s", sent.id, why)
    config = TrainConfig(epochs=args.epochs, learning_rate=args.lr, cost=args.cost,
                         loss_kind=args.loss, shuffle_seed=args.seed, l2=args.l2,
                         hash_bits=args.hash_bits, use_pos=not args.no_pos_features)
    scorer, history = train(good, config)
    for entry in history:
        print(json.dumps({"epoch": entry.epoch, "parse_loss": entry.mean.parse_loss,
                          "label_loss": entry.mean.label_loss, "total": entry.mean.total}),
              file=sys.stderr)
    if args.output:
        scorer.save(args.output)
    return 0


def cmd_eval(args) -> int:
    gold = _read_treebank(args.gold)
    pred = _read_treebank(args.input)
    if args.buckets:
        report = evalkit.attachment_scores(gold, pred, args.punct)
        for kind in args.buckets:
            part = evalkit.bucketed_report(gold, pred, kind, args.punct)
            report.buckets.update(part.buckets)
            report.counts.update({k: v for k, v in part.counts.items() if k == kind})
    else:
        report = evalkit.attachment_scores(gold, pred, args.punct)
    text = {"json": report.to_json, "text": report.to_text, "csv": report.to_csv}[args.format]()
    _write(args.output, text if text.endswith("\n") else text + "\n")
    return 0


def oracle_check(max_n: int = 6, trials: int = 200, seed: int = 7) -> dict:
    """Compare the chart and Eisner decoders against exhaustive search.

    Returns a summary dict; ``summary["failures"]`` lists mismatches.
    """
    rng = np.random.default_rng(seed)
    failures = []
    checks = 0
    for n in range(1, max_n + 1):
        gen = sum(1 for _ in enumerate_projective_trees(n))
        if n <= 7:
            filt = sum(1 for _ in filter_projective_trees(n))
            checks += 1
            if gen != filt:
                failures.append(f"n={n}: enumerator {gen} trees, filter {filt}")
        for t in range(trials):
            table = SpanScoreTable.random(n, rng)
            res = parse_spans(n, table)
            _, best = brute_force_best_span_tree(n, table)
            checks += 1
            if res.score != best or table.tree_score(res.spans) != best:
                failures.append(f"span n={n} trial={t}: chart {res.score} brute {best}")
            gold = extract_headed_spans(DepTree(random_projective_heads(n, rng)))
            aug = cost_augmented_parse(n, table, gold, 1.0)
            _, abest = brute_force_best_span_tree(n, table, gold, 1.0)
            recomputed = table.tree_score(aug.spans) + span_hamming(aug.spans, gold)
            checks += 1
            if aug.score != abest or recomputed != abest:
                failures.append(f"augmented n={n} trial={t}: chart {aug.score} brute {abest}")
            arcs = ArcScoreTable(rng.integers(-5, 6, size=(n + 1, n + 1)).astype(float))
            _, eb = eisner_parse(n, arcs)
            _, bb = brute_force_best_arc_tree(n, arcs)
            checks += 1
            if eb != bb:
                failures.append(f"eisner n={n} trial={t}: eisner {eb} brute {bb}")
    return {"checks": checks, "failures": failures, "passed": not failures}


def cmd_oracle_check(args) -> int:
    summary = oracle_check(args.max_n, args.trials, args.seed)
    for line in summary["failures"]:
        print("FAIL " + line)
    if summary["passed"]:
        print(f"all passed ({summary['checks']} checks)")
        return 0
    print(f"{len(summary['failures'])} of {summary['checks']} checks failed")
    return 1


def bench(sizes, trials: int = 20, seed: int = 0) -> list[dict]:
    """Mean single-thread fill_chart time per sentence length."""
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        total = 0.0
        for t in range(trials + 1):
            blocks = [np.zeros((n + 1, 0))]
            blocks += [rng.normal(size=(n - w + 1, w)) for w in range(1, n + 1)]
            table = SpanScoreTable(n, blocks)
            t0 = time.perf_counter()
            fill_chart(n, table)
            if t:  # first run is warm-up
                total += time.perf_counter() - t0
        rows.append({"n": n, "mean_seconds": total / trials})
    for prev, cur in zip(rows, rows[1:]):
        cur["ratio"] = cur["mean_seconds"] / prev["mean_seconds"]
    return rows


def cmd_bench(args) -> int:
    rows = bench(args.sizes, args.trials, args.seed)
    print(f"{'n':>6}{'mean s':>12}{'ratio':>8}")
    for row in rows:
        ratio = f"{row['ratio']:.2f}" if "ratio" in row else "-"
        print(f"{row['n']:>6}{row['mean_seconds']:>12.5f}{ratio:>8}")
    return 0


# -- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="headspan", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def io(sp, output=True):
        sp.add_argument("--input", required=True, help="CoNLL-U input")
        if output:
            sp.add_argument("--output", default="-", help="output path (default stdout)")

    sp = sub.add_parser("extract-spans", help="write headed spans of gold trees as JSONL")
    io(sp)
    sp.add_argument("--skip-bad", action="store_true",
                    help="drop non-projective or malformed trees instead of failing")
    sp.set_defaults(func=cmd_extract_spans)

    sp = sub.add_parser("parse", help="predict trees from a model or a span-score file")
    io(sp)
    sp.add_argument("--model", help="model JSON written by 'train'")
    sp.add_argument("--scores", help="JSONL span-score file, one record per sentence")
    sp.add_argument("--threads", type=int, default=1,
                    help="parse sentences in parallel (output order is unchanged)")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("train", help="train a feature model on a CoNLL-U treebank")
    sp.add_argument("--input", required=True, help="CoNLL-U training treebank")
    sp.add_argument("--output", help="model file (JSON)")
    sp.add_argument("--loss", choices=["max-margin", "span-selection"], default="max-margin",
                    help="training objective (default: %(default)s)")
    sp.add_argument("--cost", type=float, default=1.0,
                    help="Hamming cost per wrong span for max-margin (default: %(default)s)")
    sp.add_argument("--lr", type=float, default=0.1, help="SGD step size (default: %(default)s)")
    sp.add_argument("--l2", type=float, default=0.0,
                    help="L2 penalty on touched weights (default: %(default)s)")
    sp.add_argument("--epochs", type=int, default=20, help="default: %(default)s")
    sp.add_argument("--seed", type=int, default=0, help="shuffling seed (default: %(default)s)")
    sp.add_argument("--hash-bits", type=int, default=22,
                    help="weight vector has 2**bits entries (default: %(default)s)")
    sp.add_argument("--threads", type=int, default=1,
                    help="accepted for interface parity; SGD updates run sequentially")
    sp.add_argument("--skip-bad", action="store_true",
                    help="drop unusable trees silently (they are always dropped)")
    sp.add_argument("--no-pos-features", action="store_true",
                    help="use word forms only, ignoring UPOS tags")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="UAS/LAS, span F1 and bucketed analysis")
    sp.add_argument("--gold", required=True, help="gold CoNLL-U")
    io(sp)
    sp.add_argument("--punct", choices=["upos", "none"], default="upos",
                    help="'upos' skips tokens whose gold UPOS is PUNCT (default: %(default)s)")
    sp.add_argument("--buckets", nargs="*", choices=list(evalkit.BUCKETS), default=[],
                    help="add bucketed precision/recall/F1 tables")
    sp.add_argument("--format", choices=["json", "text", "csv"], default="json")
    sp.add_argument("--threads", type=int, default=1,
                    help="accepted for interface parity; evaluation is single-threaded")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("oracle-check", help="chart and Eisner vs. exhaustive search")
    sp.add_argument("--max-n", type=int, default=6, help="largest sentence length checked")
    sp.add_argument("--trials", type=int, default=200, help="random tables per length")
    sp.add_argument("--seed", type=int, default=7)
    sp.set_defaults(func=cmd_oracle_check)

    sp = sub.add_parser("bench", help="time fill_chart on random score tables")
    sp.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400],
                    help="sentence lengths to time")
    sp.add_argument("--trials", type=int, default=20, help="timed runs per length")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=os.environ.get("PARSER_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
