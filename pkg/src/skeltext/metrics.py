"""Corpus metrics: BLEU-4 and the table-aware PARENT / PARENT-T scores."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .data import Corpus, Table
from .oracle import lcs

Tokens = Sequence[str]

MAX_ORDER = 4


def ngram_counts(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypotheses: list[Tokens], references: list[Tokens]) -> float:
    """Corpus BLEU-4 with brevity penalty; n >= 2 precisions are add-one smoothed."""
    if not hypotheses:
        raise ValueError("bleu needs at least one hypothesis")
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    hyp_len = sum(len(h) for h in hypotheses)
    ref_len = sum(len(r) for r in references)
    if hyp_len == 0:
        return 0.0
    log_precision = 0.0
    for n in range(1, MAX_ORDER + 1):
        matched = total = 0
        for hyp, ref in zip(hypotheses, references):
            hyp_counts = ngram_counts(hyp, n)
            ref_counts = ngram_counts(ref, n)
            total += sum(hyp_counts.values())
            matched += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        if n >= 2:
            matched += 1
            total += 1
        if matched == 0:
            return 0.0
        log_precision += math.log(matched / total)
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_precision / MAX_ORDER)


def table_entailment_weight(ngram: Tokens, table: Table) -> float:
    """Fraction of the n-gram's tokens that occur anywhere in the table values."""
    if not ngram:
        return 0.0
    values = table.value_token_set()
    return sum(1 for tok in ngram if tok in values) / len(ngram)


def _geometric_mean(values: list[float]) -> float:
    if any(v == 0.0 for v in values):
        return 0.0
    return math.exp(sum(math.log(v) for v in values) / len(values))


def _entailed_precision(hyp: Tokens, ref: Tokens | None, table: Table) -> float:
    """Geometric mean over n of entailment-weighted clipped n-gram precision.

    With a reference, each hypothesis n-gram scores max(reference match,
    entailment weight); reference matches are count-clipped. Orders where
    the hypothesis has no n-grams contribute a neutral 1. Empty hypotheses
    score 0 outright.
    """
    if not hyp:
        return 0.0
    per_order: list[float] = []
    for n in range(1, MAX_ORDER + 1):
        hyp_counts = ngram_counts(hyp, n)
        total = sum(hyp_counts.values())
        if total == 0:
            per_order.append(1.0)
            continue
        ref_counts = ngram_counts(ref, n) if ref is not None else Counter()
        score = 0.0
        for gram, count in hyp_counts.items():
            w = table_entailment_weight(gram, table)
            matched = min(count, ref_counts[gram])
            score += matched * max(1.0, w) + (count - matched) * w
        per_order.append(score / total)
    return _geometric_mean(per_order)


def _reference_recall(hyp: Tokens, ref: Tokens, table: Table) -> float:
    """Entailment-weighted recall of reference n-grams, geometric over n."""
    per_order: list[float] = []
    for n in range(1, MAX_ORDER + 1):
        ref_counts = ngram_counts(ref, n)
        hyp_counts = ngram_counts(hyp, n)
        numer = denom = 0.0
        for gram, count in ref_counts.items():
            w = table_entailment_weight(gram, table)
            denom += count * w
            numer += min(count, hyp_counts[gram]) * w
        per_order.append(1.0 if denom == 0.0 else numer / denom)
    return _geometric_mean(per_order)


def _table_recall(hyp: Tokens, table: Table) -> float:
    """Mean per-attribute LCS coverage of the value tokens by the hypothesis."""
    ratios = [
        len(lcs(list(attr.value_tokens), list(hyp))) / len(attr.value_tokens)
        for attr in table.attributes
    ]
    return sum(ratios) / len(ratios)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def parent(
    hyp: Tokens, ref: Tokens, table: Table, lambda_mix: float = 0.5
) -> tuple[float, float, float]:
    """PARENT (precision, recall, f1) for one example.

    Recall blends reference recall and table recall geometrically with
    exponents lambda_mix and 1 - lambda_mix.
    """
    precision = _entailed_precision(hyp, ref, table)
    r_ref = _reference_recall(hyp, ref, table)
    r_tab = _table_recall(hyp, table)
    recall = (r_ref**lambda_mix) * (r_tab ** (1.0 - lambda_mix))
    return precision, recall, _f1(precision, recall)


def parent_t(hyp: Tokens, table: Table) -> tuple[float, float, float]:
    """Table-only PARENT variant: entailment precision and LCS table recall."""
    precision = _entailed_precision(hyp, None, table)
    recall = _table_recall(hyp, table)
    return precision, recall, _f1(precision, recall)


@dataclass
class MetricReport:
    bleu: float
    parent_precision: float
    parent_recall: float
    parent_f1: float
    parent_t_precision: float
    parent_t_recall: float
    parent_t_f1: float
    per_example: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "bleu": self.bleu,
            "parent": {
                "precision": self.parent_precision,
                "recall": self.parent_recall,
                "f1": self.parent_f1,
            },
            "parent_t": {
                "precision": self.parent_t_precision,
                "recall": self.parent_t_recall,
                "f1": self.parent_t_f1,
            },
            "per_example": self.per_example,
        }


def evaluate_outputs(
    hypotheses: list[Tokens], corpus: Corpus, lambda_mix: float = 0.5
) -> MetricReport:
    """Score system outputs against a gold corpus (one hypothesis per example)."""
    if len(hypotheses) != len(corpus):
        raise ValueError(f"{len(hypotheses)} hypotheses for {len(corpus)} gold examples")
    references = [list(ex.reference) for ex in corpus]
    per_example = []
    sums = [0.0] * 6
    for hyp, ex in zip(hypotheses, corpus):
        p, r, f = parent(hyp, list(ex.reference), ex.table, lambda_mix)
        tp, tr, tf = parent_t(hyp, ex.table)
        per_example.append(
            {
                "parent": {"precision": p, "recall": r, "f1": f},
                "parent_t": {"precision": tp, "recall": tr, "f1": tf},
            }
        )
        for i, v in enumerate((p, r, f, tp, tr, tf)):
            sums[i] += v
    n = len(corpus)
    means = [s / n for s in sums]
    return MetricReport(
        bleu=bleu(hypotheses, references),
        parent_precision=means[0],
        parent_recall=means[1],
        parent_f1=_f1(means[0], means[1]),
        parent_t_precision=means[3],
        parent_t_recall=means[4],
        parent_t_f1=_f1(means[3], means[4]),
        per_example=per_example,
    )
