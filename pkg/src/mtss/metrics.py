"""Corpus BLEU, frequency-rank profiles, and token accuracy by frequency group."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Sentence, Vocabulary
from .errors import DataError

OOV_LABEL = "oov"


@dataclass(frozen=True)
class FrequencyBuckets:
    """Contiguous frequency-rank intervals covering 1..inf, plus an OOV bucket.

    ``boundaries`` are the inclusive upper bounds of all but the last
    interval; the default (10, 50, 500, 5000) yields [1,10], [11,50],
    [51,500], [501,5000], [5001,inf).
    """

    boundaries: tuple[int, ...] = (10, 50, 500, 5000)

    def __post_init__(self):
        if not self.boundaries:
            raise ValueError("at least one bucket boundary is required")
        previous = 0
        for bound in self.boundaries:
            if bound <= previous:
                raise ValueError(f"boundaries must be strictly increasing positive: {self.boundaries}")
            previous = bound

    @classmethod
    def parse(cls, text: str) -> "FrequencyBuckets":
        try:
            return cls(tuple(int(part) for part in text.split(",") if part.strip()))
        except ValueError as exc:
            raise DataError(f"malformed bucket list {text!r}: {exc}") from None

    @property
    def labels(self) -> tuple[str, ...]:
        """Rank-interval labels, OOV last."""
        out = []
        low = 1
        for bound in self.boundaries:
            out.append(f"{low}-{bound}")
            low = bound + 1
        out.append(f"{low}+")
        out.append(OOV_LABEL)
        return tuple(out)

    def label_for_rank(self, rank: int | None) -> str:
        if rank is None:
            return OOV_LABEL
        low = 1
        for bound in self.boundaries:
            if rank <= bound:
                return f"{low}-{bound}"
            low = bound + 1
        return f"{low}+"


@dataclass(frozen=True)
class BleuResult:
    score: float
    precisions: tuple[tuple[int, int], ...]
    brevity_penalty: float
    hyp_tokens: int
    ref_tokens: int
    zero_precision: bool


def _ngrams(sentence: Sequence[str], n: int) -> Counter:
    return Counter(tuple(sentence[i : i + n]) for i in range(len(sentence) - n + 1))


def bleu(
    hypotheses: Sequence[Sequence[str]],
    references: Sequence[Sequence[str]],
    max_order: int = 4,
) -> BleuResult:
    """Corpus BLEU: clipped n-gram precisions, geometric mean, brevity penalty.

    Single reference per hypothesis, no smoothing, scaled to [0, 100]. An
    order with zero matches makes the score 0 and sets ``zero_precision``.
    Orders where the hypotheses contain no n-grams at all (every sentence
    shorter than n) drop out of the geometric mean, so identical corpora
    score 100 regardless of sentence lengths.
    """
    if len(hypotheses) != len(references):
        raise ValueError(
            f"hypothesis/reference count mismatch: {len(hypotheses)} vs {len(references)}"
        )
    if not hypotheses:
        raise ValueError("cannot compute BLEU over an empty corpus")
    if max_order < 1:
        raise ValueError("max_order must be >= 1")

    matches = [0] * max_order
    totals = [0] * max_order
    hyp_tokens = ref_tokens = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens += len(hyp)
        ref_tokens += len(ref)
        for n in range(1, max_order + 1):
            hyp_counts = _ngrams(hyp, n)
            if not hyp_counts:
                continue
            ref_counts = _ngrams(ref, n)
            totals[n - 1] += sum(hyp_counts.values())
            matches[n - 1] += sum(
                min(count, ref_counts[gram]) for gram, count in hyp_counts.items()
            )

    if hyp_tokens == 0:
        brevity_penalty = 0.0
    else:
        brevity_penalty = math.exp(min(0.0, 1.0 - ref_tokens / hyp_tokens))
    precisions = tuple(zip(matches, totals))
    effective = [(m, t) for m, t in precisions if t > 0]
    if not effective or any(m == 0 for m, _ in effective):
        return BleuResult(0.0, precisions, brevity_penalty, hyp_tokens, ref_tokens, True)
    log_precision = sum(math.log(m / t) for m, t in effective) / len(effective)
    score = 100.0 * brevity_penalty * math.exp(log_precision)
    return BleuResult(score, precisions, brevity_penalty, hyp_tokens, ref_tokens, False)


@dataclass(frozen=True)
class PredictionRecord:
    """Teacher-forced top-1 predictions aligned with their reference tokens."""

    ref_tokens: Sentence
    top1_tokens: Sentence

    def __post_init__(self):
        if len(self.ref_tokens) != len(self.top1_tokens):
            raise ValueError(
                f"ref/top1 length mismatch: {len(self.ref_tokens)} vs {len(self.top1_tokens)}"
            )


@dataclass(frozen=True)
class BucketAccuracy:
    matches: int
    positions: int

    @property
    def accuracy(self) -> float:
        return self.matches / self.positions


@dataclass(frozen=True)
class AccuracyResult:
    """Per-bucket accuracies (buckets with zero positions are absent)."""

    buckets: dict[str, BucketAccuracy]
    overall: BucketAccuracy


def token_accuracy_by_frequency(
    records: Sequence[PredictionRecord],
    vocab: Vocabulary,
    buckets: FrequencyBuckets = FrequencyBuckets(),
) -> AccuracyResult:
    """Bucket every reference position by its token's training-set rank."""
    if not records:
        raise ValueError("no prediction records")
    matches: Counter[str] = Counter()
    positions: Counter[str] = Counter()
    for record in records:
        for ref_tok, top_tok in zip(record.ref_tokens, record.top1_tokens):
            label = buckets.label_for_rank(vocab.rank(ref_tok))
            positions[label] += 1
            if ref_tok == top_tok:
                matches[label] += 1
    if not positions:
        raise ValueError("prediction records contain no tokens")
    per_bucket = {
        label: BucketAccuracy(matches[label], positions[label])
        for label in buckets.labels
        if positions[label] > 0
    }
    overall = BucketAccuracy(sum(matches.values()), sum(positions.values()))
    return AccuracyResult(buckets=per_bucket, overall=overall)


def frequency_rank_profile(
    sentences: Iterable[Sequence[str]],
    vocab: Vocabulary,
    buckets: FrequencyBuckets = FrequencyBuckets(),
) -> dict[str, float]:
    """Proportion of generated tokens per frequency bucket; proportions sum to 1.

    Ranks come from the training-target vocabulary, never from the profiled
    text, so profiles stay comparable across checkpoints.
    """
    counts: Counter[str] = Counter()
    total = 0
    for sentence in sentences:
        for token in sentence:
            counts[buckets.label_for_rank(vocab.rank(token))] += 1
            total += 1
    if total == 0:
        raise ValueError("no tokens to profile")
    return {label: counts[label] / total for label in buckets.labels}


def read_predictions_jsonl(path) -> list[PredictionRecord]:
    """Read JSON Lines records of the form {"ref": [...], "top1": [...]}."""
    path = Path(path)
    records = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed JSON: {exc.msg}", path=path, line=lineno) from None
        if not isinstance(payload, dict) or "ref" not in payload or "top1" not in payload:
            raise DataError('expected object with "ref" and "top1" keys', path=path, line=lineno)
        try:
            record = PredictionRecord(
                ref_tokens=tuple(str(tok) for tok in payload["ref"]),
                top1_tokens=tuple(str(tok) for tok in payload["top1"]),
            )
        except (TypeError, ValueError) as exc:
            raise DataError(str(exc), path=path, line=lineno) from None
        records.append(record)
    return records
