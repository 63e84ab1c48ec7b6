"""Interpolated modified Kneser-Ney n-gram language models.

Counting follows the closed-vocabulary convention: each sentence is padded
with ``order - 1`` begin markers and one end marker, raw counts are kept only
at the highest order, and every lower order stores continuation counts (the
number of distinct left extensions observed one order up). Training converts
the interpolated estimates into backoff form, i.e. per n-gram a conditional
log10 probability plus, for context n-grams, a log10 backoff weight, which is
exactly what the ARPA serialization stores.

Probability model, written bottom-up with c(.) the count table of a given
order and D(c) the count-dependent discount:

    p_1(w)      = max(c(w) - D(c(w)), 0) / total  +  gamma * 1/(V + 1)
    p_k(w | u)  = max(c(uw) - D(c(uw)), 0) / c(u.)  +  gamma(u) * p_{k-1}(w | u')

where gamma is the discounted mass of the context, u' drops the first context
token, and the uniform base covers the V training event types (end marker
included) plus one slot for the unknown symbol. Begin markers are context
only and never receive probability mass.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import MtssError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

BOS_ID = 0
EOS_ID = 1
UNK_ID = 2

MAX_ORDER = 6
FALLBACK_DISCOUNT = 0.75

_RESERVED = (BOS, EOS, UNK)

NGram = tuple[int, ...]


@dataclass(frozen=True)
class NGramCounts:
    """Per-order count tables plus the count-of-count statistics n1..n4.

    ``tables[k-1]`` maps k-grams (token-id tuples) to counts: raw occurrence
    counts at the highest order, continuation counts below it.
    """

    order: int
    vocab: dict[str, int]
    tables: tuple[dict[NGram, int], ...]
    count_of_counts: tuple[tuple[int, int, int, int], ...]


def count_ngrams(sentences: Sequence[Sequence[str]], order: int) -> NGramCounts:
    """Count n-grams of every order up to ``order`` over padded sentences."""
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [1, {MAX_ORDER}], got {order}")
    sentences = list(sentences)
    if not sentences:
        raise ValueError("cannot count n-grams over empty input")

    vocab = {BOS: BOS_ID, EOS: EOS_ID, UNK: UNK_ID}
    seen = set()
    for sentence in sentences:
        seen.update(sentence)
    for token in _RESERVED:
        if token in seen:
            raise ValueError(f"reserved token {token!r} may not occur in training data")
    for token in sorted(seen):
        vocab[token] = len(vocab)

    top: Counter[NGram] = Counter()
    prefix = (BOS_ID,) * (order - 1)
    for sentence in sentences:
        ids = prefix + tuple(vocab[token] for token in sentence) + (EOS_ID,)
        for i in range(len(ids) - order + 1):
            top[ids[i : i + order]] += 1

    tables: list[dict[NGram, int]] = [dict(top)]
    for _ in range(order - 1):
        higher = tables[-1]
        lower: Counter[NGram] = Counter()
        for gram in higher:
            lower[gram[1:]] += 1
        tables.append(dict(lower))
    tables.reverse()

    count_of_counts = []
    for table in tables:
        histogram = Counter(table.values())
        count_of_counts.append(tuple(histogram.get(j, 0) for j in (1, 2, 3, 4)))
    return NGramCounts(order, vocab, tuple(tables), tuple(count_of_counts))


def _estimate_discounts(coc: tuple[int, int, int, int], mode: str) -> tuple[float, float, float]:
    """Discounts (D1, D2, D3+) for one order from its count-of-counts.

    The closed-form estimate is D_k = k - (k+1) * Y * n_{k+1} / n_k with
    Y = n1 / (n1 + 2 n2). Degenerate statistics (n1 or n2 zero, a zero
    denominator, or a non-positive estimate) fall back to 0.75 so training
    always succeeds on tiny corpora.
    """
    if mode == "fixed":
        return (FALLBACK_DISCOUNT, FALLBACK_DISCOUNT, FALLBACK_DISCOUNT)
    n1, n2, n3, n4 = coc
    if n1 == 0 or n2 == 0:
        return (FALLBACK_DISCOUNT, FALLBACK_DISCOUNT, FALLBACK_DISCOUNT)
    y = n1 / (n1 + 2.0 * n2)
    d1 = 1.0 - 2.0 * y * n2 / n1
    d2 = 2.0 - 3.0 * y * n3 / n2
    if d2 <= 0.0:
        d2 = FALLBACK_DISCOUNT
    if n3 > 0:
        d3 = 3.0 - 4.0 * y * n4 / n3
        if d3 <= 0.0:
            d3 = FALLBACK_DISCOUNT
    else:
        d3 = FALLBACK_DISCOUNT
    return (d1, d2, d3)


@dataclass(frozen=True)
class LMScore:
    """Log10 score of one sentence or of a whole corpus.

    ``token_count`` includes one end-of-sentence event per sentence, so an
    empty sentence still scores exactly one event.
    """

    total_log10: float
    token_count: int

    @property
    def per_token_log10(self) -> float:
        return self.total_log10 / self.token_count


@dataclass(frozen=True)
class NGramLM:
    """Trained model in backoff form.

    ``probs[k-1]`` maps stored k-grams to conditional log10 probabilities;
    ``backoffs[k-1]`` maps context k-grams to log10 backoff weights. Queries
    walk from the longest matching context downward, multiplying in the
    backoff weight of every context that missed.
    """

    order: int
    vocab: dict[str, int]
    probs: tuple[dict[NGram, float], ...]
    backoffs: tuple[dict[NGram, float], ...]

    def id_to_token(self) -> dict[int, str]:
        return {i: token for token, i in self.vocab.items()}

    def event_tokens(self) -> list[str]:
        """All tokens that can be predicted: stored unigram events plus <unk>."""
        reverse = self.id_to_token()
        tokens = [reverse[gram[0]] for gram in self.probs[0]]
        if UNK not in tokens:
            tokens.append(UNK)
        return sorted(tokens)

    def token_id(self, token: str) -> int:
        wid = self.vocab.get(token, UNK_ID)
        if wid < UNK_ID:
            # Marker literals can appear inside real decoder dumps; they are
            # not predictable events, so they score as unknowns.
            return UNK_ID
        return wid

    def _event_id(self, token: str) -> int:
        # Explicit queries may legitimately ask for the end-of-sentence event.
        if token == EOS:
            return EOS_ID
        return self.token_id(token)

    def logprob_ids(self, context: NGram, word_id: int) -> float:
        if self.order > 1:
            context = context[-(self.order - 1):]
        else:
            context = ()
        backoff_total = 0.0
        while True:
            gram = context + (word_id,)
            stored = self.probs[len(gram) - 1].get(gram)
            if stored is not None:
                return stored + backoff_total
            if not context:
                raise MtssError(f"no unigram entry for id {word_id} (model lacks {UNK!r}?)")
            backoff_total += self.backoffs[len(context) - 1].get(context, 0.0)
            context = context[1:]

    def logprob(self, context_tokens: Sequence[str], word: str) -> float:
        context = tuple(self.vocab.get(t, UNK_ID) if t in (BOS, EOS) else self.token_id(t)
                        for t in context_tokens)
        return self.logprob_ids(context, self._event_id(word))

    def prob(self, context_tokens: Sequence[str], word: str) -> float:
        return 10.0 ** self.logprob(context_tokens, word)

    def score_sentence(self, tokens: Sequence[str]) -> LMScore:
        """Sum log10 probabilities of every token plus the end-of-sentence event."""
        context = (BOS_ID,) * (self.order - 1)
        total = 0.0
        for token in tokens:
            wid = self.token_id(token)
            total += self.logprob_ids(context, wid)
            if self.order > 1:
                context = (context + (wid,))[1:]
        total += self.logprob_ids(context, EOS_ID)
        return LMScore(total_log10=total, token_count=len(tokens) + 1)

    def score_corpus(self, sentences: Iterable[Sequence[str]]) -> LMScore:
        """Token-weighted aggregate: sums of totals and token counts."""
        total = 0.0
        count = 0
        for sentence in sentences:
            score = self.score_sentence(sentence)
            total += score.total_log10
            count += score.token_count
        if count == 0:
            raise ValueError("cannot score an empty corpus")
        return LMScore(total_log10=total, token_count=count)


def train_lm(counts: NGramCounts, discount_mode: str = "modified") -> NGramLM:
    """Estimate an interpolated modified Kneser-Ney model from counts.

    ``discount_mode`` is "modified" (count-of-count discounts with the 0.75
    fallback) or "fixed" (0.75 at every order).
    """
    if discount_mode not in ("modified", "fixed"):
        raise ValueError(f"unknown discount_mode {discount_mode!r}")
    order = counts.order
    discounts = [_estimate_discounts(coc, discount_mode) for coc in counts.count_of_counts]

    unigrams = counts.tables[0]
    event_count = len(unigrams)
    base = 1.0 / (event_count + 1)

    d1, d2, d3 = discounts[0]
    total = sum(unigrams.values())
    linear: dict[NGram, float] = {}
    removed = 0.0
    for gram, count in unigrams.items():
        discount = d1 if count == 1 else d2 if count == 2 else d3
        kept = count - discount
        if kept < 0.0:
            kept = 0.0
        linear[gram] = kept / total
        removed += count - kept
    gamma = removed / total
    for gram in linear:
        linear[gram] += gamma * base
    linear[(UNK_ID,)] = gamma * base

    prob_tables: list[dict[NGram, float]] = [linear]
    backoff_tables: list[dict[NGram, float]] = []

    for k in range(2, order + 1):
        table = counts.tables[k - 1]
        d1, d2, d3 = discounts[k - 1]
        totals: dict[NGram, int] = defaultdict(int)
        removed_mass: dict[NGram, float] = defaultdict(float)
        kept_mass: dict[NGram, float] = {}
        for gram, count in table.items():
            discount = d1 if count == 1 else d2 if count == 2 else d3
            kept = count - discount
            if kept < 0.0:
                kept = 0.0
            kept_mass[gram] = kept
            context = gram[:-1]
            totals[context] += count
            removed_mass[context] += count - kept
        gammas = {context: removed_mass[context] / totals[context] for context in totals}

        lower = prob_tables[-1]
        level: dict[NGram, float] = {}
        for gram, kept in kept_mass.items():
            context = gram[:-1]
            level[gram] = kept / totals[context] + gammas[context] * lower[gram[1:]]
        prob_tables.append(level)
        backoff_tables.append(gammas)

    probs = tuple({gram: math.log10(p) for gram, p in table.items()} for table in prob_tables)
    backoffs = tuple(
        {context: math.log10(g) for context, g in gammas.items()} for gammas in backoff_tables
    )
    return NGramLM(order=order, vocab=dict(counts.vocab), probs=probs, backoffs=backoffs)


def train_from_sentences(
    sentences: Sequence[Sequence[str]], order: int, discount_mode: str = "modified"
) -> NGramLM:
    return train_lm(count_ngrams(sentences, order), discount_mode)
