"""Shared fixtures: hypothesis profiles and synthetic corpus builders."""

from __future__ import annotations

import os
import random

import pytest
from hypothesis import HealthCheck, Verbosity, settings

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("dev", max_examples=15, deadline=None)
settings.register_profile("debug", max_examples=15, deadline=None, verbosity=Verbosity.verbose)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


def random_tiny_corpus(rng: random.Random, max_types=8, max_tokens=30):
    """A small corpus over single-letter types, at least one non-empty sentence."""
    alphabet = list("abcdefgh")[: rng.randint(2, max_types)]
    sentences = []
    budget = rng.randint(4, max_tokens)
    while budget > 0:
        length = rng.randint(1, min(6, budget))
        sentences.append(tuple(rng.choice(alphabet) for _ in range(length)))
        budget -= length
    return sentences


def planted_monotone_corpus(rng: random.Random, n_sentences=200, vocab=20, lengths=(3, 8)):
    """Bijective-dictionary pairs with monotone word order.

    Source words s0..s{vocab-1} translate one-to-one to t0..t{vocab-1};
    each sentence samples distinct words so the lexicon alone disambiguates.
    """
    source_words = [f"s{i}" for i in range(vocab)]
    pairs = []
    for _ in range(n_sentences):
        length = rng.randint(*lengths)
        chosen = rng.sample(range(vocab), length)
        src = tuple(source_words[i] for i in chosen)
        tgt = tuple(f"t{i}" for i in chosen)
        pairs.append((src, tgt))
    return pairs


def window_shuffle(tokens, window: int, rng: random.Random):
    """Shuffle tokens inside consecutive windows of the given size."""
    if window <= 1:
        return tuple(tokens)
    out = []
    tokens = list(tokens)
    for start in range(0, len(tokens), window):
        block = tokens[start : start + window]
        rng.shuffle(block)
        out.extend(block)
    return tuple(out)


def token_dropout(tokens, rate: float, rng: random.Random):
    """Drop tokens independently, always keeping at least one."""
    if rate <= 0.0:
        return tuple(tokens)
    kept = [tok for tok in tokens if rng.random() >= rate]
    if not kept and tokens:
        kept = [tokens[0]]
    return tuple(kept)


def synthetic_checkpoints(
    rng: random.Random,
    n_sentences=160,
    vocab=25,
    lengths=(10, 16),
    windows=(5, 4, 3, 2, 0),
    dropouts=(0.08, 0.06, 0.04, 0.02, 0.0),
    step_size=1000,
):
    """Pseudo-checkpoints: progressively weaker corruption of clean translations.

    Returns (sources, references, [(step, translations), ...]) where
    checkpoint k applies a local window shuffle of size windows[k] and token
    dropout dropouts[k] to the clean monotone translations.
    """
    pairs = planted_monotone_corpus(rng, n_sentences=n_sentences, vocab=vocab, lengths=lengths)
    sources = [src for src, _ in pairs]
    references = [tgt for _, tgt in pairs]
    checkpoints = []
    for index, (window, rate) in enumerate(zip(windows, dropouts), start=1):
        translations = [
            token_dropout(window_shuffle(tgt, window, rng), rate, rng)
            for tgt in references
        ]
        checkpoints.append((index * step_size, translations))
    return sources, references, checkpoints


@pytest.fixture
def rng():
    return random.Random(7)
