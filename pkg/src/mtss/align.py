"""EM training of a reparameterized IBM Model 2 with a diagonal prior.

Each target position j (0-based) in a pair with source length n and target
length m picks a source parent: the null word with probability p0, or source
position i with prior proportional to

    (1 - p0) * exp(-tension * |i/n - (j+1)/m|)   (i 1-based inside the prior)

normalized over the n real positions. EM re-estimates only the lexical table
t(target | source); tension and p0 stay fixed. Alignment direction is
source -> translation: target tokens choose source parents, so alignments are
one link per target token at most.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError

# Sparse lexical entries below this value are dropped after every M-step.
PRUNE_THRESHOLD = 1e-10
# Lexical probability charged for source/target pairs never seen in training.
UNSEEN_PROB = 1e-12

NULL_LABEL = "<NULL>"


@dataclass(frozen=True)
class SentenceAlignment:
    """Zero-based alignment links with at most one link per target index."""

    links: frozenset[tuple[int, int]]
    src_len: int
    tgt_len: int

    def __post_init__(self):
        seen_targets = set()
        for src_idx, tgt_idx in self.links:
            if not (0 <= src_idx < self.src_len and 0 <= tgt_idx < self.tgt_len):
                raise ValueError(
                    f"link ({src_idx},{tgt_idx}) outside {self.src_len}x{self.tgt_len}"
                )
            if tgt_idx in seen_targets:
                raise ValueError(f"target index {tgt_idx} linked more than once")
            seen_targets.add(tgt_idx)


@dataclass
class AlignmentModel:
    """Lexical table plus the fixed prior parameters.

    ``ttable`` maps a source token (or ``None`` for the null word) to its
    conditional distribution over target tokens; every row sums to one.
    """

    ttable: dict[str | None, dict[str, float]]
    diagonal_tension: float
    null_prob: float
    src_vocab: frozenset[str]
    tgt_vocab: frozenset[str]
    log_likelihoods: tuple[float, ...] = ()


def _diagonal_priors(
    n: int, m: int, tension: float, null_prob: float, cache: dict
) -> list[list[float]]:
    """Per target position: [p(null), p(i=0), ..., p(i=n-1)]."""
    key = (n, m)
    priors = cache.get(key)
    if priors is None:
        priors = []
        for j in range(m):
            weights = [math.exp(-tension * abs((i + 1) / n - (j + 1) / m)) for i in range(n)]
            z = sum(weights)
            priors.append([null_prob] + [(1.0 - null_prob) * w / z for w in weights])
        cache[key] = priors
    return priors


def train_aligner(
    pairs: Sequence[tuple[Sequence[str], Sequence[str]]],
    iterations: int = 5,
    diagonal_tension: float = 4.0,
    null_prob: float = 0.08,
) -> AlignmentModel:
    """Run EM over target tokens; sentence pairs with an empty side are skipped."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not 0.0 <= null_prob < 1.0:
        raise ValueError("null_prob must be in [0, 1)")
    if diagonal_tension <= 0.0:
        raise ValueError("diagonal_tension must be positive")
    usable = [(tuple(src), tuple(tgt)) for src, tgt in pairs if src and tgt]
    if not usable:
        raise ValueError("no non-empty sentence pairs to train on")

    src_vocab = frozenset(tok for src, _ in usable for tok in src)
    tgt_vocab = frozenset(tok for _, tgt in usable for tok in tgt)
    uniform = 1.0 / len(tgt_vocab)

    ttable: dict[str | None, dict[str, float]] = {}
    prior_cache: dict = {}
    log_likelihoods = []

    for iteration in range(iterations):
        expected: dict[str | None, dict[str, float]] = defaultdict(lambda: defaultdict(float))
        log_likelihood = 0.0
        for src, tgt in usable:
            priors = _diagonal_priors(
                len(src), len(tgt), diagonal_tension, null_prob, prior_cache
            )
            for j, tgt_tok in enumerate(tgt):
                if iteration == 0:
                    scores = [priors[j][0] * uniform]
                    scores += [priors[j][i + 1] * uniform for i in range(len(src))]
                else:
                    scores = [priors[j][0] * ttable.get(None, {}).get(tgt_tok, 0.0)]
                    scores += [
                        priors[j][i + 1] * ttable.get(src_tok, {}).get(tgt_tok, 0.0)
                        for i, src_tok in enumerate(src)
                    ]
                denom = sum(scores)
                if denom <= 0.0:
                    continue
                log_likelihood += math.log(denom)
                expected[None][tgt_tok] += scores[0] / denom
                for i, src_tok in enumerate(src):
                    expected[src_tok][tgt_tok] += scores[i + 1] / denom
        log_likelihoods.append(log_likelihood)

        ttable = {}
        for src_tok, row in expected.items():
            kept = {tgt_tok: value for tgt_tok, value in row.items() if value > 0.0}
            total = sum(kept.values())
            normalized = {tgt_tok: value / total for tgt_tok, value in kept.items()}
            pruned = {t: p for t, p in normalized.items() if p >= PRUNE_THRESHOLD}
            if not pruned:
                pruned = normalized
            total = sum(pruned.values())
            ttable[src_tok] = {t: p / total for t, p in pruned.items()}

    return AlignmentModel(
        ttable=ttable,
        diagonal_tension=diagonal_tension,
        null_prob=null_prob,
        src_vocab=src_vocab,
        tgt_vocab=tgt_vocab,
        log_likelihoods=tuple(log_likelihoods),
    )


def viterbi_align(
    model: AlignmentModel, src: Sequence[str], tgt: Sequence[str]
) -> SentenceAlignment:
    """Link every target token to its most probable source parent.

    Target tokens outside the model's target vocabulary get no link. Unseen
    lexical pairs are charged ``UNSEEN_PROB`` so the prior decides. The null
    word wins exact ties; among source positions the smallest index wins.
    """
    src = tuple(src)
    tgt = tuple(tgt)
    if not src or not tgt:
        return SentenceAlignment(frozenset(), len(src), len(tgt))

    priors = _diagonal_priors(
        len(src), len(tgt), model.diagonal_tension, model.null_prob, {}
    )
    links = set()
    null_row = model.ttable.get(None, {})
    for j, tgt_tok in enumerate(tgt):
        if tgt_tok not in model.tgt_vocab:
            continue
        best = priors[j][0] * null_row.get(tgt_tok, UNSEEN_PROB)
        best_src = None
        for i, src_tok in enumerate(src):
            score = priors[j][i + 1] * model.ttable.get(src_tok, {}).get(tgt_tok, UNSEEN_PROB)
            if score > best:
                best = score
                best_src = i
        if best_src is not None:
            links.add((best_src, j))
    return SentenceAlignment(frozenset(links), len(src), len(tgt))


def parse_pharaoh_line(
    line: str, src_len: int | None = None, tgt_len: int | None = None
) -> frozenset[tuple[int, int]]:
    """Parse one line of space-separated ``i-j`` pairs (0-based)."""
    links = set()
    for position, token in enumerate(line.split(), start=1):
        head, sep, tail = token.partition("-")
        if not sep or not head.isdigit() or not tail.isdigit():
            raise DataError(f"malformed alignment pair {token!r} (token {position})")
        src_idx, tgt_idx = int(head), int(tail)
        if src_len is not None and src_idx >= src_len:
            raise DataError(
                f"source index {src_idx} out of range for length {src_len} (token {position})"
            )
        if tgt_len is not None and tgt_idx >= tgt_len:
            raise DataError(
                f"target index {tgt_idx} out of range for length {tgt_len} (token {position})"
            )
        links.add((src_idx, tgt_idx))
    return frozenset(links)


def emit_pharaoh(alignment: SentenceAlignment) -> str:
    """Emit ``i-j`` pairs sorted by (target, source) index."""
    ordered = sorted(alignment.links, key=lambda link: (link[1], link[0]))
    return " ".join(f"{src_idx}-{tgt_idx}" for src_idx, tgt_idx in ordered)


def read_pharaoh_file(path) -> list[frozenset[tuple[int, int]]]:
    path = Path(path)
    alignments = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        try:
            alignments.append(parse_pharaoh_line(line))
        except DataError as exc:
            raise DataError(str(exc), path=path, line=lineno) from None
    return alignments


def write_pharaoh_file(alignments: Iterable[SentenceAlignment], path) -> None:
    lines = [emit_pharaoh(alignment) for alignment in alignments]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def dump_ttable(model: AlignmentModel, path) -> None:
    """Write the lexical table as ``source<TAB>target<TAB>prob`` rows."""
    rows = []
    for src_tok in sorted(model.ttable, key=lambda s: (s is not None, s or "")):
        label = NULL_LABEL if src_tok is None else src_tok
        for tgt_tok in sorted(model.ttable[src_tok]):
            rows.append(f"{label}\t{tgt_tok}\t{model.ttable[src_tok][tgt_tok]!r}")
    Path(path).write_text("\n".join(rows) + ("\n" if rows else ""), encoding="utf-8")
