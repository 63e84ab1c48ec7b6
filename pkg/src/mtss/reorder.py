"""Source permutations induced by alignments and their monotonicity scores.

The fuzzy reordering score is 1 - (C-1)/(M-1) with C the number of chunks of
contiguously aligned words relative to the identity ordering; 1 means the
reordering is perfectly monotonic. The Kendall tau distance is the number of
pairwise inversions normalized by n(n-1)/2; 0 means identical order. The two
disagree on what "less monotonic" means: the first counts jumps, the second
weighs their distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .align import SentenceAlignment


@dataclass(frozen=True)
class SourcePermutation:
    """Permutation of retained source positions, relabeled to 0..M-1.

    ``retained`` lists the original source indices in ascending order;
    ``order`` gives their reading order under the alignment.
    """

    order: tuple[int, ...]
    retained: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError(f"not a permutation of 0..{len(self.order) - 1}: {self.order}")
        if len(self.retained) != len(self.order):
            raise ValueError("retained and order must have equal length")

    def __len__(self) -> int:
        return len(self.order)


def derive_permutation(alignment: SentenceAlignment) -> SourcePermutation | None:
    """Read the source positions in target order.

    Every aligned source index is keyed by the smallest target index it links
    to; unaligned source indices inherit the key of the nearest preceding
    aligned index (-1 if none) and a stable sort keeps them right after it.
    Returns None when the alignment has no links.
    """
    if not alignment.links:
        return None
    min_target: dict[int, int] = {}
    for src_idx, tgt_idx in alignment.links:
        current = min_target.get(src_idx)
        if current is None or tgt_idx < current:
            min_target[src_idx] = tgt_idx

    keys = []
    last_key = -1
    for src_idx in range(alignment.src_len):
        if src_idx in min_target:
            last_key = min_target[src_idx]
        keys.append((last_key, src_idx))
    order = tuple(src_idx for _, src_idx in sorted(keys))
    return SourcePermutation(order=order, retained=tuple(range(alignment.src_len)))


def _chunk_count(order: Sequence[int]) -> int:
    breaks = sum(1 for a, b in zip(order, order[1:]) if b != a + 1)
    return breaks + 1


def fuzzy_reordering_score(permutation: SourcePermutation) -> float:
    length = len(permutation)
    if length < 2:
        raise ValueError(f"fuzzy reordering score needs at least 2 positions, got {length}")
    chunks = _chunk_count(permutation.order)
    return 1.0 - (chunks - 1) / (length - 1)


def count_inversions(values: Sequence[int]) -> int:
    """Count pairs out of order in O(n log n) by merge sorting."""
    arr = list(values)
    n = len(arr)
    if n < 2:
        return 0
    buffer = arr[:]

    def merge_count(lo: int, hi: int) -> int:
        if hi - lo < 2:
            return 0
        mid = (lo + hi) // 2
        inversions = merge_count(lo, mid) + merge_count(mid, hi)
        left, right, out = lo, mid, lo
        while left < mid and right < hi:
            if arr[right] < arr[left]:
                inversions += mid - left
                buffer[out] = arr[right]
                right += 1
            else:
                buffer[out] = arr[left]
                left += 1
            out += 1
        buffer[out:hi] = arr[left:mid] if left < mid else arr[right:hi]
        arr[lo:hi] = buffer[lo:hi]
        return inversions

    return merge_count(0, n)


def kendall_tau_distance(permutation: SourcePermutation) -> float:
    length = len(permutation)
    if length < 2:
        raise ValueError(f"Kendall tau distance needs at least 2 positions, got {length}")
    return count_inversions(permutation.order) / (length * (length - 1) / 2)


@dataclass(frozen=True)
class SentenceReordering:
    index: int
    src_len: int
    frs: float | None
    kendall: float | None
    skipped_reason: str | None


@dataclass(frozen=True)
class ReorderingSummary:
    """Macro-averaged corpus scores with per-metric skip accounting."""

    mean_frs: float | None
    mean_kendall: float | None
    frs_sentences: int
    kendall_sentences: int
    skipped_frs: int
    skipped_kendall: int
    empty_alignments: int
    sentences: tuple[SentenceReordering, ...]


def corpus_reordering_scores(
    alignments: Iterable[SentenceAlignment],
    min_frs_len: int = 2,
    min_kendall_len: int = 10,
) -> ReorderingSummary:
    """Score each alignment and macro-average over qualifying sentences.

    Length thresholds are applied to the permutation length (the number of
    retained source positions): at least ``min_frs_len`` for the fuzzy
    reordering score, at least ``min_kendall_len`` for Kendall tau. A metric
    with zero qualifying sentences reports an absent mean, not zero.
    """
    rows = []
    frs_values = []
    kendall_values = []
    skipped_frs = skipped_kendall = empty = 0
    for index, alignment in enumerate(alignments):
        permutation = derive_permutation(alignment)
        if permutation is None:
            empty += 1
            skipped_frs += 1
            skipped_kendall += 1
            rows.append(
                SentenceReordering(index, alignment.src_len, None, None, "empty_alignment")
            )
            continue
        length = len(permutation)
        reasons = []
        frs = kendall = None
        if length >= max(min_frs_len, 2):
            frs = fuzzy_reordering_score(permutation)
            frs_values.append(frs)
        else:
            skipped_frs += 1
            reasons.append(f"below_frs_threshold({length}<{max(min_frs_len, 2)})")
        if length >= max(min_kendall_len, 2):
            kendall = kendall_tau_distance(permutation)
            kendall_values.append(kendall)
        else:
            skipped_kendall += 1
            reasons.append(f"below_kendall_threshold({length}<{max(min_kendall_len, 2)})")
        rows.append(
            SentenceReordering(index, alignment.src_len, frs, kendall, ";".join(reasons) or None)
        )
    if not rows:
        raise ValueError("no alignments to score")
    return ReorderingSummary(
        mean_frs=sum(frs_values) / len(frs_values) if frs_values else None,
        mean_kendall=sum(kendall_values) / len(kendall_values) if kendall_values else None,
        frs_sentences=len(frs_values),
        kendall_sentences=len(kendall_values),
        skipped_frs=skipped_frs,
        skipped_kendall=skipped_kendall,
        empty_alignments=empty,
        sentences=tuple(rows),
    )
