import random

import pytest
from hypothesis import given, strategies as st

from mtss.align import SentenceAlignment
from mtss.reorder import (
    SourcePermutation,
    corpus_reordering_scores,
    count_inversions,
    derive_permutation,
    fuzzy_reordering_score,
    kendall_tau_distance,
)
from oracles import inversions_bruteforce


def _alignment(links, src_len, tgt_len):
    return SentenceAlignment(frozenset(links), src_len, tgt_len)


def _perm(values):
    return SourcePermutation(order=tuple(values), retained=tuple(range(len(values))))


# Worked pair of reorderings, stated 1-based as (2,1,4,3,6,5) and (4,5,6,1,2,3):
# the first one swaps within pairs, the second rotates whole halves.
PAIRWISE_SWAPS = _perm((1, 0, 3, 2, 5, 4))
HALF_ROTATION = _perm((3, 4, 5, 0, 1, 2))


class TestDerivePermutation:
    def test_identity(self):
        perm = derive_permutation(_alignment({(0, 0), (1, 1), (2, 2)}, 3, 3))
        assert perm.order == (0, 1, 2)

    def test_swap(self):
        perm = derive_permutation(_alignment({(0, 1), (1, 0)}, 2, 2))
        assert perm.order == (1, 0)

    def test_three_way_rotation(self):
        perm = derive_permutation(_alignment({(0, 2), (1, 0), (2, 1)}, 3, 3))
        assert perm.order == (1, 2, 0)

    def test_zero_links_signal(self):
        assert derive_permutation(_alignment(set(), 3, 3)) is None

    def test_unaligned_source_inherits_preceding_key(self):
        # source 1 unaligned: follows source 0 in reading order
        perm = derive_permutation(_alignment({(0, 0), (2, 1)}, 3, 2))
        assert perm.order == (0, 1, 2)
        # leading unaligned source keys to -1 and stays first
        perm = derive_permutation(_alignment({(1, 0)}, 2, 1))
        assert perm.order == (0, 1)

    def test_multi_target_source_keyed_by_minimum(self):
        # source 1 links targets {0, 2}; key 0 puts it before source 0 (key 1)
        perm = derive_permutation(_alignment({(1, 0), (1, 2), (0, 1)}, 2, 3))
        assert perm.order == (1, 0)

    def test_retained_lists_all_sources(self):
        perm = derive_permutation(_alignment({(0, 0)}, 4, 1))
        assert perm.retained == (0, 1, 2, 3)
        assert sorted(perm.order) == [0, 1, 2, 3]


class TestFuzzyReorderingScore:
    def test_pairwise_swaps_score_zero(self):
        assert fuzzy_reordering_score(PAIRWISE_SWAPS) == 0.0

    def test_half_rotation_scores_point_eight(self):
        assert fuzzy_reordering_score(HALF_ROTATION) == 0.8

    @pytest.mark.parametrize("length", [2, 3, 7, 31])
    def test_identity_scores_one(self, length):
        assert fuzzy_reordering_score(_perm(range(length))) == 1.0

    def test_below_threshold(self):
        with pytest.raises(ValueError):
            fuzzy_reordering_score(_perm([0]))

    @given(st.permutations(list(range(8))))
    def test_relabeling_invariance(self, values):
        # only adjacency of successive values matters, not their absolute labels
        from mtss.reorder import _chunk_count

        assert _chunk_count(values) == _chunk_count([v + 7 for v in values])


class TestKendallTau:
    def test_pairwise_swaps(self):
        assert kendall_tau_distance(PAIRWISE_SWAPS) == pytest.approx(3 / 15)

    def test_half_rotation(self):
        assert kendall_tau_distance(HALF_ROTATION) == pytest.approx(9 / 15)

    @pytest.mark.parametrize("length", [2, 5, 11])
    def test_reversed_permutation_scores_one(self, length):
        assert kendall_tau_distance(_perm(range(length - 1, -1, -1))) == 1.0

    @pytest.mark.parametrize("length", [2, 3, 9])
    def test_identity_scores_zero(self, length):
        assert kendall_tau_distance(_perm(range(length))) == 0.0

    def test_below_threshold(self):
        with pytest.raises(ValueError):
            kendall_tau_distance(_perm([0]))

    def test_merge_sort_equals_bruteforce(self):
        rng = random.Random(17)
        for _ in range(1000):
            n = rng.randint(2, 50)
            values = list(range(n))
            rng.shuffle(values)
            assert count_inversions(values) == inversions_bruteforce(values)

    @given(st.permutations(list(range(12))))
    def test_merge_sort_equals_bruteforce_property(self, values):
        assert count_inversions(values) == inversions_bruteforce(values)


def test_metric_disagreement_on_worked_pair():
    # FRS calls the pairwise-swap reordering less monotonic, Kendall calls the
    # half rotation less monotonic.
    assert fuzzy_reordering_score(PAIRWISE_SWAPS) < fuzzy_reordering_score(HALF_ROTATION)
    assert kendall_tau_distance(PAIRWISE_SWAPS) < kendall_tau_distance(HALF_ROTATION)


class TestCorpusScores:
    def test_all_identity(self):
        alignments = [
            _alignment({(i, i) for i in range(12)}, 12, 12) for _ in range(4)
        ]
        summary = corpus_reordering_scores(alignments)
        assert summary.mean_frs == 1.0
        assert summary.mean_kendall == 0.0
        assert summary.skipped_frs == summary.skipped_kendall == 0

    def test_macro_average(self):
        # identity on 6 positions (FRS 1.0) and one break (FRS 0.8)
        identity = _alignment({(i, i) for i in range(6)}, 6, 6)
        rotated = _alignment({(i, (i + 3) % 6) for i in range(6)}, 6, 6)
        summary = corpus_reordering_scores([identity, rotated], min_kendall_len=10)
        assert summary.mean_frs == pytest.approx(0.9)
        assert summary.kendall_sentences == 0
        assert summary.mean_kendall is None

    def test_thresholds_and_skip_counts(self):
        short = _alignment({(0, 0)}, 1, 1)          # below both thresholds
        mid = _alignment({(i, i) for i in range(5)}, 5, 5)   # FRS only
        long = _alignment({(i, i) for i in range(10)}, 10, 10)
        empty = _alignment(set(), 4, 4)
        summary = corpus_reordering_scores([short, mid, long, empty])
        assert summary.frs_sentences == 2
        assert summary.kendall_sentences == 1
        assert summary.skipped_frs == 2
        assert summary.skipped_kendall == 3
        assert summary.empty_alignments == 1
        reasons = [row.skipped_reason for row in summary.sentences]
        assert reasons[0] and "below_frs_threshold" in reasons[0]
        assert reasons[1] and "below_kendall_threshold" in reasons[1]
        assert reasons[2] is None
        assert reasons[3] == "empty_alignment"

    def test_zero_qualifying_means_absent(self):
        summary = corpus_reordering_scores([_alignment(set(), 3, 3)])
        assert summary.mean_frs is None
        assert summary.mean_kendall is None

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            corpus_reordering_scores([])
