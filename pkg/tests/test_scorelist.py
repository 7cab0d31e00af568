from __future__ import annotations

import random

from p2p_topk.protocol.scorelist import (
    ENTRY_BYTES,
    ScoreEntry,
    ScoreList,
    build_retrieval_plan,
    entry_order,
    merge_score_lists,
)


def _list(*pairs: tuple[int, float]) -> ScoreList:
    return ScoreList.from_entries(ScoreEntry(owner, score) for owner, score in pairs)


def test_from_entries_sorts_and_truncates():
    sl = ScoreList.from_entries(
        [ScoreEntry(2, 0.5), ScoreEntry(1, 0.9), ScoreEntry(1, 0.5)], k=2
    )
    assert sl.entries == (ScoreEntry(1, 0.9), ScoreEntry(1, 0.5))
    assert sl.is_sorted()
    assert sl.entry_bytes == 2 * ENTRY_BYTES


def test_merge_keeps_best_k():
    merged = merge_score_lists([_list((1, 0.9), (1, 0.4)), _list((2, 0.8), (2, 0.7))], 3)
    assert merged.scores == [0.9, 0.8, 0.7]


def test_merge_keeps_duplicate_identities():
    merged = merge_score_lists([_list((1, 0.5)), _list((1, 0.5))], 5)
    assert len(merged) == 2


def test_merge_of_nothing_is_empty():
    assert not merge_score_lists([], 3)
    assert not merge_score_lists([_list((1, 0.5))], 0)


def test_merge_matches_full_sort():
    rng = random.Random(4)
    lists = [
        ScoreList.from_entries(
            ScoreEntry(owner, rng.random(), row) for row in range(rng.randint(0, 12))
        )
        for owner in range(8)
    ]
    union = sorted((entry for sl in lists for entry in sl), key=entry_order)
    assert merge_score_lists(lists, 20).entries == tuple(union[:20])


def test_truncated_and_bool():
    sl = _list((1, 0.3), (2, 0.2))
    assert sl.truncated(1).scores == [0.3]
    assert not sl.truncated(0)
    assert bool(sl)


def test_retrieval_plan_counts_per_owner():
    plan = build_retrieval_plan(_list((4, 0.9), (2, 0.8), (4, 0.7)))
    assert plan == {2: 1, 4: 2}
    assert list(plan) == [2, 4]
    assert sum(plan.values()) == 3
