from __future__ import annotations

import numpy as np
import pytest

from p2p_topk.datastore import (
    DatabaseCatalog,
    DataGenConfig,
    DataGenError,
    PeerDatabase,
    TupleRow,
    check_scoring_spec,
    generate_database,
    local_top_k,
)


def test_generate_database_respects_bounds(small_data):
    for peer in range(20):
        db = generate_database(peer, small_data)
        assert small_data.tuple_count_min <= len(db) <= small_data.tuple_count_max
        assert np.all((db.scores >= 0.0) & (db.scores <= 1.0))
        assert np.all(db.payload_bytes >= 1)


def test_generate_database_is_deterministic_per_peer(small_data):
    first = generate_database(4, small_data)
    again = generate_database(4, small_data)
    other = generate_database(5, small_data)
    assert np.array_equal(first.scores, again.scores)
    assert not (
        len(first) == len(other) and np.array_equal(first.scores, other.scores)
    )


def test_payload_sizes_follow_configured_distribution():
    config = DataGenConfig(
        tuple_count_min=20000,
        tuple_count_max=20000,
        payload_mean_bytes=1024.0,
        payload_variance_bytes=64.0,
        seed=1,
    )
    db = generate_database(0, config)
    assert db.payload_bytes.mean() == pytest.approx(1024.0, abs=0.5)
    # variance is in bytes squared
    assert db.payload_bytes.std() == pytest.approx(8.0, rel=0.05)


@pytest.mark.parametrize(
    "config",
    [
        DataGenConfig(tuple_count_min=0),
        DataGenConfig(tuple_count_min=10, tuple_count_max=5),
        DataGenConfig(payload_mean_bytes=0.5),
        DataGenConfig(payload_variance_bytes=-1.0),
    ],
)
def test_invalid_data_config(config):
    with pytest.raises(DataGenError):
        config.validate()


def test_local_top_k_orders_by_score_then_row():
    db = PeerDatabase.from_rows(
        [TupleRow(0.5, 10), TupleRow(0.9, 10), TupleRow(0.5, 10), TupleRow(0.1, 10)]
    )
    hits = local_top_k(db, 3)
    assert [(hit.row, hit.score) for hit in hits] == [(1, 0.9), (0, 0.5), (2, 0.5)]


def test_local_top_k_short_relation_and_zero():
    db = PeerDatabase.from_rows([TupleRow(0.3, 1), TupleRow(0.7, 1)])
    assert [hit.row for hit in local_top_k(db, 5)] == [1, 0]
    assert local_top_k(db, 0) == ()
    with pytest.raises(DataGenError):
        local_top_k(db, -1)


def test_local_top_k_matches_full_sort(small_data):
    db = generate_database(9, small_data)
    expected = sorted(range(len(db)), key=lambda row: (-db.scores[row], row))[:20]
    assert [hit.row for hit in local_top_k(db, 20)] == expected


def test_rows_view_round_trips():
    rows = [TupleRow(0.25, 3), TupleRow(0.75, 4)]
    assert list(PeerDatabase.from_rows(rows).rows) == rows


def test_catalog_caches_top_items(small_data):
    catalog = DatabaseCatalog(small_data, depth=5)
    top = catalog.top_items(3, 5)
    db = generate_database(3, small_data)
    assert [item.row for item in top] == [hit.row for hit in local_top_k(db, 5)]
    assert catalog.top_items(3, 2) == top[:2]
    assert catalog.row_count(3) == len(db)


def test_catalog_regenerates_beyond_depth(small_data):
    catalog = DatabaseCatalog(small_data, depth=2)
    deep = catalog.top_items(1, 8)
    assert len(deep) == 8
    assert deep[:2] == catalog.top_items(1, 2)


def test_catalog_rejects_negative_depth(small_data):
    with pytest.raises(DataGenError):
        DatabaseCatalog(small_data, depth=-1)


def test_only_descending_score_spec_supported():
    check_scoring_spec("score-desc")
    with pytest.raises(DataGenError, match="unsupported scoring spec"):
        check_scoring_spec("score-asc")
