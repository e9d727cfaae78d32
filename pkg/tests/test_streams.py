"""Stream generator and exact-count oracle."""

import numpy as np
import pytest

from cardsketch.errors import StreamIntegrityError
from cardsketch.streams import Stream, distinct_keys, exact_count, generate_stream


def test_unit_stream_shape():
    s = generate_stream(5, seed=1)
    assert len(s) == 5
    assert len(set(s.keys.tolist())) == 5
    assert (s.d == 1).all()


def test_repeats():
    s = generate_stream(7, seed=2, repeats=3)
    assert len(s) == 21
    assert len(set(s.keys.tolist())) == 7
    assert exact_count(s) == 7


def test_heavy_tail_repeats():
    s = generate_stream(100, seed=3, heavy_tail=True)
    assert len(s) >= 100
    assert exact_count(s) == 100


def test_random_d_positive():
    s = generate_stream(50, seed=4, d_model="random")
    assert (s.d >= 1).all() and (s.d <= 10).all()
    assert exact_count(s) == 50


def test_deleted_extra_keeps_live_set():
    s = generate_stream(40, seed=5, deleted_extra=25)
    assert len(s) == 40 + 50
    assert exact_count(s) == 40


def test_generator_deterministic():
    a = generate_stream(30, seed=6, d_model="random")
    b = generate_stream(30, seed=6, d_model="random")
    np.testing.assert_array_equal(a.keys, b.keys)
    np.testing.assert_array_equal(a.d, b.d)
    c = generate_stream(30, seed=7, d_model="random")
    assert not np.array_equal(a.keys, c.keys)


def test_distinct_keys_disjoint_offsets():
    a = distinct_keys(100, seed=1)
    b = distinct_keys(50, seed=1, offset=100)
    assert not set(a.tolist()) & set(b.tolist())


def test_exact_count_empty():
    assert exact_count(Stream(keys=np.array([], dtype=np.uint64),
                              d=np.array([], dtype=np.int64))) == 0


def test_exact_count_with_deletions():
    keys = np.array([1, 1, 2], dtype=np.uint64)
    d = np.array([1, -1, 1], dtype=np.int64)
    assert exact_count(Stream(keys=keys, d=d)) == 1


def test_exact_count_integrity():
    keys = np.array([1, 1], dtype=np.uint64)
    d = np.array([1, -2], dtype=np.int64)
    with pytest.raises(StreamIntegrityError):
        exact_count(Stream(keys=keys, d=d))


def test_oracle_matches_target_on_generated_streams():
    for seed in range(10):
        s = generate_stream(123, seed=seed, repeats=2, deleted_extra=17)
        assert exact_count(s) == 123


def test_validation():
    with pytest.raises(ValueError):
        generate_stream(0, seed=1)
    with pytest.raises(ValueError):
        generate_stream(5, seed=1, repeats=0)
    with pytest.raises(ValueError):
        generate_stream(5, seed=1, d_model="nope")
