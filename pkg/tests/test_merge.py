import numpy as np
import pytest

from binseg import errors, merge, superpixel
from oracles import all_labels_connected


def grid_superpixels(rows, cols, cell=2):
    labels = np.arange(rows * cols, dtype=np.int32).reshape(rows, cols)
    labels = np.repeat(np.repeat(labels, cell, axis=0), cell, axis=1)
    return superpixel.superpixels_from_labels(labels)


def test_hamming_basic():
    a = np.array([True, False, True])
    assert merge.hamming(a, a) == 0
    assert merge.hamming(a, ~a) == 3


def test_hamming_matches_loop():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(1, 16))
        a = rng.integers(0, 2, n).astype(bool)
        b = rng.integers(0, 2, n).astype(bool)
        expect = sum(1 for x, y in zip(a, b) if x != y)
        assert merge.hamming(a, b) == expect
        assert merge.hamming(b, a) == expect


def test_hamming_triangle_inequality():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a, b, c = rng.integers(0, 2, (3, 8)).astype(bool)
        assert merge.hamming(a, c) <= merge.hamming(a, b) + merge.hamming(b, c)


def test_hamming_length_mismatch():
    with pytest.raises(errors.LengthMismatch):
        merge.hamming(np.zeros(3, bool), np.zeros(4, bool))


def test_identical_codes_merge_to_one():
    sp = grid_superpixels(3, 3)
    codes = np.zeros((9, 4), bool)
    labels = merge.merge_superpixels(sp, codes)
    assert labels.max() == 0


def test_distinct_codes_identity():
    sp = grid_superpixels(2, 2)
    codes = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], bool)
    labels = merge.merge_superpixels(sp, codes, merge.MergePolicy(max_hamming=0))
    np.testing.assert_array_equal(labels, sp.labels)


def test_checkerboard_stays_16():
    sp = grid_superpixels(4, 4)
    codes = np.zeros((16, 2), bool)
    for i in range(16):
        r, c = divmod(i, 4)
        if (r + c) % 2:
            codes[i] = (True, True)
    labels = merge.merge_superpixels(sp, codes, merge.MergePolicy(max_hamming=0, scope="adjacent"))
    assert labels.max() + 1 == 16


def test_checkerboard_global_merges_to_two():
    sp = grid_superpixels(4, 4)
    codes = np.zeros((16, 2), bool)
    for i in range(16):
        r, c = divmod(i, 4)
        if (r + c) % 2:
            codes[i] = (True, True)
    labels = merge.merge_superpixels(sp, codes, merge.MergePolicy(max_hamming=0, scope="global"))
    assert labels.max() + 1 == 2


def test_global_with_hamming_radius():
    sp = grid_superpixels(1, 3, cell=1)
    codes = np.array([[0, 0, 0], [0, 0, 1], [1, 1, 1]], bool)
    labels = merge.merge_superpixels(sp, codes, merge.MergePolicy(max_hamming=1, scope="global"))
    # 000-001 within distance 1; 111 two bits from 001
    assert labels.max() + 1 == 2


def test_adjacent_output_connected():
    rng = np.random.default_rng(2)
    sp = grid_superpixels(4, 5)
    codes = rng.integers(0, 2, (20, 3)).astype(bool)
    labels = merge.merge_superpixels(sp, codes, merge.MergePolicy(max_hamming=1))
    assert all_labels_connected(labels)
    assert labels.max() + 1 <= sp.count


def test_monotone_in_max_hamming():
    rng = np.random.default_rng(3)
    sp = grid_superpixels(4, 4)
    codes = rng.integers(0, 2, (16, 4)).astype(bool)
    counts = []
    for mh in range(5):
        labels = merge.merge_superpixels(sp, codes, merge.MergePolicy(max_hamming=mh))
        counts.append(labels.max() + 1)
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[-1] == 1  # max_hamming = b on a connected image


def test_codes_count_checked():
    sp = grid_superpixels(2, 2)
    with pytest.raises(errors.LengthMismatch):
        merge.merge_superpixels(sp, np.zeros((3, 2), bool))


def test_policy_validation():
    sp = grid_superpixels(2, 2)
    with pytest.raises(ValueError):
        merge.merge_superpixels(sp, np.zeros((4, 2), bool), merge.MergePolicy(max_hamming=3))
    with pytest.raises(ValueError):
        merge.merge_superpixels(sp, np.zeros((4, 2), bool), merge.MergePolicy(scope="nearby"))
