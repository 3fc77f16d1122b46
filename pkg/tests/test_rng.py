import numpy as np

from corrspec.rng import derive_key, stream


def test_same_inputs_give_identical_streams():
    a = stream(12345, "edge", 7).standard_normal(100)
    b = stream(12345, "edge", 7).standard_normal(100)
    assert np.array_equal(a, b)


def test_distinct_tags_and_replicates_differ():
    base = stream(1, "alpha", 0).standard_normal(4)
    assert not np.array_equal(base, stream(1, "beta", 0).standard_normal(4))
    assert not np.array_equal(base, stream(1, "alpha", 1).standard_normal(4))
    assert not np.array_equal(base, stream(2, "alpha", 0).standard_normal(4))


def test_key_derivation_is_two_uint64_words():
    key = derive_key(0, "t", 0)
    assert key.dtype == np.uint64 and key.shape == (2,)
    assert not np.array_equal(key, derive_key(0, "t", 1))


def test_serial_correlation_smoke():
    # lag-1 autocorrelation of one stream, and cross-correlation of two
    # sibling streams, both small over 10^4 draws
    x = stream(99, "smoke", 1).standard_normal(10_000)
    y = stream(99, "smoke", 2).standard_normal(10_000)
    lag1 = np.corrcoef(x[:-1], x[1:])[0, 1]
    cross = np.corrcoef(x, y)[0, 1]
    assert abs(lag1) < 0.05
    assert abs(cross) < 0.05
