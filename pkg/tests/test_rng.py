import numpy as np

from ldgan.rng import STREAM_NAMES, make_rng, split_streams


def test_stream_names_fixed_order():
    assert STREAM_NAMES == ("data", "generator", "extractor", "training")


def test_split_streams_deterministic():
    a = split_streams(123)
    b = split_streams(123)
    for name in STREAM_NAMES:
        assert np.array_equal(a[name].uniform(size=16), b[name].uniform(size=16))


def test_streams_distinct():
    streams = split_streams(7)
    draws = {name: streams[name].uniform(size=8) for name in STREAM_NAMES}
    names = list(STREAM_NAMES)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            assert not np.allclose(draws[names[i]], draws[names[j]])


def test_seed_changes_draws():
    a = split_streams(1)["data"].uniform(size=8)
    b = split_streams(2)["data"].uniform(size=8)
    assert not np.allclose(a, b)


def test_uniform_range():
    rng = make_rng(99)
    u = rng.uniform(size=10_000)
    assert u.shape == (10_000,)
    assert np.all(u >= 0.0) and np.all(u < 1.0)


def test_normal_moments():
    rng = make_rng(5)
    x = rng.normal(size=200_000)
    assert abs(float(x.mean())) < 0.02
    assert abs(float(x.std()) - 1.0) < 0.02


def test_normal_scale_and_shape():
    rng = make_rng(6)
    x = rng.normal(size=(50_000,), scale=0.02)
    assert x.shape == (50_000,)
    assert abs(float(x.std()) - 0.02) < 0.002
    y = make_rng(6).normal(size=(4, 3))
    assert y.shape == (4, 3)


def test_normal_scalar():
    x = make_rng(11).normal()
    assert isinstance(x, float)
    assert x == make_rng(11).normal()


def test_normal_odd_count_matches_even_prefix():
    # Pairs are generated two at a time; an odd request drops the last.
    a = make_rng(3).normal(size=5)
    b = make_rng(3).normal(size=6)
    assert np.array_equal(a, b[:5])


def test_integers_and_permutation():
    rng = make_rng(21)
    draws = rng.integers(0, 10, size=1000)
    assert draws.min() >= 0 and draws.max() <= 9
    perm = make_rng(22).permutation(8)
    assert sorted(perm.tolist()) == list(range(8))
    assert np.array_equal(make_rng(22).permutation(8), perm)
