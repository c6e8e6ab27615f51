"""Tests for the splitmix64/v1 stream: determinism, vectorization, shuffles."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stocast.rng import SplitMix64, derive_seed


def test_known_stream_is_stable():
    # Frozen first outputs of splitmix64 seeded with 0; guards against
    # accidental constant or mixing changes.
    rng = SplitMix64(0)
    first = [rng.next_u64() for _ in range(3)]
    assert first == [
        16294208416658607535,
        7960286522194355700,
        487617019471545679,
    ]


def test_same_seed_same_stream():
    a = SplitMix64(12345)
    b = SplitMix64(12345)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


def test_different_seeds_diverge():
    a = SplitMix64(1)
    b = SplitMix64(2)
    assert [a.next_u64() for _ in range(10)] != [b.next_u64() for _ in range(10)]


def test_uniform_in_unit_interval():
    rng = SplitMix64(7)
    us = [rng.uniform() for _ in range(10000)]
    assert all(0.0 <= u < 1.0 for u in us)
    assert abs(np.mean(us) - 0.5) < 0.02


@given(st.integers(min_value=0, max_value=2**64 - 1), st.integers(min_value=0, max_value=500))
def test_vectorized_uniforms_match_scalar(seed, n):
    a = SplitMix64(seed)
    b = SplitMix64(seed)
    vec = a.uniforms(n)
    sca = np.array([b.uniform() for _ in range(n)])
    assert vec.shape == (n,)
    assert np.array_equal(vec, sca)
    # Both generators must land in the same state afterwards.
    assert a.next_u64() == b.next_u64()


def test_derive_seed_is_order_sensitive():
    s1 = derive_seed(42, "event", 3)
    s2 = derive_seed(42, 3, "event")
    assert s1 != s2
    assert derive_seed(42, "event", 3) == s1


def test_spawn_streams_are_decoupled():
    root = SplitMix64(99)
    a = root.spawn("shuffle", 0)
    b = root.spawn("shuffle", 1)
    assert a.next_u64() != b.next_u64()
    # Spawning again gives the same child stream.
    assert root.spawn("shuffle", 0).next_u64() == SplitMix64(derive_seed(99, "shuffle", 0)).next_u64()


def test_shuffle_is_a_permutation_and_deterministic():
    items = list(range(50))
    a = SplitMix64(5)
    out1 = list(items)
    a.shuffle(out1)
    out2 = list(items)
    SplitMix64(5).shuffle(out2)
    assert out1 == out2
    assert sorted(out1) == items
    assert out1 != items  # astronomically unlikely to be identity


def test_permutation_matches_shuffle_of_range():
    expect = list(range(17))
    SplitMix64(11).shuffle(expect)
    got = SplitMix64(11).permutation(17)
    assert list(got) == expect


@given(st.integers(min_value=0, max_value=2**64 - 1), st.integers(min_value=1, max_value=1000))
def test_randbelow_in_range(seed, n):
    rng = SplitMix64(seed)
    for _ in range(5):
        v = rng.randbelow(n)
        assert 0 <= v < n


def test_uniform_range():
    rng = SplitMix64(3)
    vs = [rng.uniform_range(-2.0, 5.0) for _ in range(1000)]
    assert all(-2.0 <= v < 5.0 for v in vs)


def test_python_only_reference_implementation():
    # Cross-implementation check: a straight-line pure-Python transcription
    # of the published algorithm, independent of the class.
    mask = (1 << 64) - 1

    def ref_next(state):
        state = (state + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        z = z ^ (z >> 31)
        return state, z

    state = 2026
    rng = SplitMix64(2026)
    for _ in range(64):
        state, z = ref_next(state)
        assert rng.next_u64() == z
