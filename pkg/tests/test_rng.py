"""Deterministic RNG: reference vectors, stream splitting, state round-trip."""

import pytest

from stigmergraph.rng import DetRng, derive_seed, mix64


def test_known_output_vector_seed_zero():
    # reference splitmix64 sequence for state 0
    r = DetRng(0)
    assert r.next_u64() == 0xE220A8397B1DCDAF
    assert r.next_u64() == 0x6E789E6AA1B965F4
    assert r.next_u64() == 0x06C45D188009454F


def test_seed_is_masked_to_64_bits():
    assert DetRng(2**64).next_u64() == DetRng(0).next_u64()
    assert DetRng(-1).next_u64() == DetRng(2**64 - 1).next_u64()


def test_streams_reproducible_and_distinct():
    a = [DetRng(7).next_u64() for _ in range(20)]
    b = [DetRng(7).next_u64() for _ in range(20)]
    c = [DetRng(8).next_u64() for _ in range(20)]
    assert a == b
    assert a != c


def test_next_float_range_and_resolution():
    r = DetRng(1234567)
    xs = [r.next_float() for _ in range(10000)]
    assert all(0.0 <= x < 1.0 for x in xs)
    # 53-bit mantissa: values are multiples of 2^-53
    assert all(x == (int(x * 2**53)) / 2**53 for x in xs[:100])


def test_next_float_matches_u64_stream():
    a, b = DetRng(99), DetRng(99)
    for _ in range(100):
        assert a.next_float() == (b.next_u64() >> 11) / 2**53


def test_next_below_bounds_and_determinism():
    r = DetRng(5)
    xs = [r.next_below(10) for _ in range(1000)]
    assert all(0 <= x < 10 for x in xs)
    assert set(xs) == set(range(10))
    r2 = DetRng(5)
    assert [r2.next_below(10) for _ in range(3)] == xs[:3]


def test_next_below_rejects_nonpositive():
    with pytest.raises(Exception):
        DetRng(0).next_below(0)


def test_state_roundtrip():
    r = DetRng(9)
    for _ in range(4):
        r.next_u64()
    saved = r.getstate()
    ahead = [r.next_u64() for _ in range(5)]
    r.setstate(saved)
    assert [r.next_u64() for _ in range(5)] == ahead


def test_mix64_reference_points():
    assert mix64(0) == 0
    assert 0 <= mix64(123456789) < 2**64
    assert mix64(1) != mix64(2)


def test_derive_seed_depends_on_every_index():
    base = 42
    assert derive_seed(base) == derive_seed(base)
    assert derive_seed(base, 0) != derive_seed(base, 1)
    assert derive_seed(base, 0, 1) != derive_seed(base, 1, 0)
    assert derive_seed(base, 0, 1) != derive_seed(base, 0, 2)
    assert derive_seed(base, 3) != derive_seed(base + 1, 3)
    # appending an index always changes the seed
    assert derive_seed(base, 5) != derive_seed(base, 5, 0)


def test_derive_seed_range():
    for i in range(50):
        s = derive_seed(1, i)
        assert 0 <= s < 2**64
