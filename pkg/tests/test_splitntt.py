from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import isprime

from modcdpr.cyclotomic import RingElement, embed_coeffs, ring_mul
from modcdpr.splitntt import (
    PAPER_COMPAT_MIN_PRIME,
    CrtBasis,
    RangeOverflowError,
    SplitPrimeContext,
    coordinate_round,
    crt_scaled_round,
    find_split_primes,
    round_half_away,
    symmetric_mod,
)


def sup_err(t: RingElement, c: RingElement) -> float:
    return float(np.abs(embed_coeffs((t - c).float_coeffs())).max())


def test_smallest_split_prime_n256():
    assert find_split_primes(256, 128).primes == [7681]
    assert find_split_primes(256, 128, PAPER_COMPAT_MIN_PRIME).primes == [12289]
    assert 12289 % 512 == 1


def test_smallest_split_prime_n4():
    assert find_split_primes(4).primes == [17]


def test_split_primes_are_split():
    basis = find_split_primes(256, 10**20)
    assert basis.P >= 10**20
    for p in basis.primes:
        assert p % 512 == 1 and isprime(p)
    assert basis.primes == sorted(basis.primes)


def test_context_validation():
    with pytest.raises(ValueError):
        SplitPrimeContext(13, 4)
    with pytest.raises(ValueError):
        SplitPrimeContext(17, 4, zeta_p=1)


def test_ntt_of_one_is_all_ones():
    ctx = SplitPrimeContext(17, 8)
    a = np.zeros(8, dtype=np.int64)
    a[0] = 1
    assert list(ctx.ntt(a)) == [1] * 8


def test_ntt_evaluates_at_odd_powers():
    ctx = SplitPrimeContext(97, 8)
    a = np.array([3, 1, 4, 1, 5, 9, 2, 6])
    z = ctx.zeta_p
    expect = [sum(int(c) * pow(z, (2 * f + 1) * m, 97) for m, c in enumerate(a)) % 97 for f in range(8)]
    assert list(ctx.ntt(a)) == expect


def test_round_trip_many():
    ctx = SplitPrimeContext(12289, 256)
    a = np.random.default_rng(1).integers(0, 12289, (1000, 256))
    assert np.array_equal(ctx.intt(ctx.ntt(a)), a)


def test_large_prime_object_path():
    p = find_split_primes(8, 2**40, 2**35).primes[0]
    ctx = SplitPrimeContext(p, 8)
    a = [p - 1, 2, 3, 0, 5, 7, 11, 13]
    assert [int(x) for x in ctx.intt(ctx.ntt(a))] == a


@given(st.lists(st.integers(-50, 50), min_size=16, max_size=16), st.lists(st.integers(-50, 50), min_size=16, max_size=16))
@settings(max_examples=40)
def test_multiplication_homomorphism(a, b):
    ctx = SplitPrimeContext(97, 16)
    prod = ring_mul(RingElement.from_int_array(a, 5), RingElement.from_int_array(b, 5))
    expect = [c % 97 for c in prod.num]
    assert [int(x) for x in ctx.negacyclic_mul(np.array(a) % 97, np.array(b) % 97)] == expect


def test_round_half_away_and_symmetric_mod():
    assert round_half_away(Fraction(1, 2)) == 1
    assert round_half_away(Fraction(-1, 2)) == -1
    assert round_half_away(Fraction(5, 3)) == 2
    assert symmetric_mod(16, 17) == -1
    assert symmetric_mod(8, 17) == 8


def test_coordinate_round_is_exact_on_R():
    t = RingElement.from_int_array([1, -2, 3, 0], 3)
    assert coordinate_round(t) == t


def test_coordinate_round_bound_random():
    rng = np.random.default_rng(2)
    n = 64
    for _ in range(200):
        num = rng.integers(-10_000, 10_001, n)
        t = RingElement.from_int_array(num, 7, den=1000)
        c = coordinate_round(t)
        assert c.is_integral()
        assert sup_err(t, c) <= n / 2


def test_worst_target_coordinate_error():
    n = 16
    t = RingElement.from_int_array([1] * n, 5, den=2)
    assert sup_err(t, coordinate_round(t)) >= np.sqrt(n) / 2


def test_crt_round_two_primes():
    basis = CrtBasis.from_primes([17, 97], 8)
    assert basis.P == 1649
    rng = np.random.default_rng(3)
    for _ in range(200):
        t = RingElement.from_int_array(rng.integers(-10**6, 10**6, 8), 4, den=int(rng.integers(1, 10**5)))
        c = crt_scaled_round(t, basis)
        assert 1649 % c.den == 0
        assert all(abs(x) <= Fraction(1, 2 * 1649) for x in (t - c).coeffs)
        assert sup_err(t, c) <= 8 / (2 * 1649) + 1e-12


def test_crt_round_n256_p12289():
    basis = CrtBasis.from_primes([12289], 256)
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(50):
        t = RingElement.from_int_array(rng.integers(-10**7, 10**7, 256), 9, den=99991)
        worst = max(worst, sup_err(t, crt_scaled_round(t, basis)))
    assert worst <= 256 / (2 * 12289)


def test_crt_round_exact_on_fine_lattice():
    basis = CrtBasis.from_primes([17], 8)
    t = RingElement.from_int_array([1, 5, -3, 0, 2, 16, -16, 7], 4, den=17)
    assert crt_scaled_round(t, basis) == t


def test_crt_round_overflow():
    basis = CrtBasis.from_primes([17], 4)
    t = RingElement.from_int_array([10**6, 0, 0, 0], 3)
    with pytest.raises(RangeOverflowError):
        crt_scaled_round(t, basis, coeff_bound=10**6)


@given(st.lists(st.integers(-10**6, 10**6), min_size=8, max_size=8), st.lists(st.integers(-30, 30), min_size=8, max_size=8))
@settings(max_examples=50)
def test_translation_equivariance_off_ties(num, g):
    # an odd denominator never produces an exact half, so no tie rule is involved
    t = RingElement.from_int_array(num, 4, den=999)
    shift = RingElement.from_int_array(g, 4)
    assert coordinate_round(t + shift) == coordinate_round(t) + shift
    basis = CrtBasis.from_primes([17], 8)
    fine = RingElement.from_int_array(g, 4, den=17)
    assert crt_scaled_round(t + fine, basis) == crt_scaled_round(t, basis) + fine
