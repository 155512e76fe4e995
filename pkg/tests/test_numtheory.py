import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from errors import InvalidInputError
from numtheory import (
    ExponentVector,
    FactorBase,
    exponent_vector_to_int,
    first_primes,
    gcd,
    is_smooth,
    smooth_factorize,
    split_exponents,
)

SMALL_BASE = FactorBase((2, 3, 5))

# === Primes and factor bases ===


def test_first_primes_small():
    """The first five primes are returned in order."""
    assert first_primes(1) == [2]
    assert first_primes(5) == [2, 3, 5, 7, 11]


def test_first_primes_fourteenth_is_43():
    """p_14 = 43."""
    assert first_primes(14)[-1] == 43
    assert len(first_primes(14)) == 14


def test_first_primes_match_an_eratosthenes_sieve():
    """The first 2000 primes agree with a plain sieve up to 20000."""
    limit = 20_000
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, int(limit**0.5) + 1):
        if flags[p]:
            flags[p * p::p] = False
    sieved = np.nonzero(flags)[0].tolist()

    assert len(sieved) > 2000
    assert first_primes(2000) == sieved[:2000]


def test_first_primes_rejects_zero():
    with pytest.raises(InvalidInputError):
        first_primes(0)


def test_factor_base_of_size():
    """of_size(M) holds the first M primes and its bound is p_M."""
    base = FactorBase.of_size(5)
    assert base.primes == (2, 3, 5, 7, 11)
    assert base.size == 5
    assert base.bound == 11
    assert base.with_sign() == (-1, 2, 3, 5, 7, 11)


@pytest.mark.parametrize("primes", [(3, 5), (2, 4), (2, 2, 3), ()])
def test_factor_base_validation(primes):
    """Bases must start at 2 and be strictly increasing primes."""
    with pytest.raises(InvalidInputError):
        FactorBase(primes)


# === Smoothness ===


def test_smooth_factorize_positive():
    """12 = 2^2 * 3 over {2, 3, 5}."""
    assert smooth_factorize(12, SMALL_BASE) == ExponentVector(0, (2, 1, 0))


def test_smooth_factorize_negative():
    """-45 = -1 * 3^2 * 5."""
    assert smooth_factorize(-45, SMALL_BASE) == ExponentVector(1, (0, 2, 1))


def test_smooth_factorize_not_smooth():
    """77 = 7 * 11 is not 5-smooth."""
    assert smooth_factorize(77, SMALL_BASE) is None
    assert not is_smooth(77, SMALL_BASE)


def test_smooth_factorize_one():
    assert smooth_factorize(1, SMALL_BASE) == ExponentVector(0, (0, 0, 0))


def test_smooth_factorize_zero_is_rejected():
    with pytest.raises(InvalidInputError):
        smooth_factorize(0, SMALL_BASE)


@given(
    exps=st.lists(st.integers(min_value=0, max_value=6), min_size=3, max_size=3),
    negative=st.booleans(),
)
def test_smooth_factorize_recovers_exponents(exps, negative):
    """Factoring a product of base primes gives back its exponents."""
    vector = ExponentVector(int(negative), tuple(exps))
    value = exponent_vector_to_int(vector, SMALL_BASE)
    assert smooth_factorize(value, SMALL_BASE) == vector


def test_exponent_vector_to_int_rejects_negative_exponents():
    with pytest.raises(InvalidInputError):
        exponent_vector_to_int(ExponentVector(0, (-1, 0, 0)), SMALL_BASE)


def test_exponent_vector_padding():
    vector = ExponentVector(1, (1, 2))
    assert vector.padded(4) == ExponentVector(1, (1, 2, 0, 0))
    assert vector.as_row() == (1, 1, 2)
    with pytest.raises(InvalidInputError):
        vector.padded(1)


# === gcd and coefficient splitting ===


@pytest.mark.parametrize(
    "a, b, expected",
    [(12, 8, 4), (77, 7, 7), (1, 77, 1), (0, 9, 9), (-12, 18, 6)],
)
def test_gcd(a, b, expected):
    assert gcd(a, b) == expected


def test_gcd_of_two_zeros_is_undefined():
    with pytest.raises(InvalidInputError):
        gcd(0, 0)


def test_split_exponents_all_positive():
    """e = (1, 0, 2) over (2, 3, 5) gives u = 2 * 25 = 50 and v = 1."""
    assert split_exponents((1, 0, 2), (2, 3, 5)) == (50, 1)


def test_split_exponents_mixed_signs():
    """e = (-1, 1, 0) gives u = 3 and v = 2."""
    assert split_exponents((-1, 1, 0), (2, 3, 5)) == (3, 2)


def test_split_exponents_zero_vector():
    assert split_exponents((0, 0, 0), (2, 3, 5)) == (1, 1)
