"""
Integer services for the factoring pipeline: factor bases, smoothness
testing by trial division, exponent vectors and gcd.

All functions are pure and work on Python's arbitrary-precision ``int``.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import sympy

from errors import InvalidInputError


@lru_cache(maxsize=64)
def _first_primes_cached(m: int) -> Tuple[int, ...]:
    return tuple(int(p) for p in sympy.primerange(2, sympy.prime(m) + 1))


def first_primes(m: int) -> list:
    """Return the first ``m`` primes p_1..p_m in increasing order."""
    if m < 1:
        raise InvalidInputError(f"need at least one prime, got m={m}")
    return list(_first_primes_cached(m))


def is_prime(n: int) -> bool:
    # sympy.isprime is deterministic Miller-Rabin below 2**64 and BPSW above.
    return bool(sympy.isprime(n))


@dataclass(frozen=True)
class FactorBase:
    """Ordered primes p_1..p_M plus the implicit sign element p_0 = -1."""

    primes: Tuple[int, ...]

    def __post_init__(self):
        if not self.primes or self.primes[0] != 2:
            raise InvalidInputError("factor base must start at 2")
        for a, b in zip(self.primes, self.primes[1:]):
            if not a < b:
                raise InvalidInputError("factor base primes must be strictly increasing")
        composite = next((p for p in self.primes if not is_prime(p)), None)
        if composite is not None:
            raise InvalidInputError(f"factor base entry {composite} is not prime")

    @classmethod
    def of_size(cls, size: int) -> "FactorBase":
        return _factor_base_of_size(size)

    @property
    def size(self) -> int:
        return len(self.primes)

    @property
    def bound(self) -> int:
        return self.primes[-1]

    def with_sign(self) -> Tuple[int, ...]:
        """The base as indexed by the GF(2) system: (-1, p_1, ..., p_M)."""
        return (-1,) + self.primes


@dataclass(frozen=True)
class ExponentVector:
    """Exponents over a factor base; ``sign_bit`` is the exponent of -1."""

    sign_bit: int
    exps: Tuple[int, ...]

    def as_row(self) -> Tuple[int, ...]:
        """Sign element first, matching ``FactorBase.with_sign``."""
        return (self.sign_bit,) + self.exps

    def padded(self, size: int) -> "ExponentVector":
        if size < len(self.exps):
            raise InvalidInputError("cannot shrink an exponent vector")
        return ExponentVector(self.sign_bit, self.exps + (0,) * (size - len(self.exps)))

    def is_integral(self) -> bool:
        return all(e >= 0 for e in self.exps)

    def to_dict(self) -> dict:
        return {"sign": self.sign_bit, "exps": list(self.exps)}


def smooth_factorize(x: int, base: FactorBase) -> Optional[ExponentVector]:
    """Exponent vector of ``x`` over ``base``, or ``None`` if |x| is not p_M-smooth."""
    if x == 0:
        raise InvalidInputError("cannot factor zero")
    sign_bit = 1 if x < 0 else 0
    rest = abs(x)
    exps = [0] * base.size
    for i, p in enumerate(base.primes):
        if rest == 1:
            break
        while rest % p == 0:
            rest //= p
            exps[i] += 1
    if rest != 1:
        return None
    return ExponentVector(sign_bit, tuple(exps))


def is_smooth(x: int, base: FactorBase) -> bool:
    return smooth_factorize(x, base) is not None


def exponent_vector_to_int(e: ExponentVector, base: FactorBase) -> int:
    """Inverse of ``smooth_factorize`` for non-negative exponents."""
    if not e.is_integral():
        raise InvalidInputError("signed exponents describe a ratio, not an integer")
    if len(e.exps) > base.size:
        raise InvalidInputError("exponent vector is longer than the factor base")
    value = 1
    for p, k in zip(base.primes, e.exps):
        if k:
            value *= p**k
    return -value if e.sign_bit else value


def gcd(a: int, b: int) -> int:
    if a == 0 and b == 0:
        raise InvalidInputError("gcd(0, 0) is undefined")
    return math.gcd(a, b)


def split_exponents(e: Sequence[int], primes: Sequence[int]) -> Tuple[int, int]:
    """Map a signed coefficient vector to (u, v): positive exponents build u, negative build v."""
    u, v = 1, 1
    for p, k in zip(primes, e):
        if k > 0:
            u *= p**k
        elif k < 0:
            v *= p ** (-k)
    return u, v


@lru_cache(maxsize=64)
def _factor_base_of_size(size: int) -> FactorBase:
    return FactorBase(tuple(first_primes(size)))
