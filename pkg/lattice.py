"""
Prime lattices, Gram-Schmidt orthogonalization, LLL reduction and Babai's
nearest-plane algorithm.

Basis vectors are the *columns* of the (m+1) x m basis matrix; throughout this
module a basis is handled as a list of m integer vectors of length m+1.

Arithmetic is exact (``fractions.Fraction``) up to ``EXACT_DIMENSION_LIMIT``
and uses mpmath floats with a ``HIGH_PRECISION_BITS`` significand above it.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from errors import DegenerateBasisError, InvalidInputError, NotInLatticeError
from numtheory import first_primes

logger = logging.getLogger(__name__)

EXACT_DIMENSION_LIMIT = 20
HIGH_PRECISION_BITS = 256
DEFAULT_DELTA = Fraction(99, 100)
DEFAULT_PRECISION = 4

Vector = Tuple[int, ...]


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def distance_sq(a: Sequence[int], b: Sequence[int]) -> int:
    return sum((x - y) * (x - y) for x, y in zip(a, b))


def _nearest(x) -> int:
    """Round half up; ``|x - nearest(x)| <= 1/2`` for Fraction and mpf alike."""
    if isinstance(x, (int, Fraction)):
        return math.floor(x + Fraction(1, 2))
    return int(mpmath.floor(x + mpmath.mpf(1) / 2))


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _to_num(num, x):
    """Convert an int or Fraction into the active number type."""
    if num is Fraction:
        return Fraction(x)
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def _use_exact(dimension: int) -> bool:
    return dimension <= EXACT_DIMENSION_LIMIT


class _precision:
    """Context that raises mpmath precision only when exact arithmetic is off."""

    def __init__(self, exact: bool):
        self.exact = exact
        self._ctx = None

    def __enter__(self):
        if not self.exact:
            self._ctx = mpmath.workprec(HIGH_PRECISION_BITS)
            self._ctx.__enter__()
        return Fraction if self.exact else mpmath.mpf

    def __exit__(self, *exc):
        if self._ctx is not None:
            return self._ctx.__exit__(*exc)
        return False


# --- prime lattice ---


def scaled_log_round(x: int, c: int) -> int:
    """round(10^c * ln x), with guard digits added until the rounding is certain."""
    if x < 1:
        raise InvalidInputError(f"logarithm of {x} is undefined")
    digits = len(str(x)) + c + 20
    while True:
        with mpmath.workdps(digits):
            y = mpmath.mpf(10) ** c * mpmath.log(x)
            k = int(mpmath.floor(y + mpmath.mpf(1) / 2))
            margin = abs(y - (k - mpmath.mpf(1) / 2)), abs(y - (k + mpmath.mpf(1) / 2))
            if min(margin) > mpmath.mpf(10) ** (-(digits - 10)):
                return k
        digits *= 2


@dataclass(frozen=True)
class PrimeLattice:
    """Basis B_{m,c} for N: diagonal f(1..m) above a row of scaled prime logs."""

    n: int
    m: int
    c: int
    f: Tuple[int, ...]
    basis: Tuple[Vector, ...]  # m+1 rows of length m
    target: Vector

    @property
    def primes(self) -> List[int]:
        return first_primes(self.m)

    def columns(self) -> List[Vector]:
        return [tuple(row[j] for row in self.basis) for j in range(self.m)]

    def multiply(self, e: Sequence[int]) -> Vector:
        return tuple(dot(row, e) for row in self.basis)

    def to_dict(self) -> dict:
        return {
            "N": str(self.n),
            "m": self.m,
            "c": self.c,
            "f": list(self.f),
            "basis": [list(row) for row in self.basis],
            "target": list(self.target),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PrimeLattice":
        lattice = cls(
            n=int(doc["N"]),
            m=int(doc["m"]),
            c=int(doc["c"]),
            f=tuple(int(x) for x in doc["f"]),
            basis=tuple(tuple(int(x) for x in row) for row in doc["basis"]),
            target=tuple(int(x) for x in doc["target"]),
        )
        if lattice != _assemble(lattice.n, lattice.m, lattice.c, lattice.f):
            raise InvalidInputError("serialized lattice does not match its parameters")
        return lattice


def diagonal_multiset(m: int) -> List[int]:
    """{ceil(1/2), ceil(2/2), ..., ceil(m/2)}"""
    return [(i + 1) // 2 for i in range(1, m + 1)]


def _assemble(n: int, m: int, c: int, f: Sequence[int]) -> PrimeLattice:
    rows = []
    for i in range(m):
        row = [0] * m
        row[i] = int(f[i])
        rows.append(tuple(row))
    rows.append(tuple(scaled_log_round(p, c) for p in first_primes(m)))
    target = (0,) * m + (scaled_log_round(n, c),)
    return PrimeLattice(n=n, m=m, c=c, f=tuple(int(x) for x in f), basis=tuple(rows), target=target)


def build_prime_lattice(
    n: int,
    m: int,
    c: int = DEFAULT_PRECISION,
    rng: Optional[np.random.Generator] = None,
    f: Optional[Sequence[int]] = None,
) -> PrimeLattice:
    """Build the prime lattice for ``n``.

    The diagonal is ``f`` when given (it must rearrange the diagonal
    multiset), otherwise a permutation drawn from ``rng``.
    """
    if n < 15 or n % 2 == 0:
        raise InvalidInputError(f"N must be odd and at least 15, got {n}")
    if m < 2:
        raise InvalidInputError(f"lattice dimension must be at least 2, got {m}")
    if c < 1:
        raise InvalidInputError(f"precision c must be positive, got {c}")
    if f is not None:
        f = [int(x) for x in f]
        if sorted(f) != diagonal_multiset(m):
            raise InvalidInputError(f"diagonal {f} is not a rearrangement of {diagonal_multiset(m)}")
        return _assemble(n, m, c, f)
    rng = rng if rng is not None else np.random.default_rng()
    f = [int(x) for x in rng.permutation(diagonal_multiset(m))]
    return _assemble(n, m, c, f)


# --- Gram-Schmidt ---


@dataclass(frozen=True)
class GramSchmidt:
    """Orthogonalized vectors b~_i, coefficients mu[i][j] (j < i) and |b~_i|^2."""

    vectors: Tuple[tuple, ...]
    mu: Tuple[tuple, ...]
    norms_sq: tuple
    exact: bool = True


def gram_schmidt(vectors: Sequence[Sequence[int]], exact: Optional[bool] = None) -> GramSchmidt:
    if exact is None:
        exact = _use_exact(len(vectors))
    with _precision(exact) as num:
        ortho, norms, mu = [], [], []
        for i, v in enumerate(vectors):
            w = [_to_num(num, x) for x in v]
            row = []
            for j in range(i):
                coeff = dot(v, ortho[j]) / norms[j]
                row.append(coeff)
                w = [a - coeff * b for a, b in zip(w, ortho[j])]
            norm = dot(w, w)
            if norm == 0:
                raise DegenerateBasisError(f"vector {i} is linearly dependent on its predecessors")
            ortho.append(tuple(w))
            norms.append(norm)
            mu.append(tuple(row))
    return GramSchmidt(tuple(ortho), tuple(mu), tuple(norms), exact)


# --- LLL ---


@dataclass(frozen=True)
class ReducedBasis:
    """LLL-reduced vectors d_i = sum_j transform[i][j] * b_j."""

    vectors: Tuple[Vector, ...]
    gso: GramSchmidt
    transform: Tuple[Vector, ...]
    delta: Fraction = DEFAULT_DELTA

    @property
    def dimension(self) -> int:
        return len(self.vectors)


def is_size_reduced(gso: GramSchmidt) -> bool:
    num = Fraction if gso.exact else mpmath.mpf
    half = _to_num(num, Fraction(1, 2))
    return all(abs(c) <= half for row in gso.mu for c in row)


def satisfies_lovasz(gso: GramSchmidt, delta=DEFAULT_DELTA) -> bool:
    num = Fraction if gso.exact else mpmath.mpf
    d = _to_num(num, Fraction(str(delta)))
    for k in range(1, len(gso.norms_sq)):
        mu = gso.mu[k][k - 1]
        if gso.norms_sq[k] < (d - mu * mu) * gso.norms_sq[k - 1]:
            return False
    return True


def lll_reduce(basis: Union[PrimeLattice, Sequence[Sequence[int]]], delta=DEFAULT_DELTA) -> ReducedBasis:
    """LLL reduction with incremental Gram-Schmidt updates and a tracked transform."""
    delta = Fraction(str(delta)) if not isinstance(delta, Fraction) else delta
    if not Fraction(1, 4) < delta < 1:
        raise InvalidInputError(f"LLL delta must lie in (1/4, 1), got {delta}")
    vectors = basis.columns() if isinstance(basis, PrimeLattice) else [tuple(v) for v in basis]
    n = len(vectors)
    exact = _use_exact(n)
    b = [list(v) for v in vectors]
    h = [[int(i == j) for j in range(n)] for i in range(n)]

    with _precision(exact) as num:
        d = num(delta.numerator) / num(delta.denominator)
        half = num(1) / 2
        mu = [[num(0)] * n for _ in range(n)]
        norms = [num(0)] * n

        def reduce_pair(k, l):
            if abs(mu[k][l]) > half:
                q = _nearest(mu[k][l])
                b[k] = [x - q * y for x, y in zip(b[k], b[l])]
                h[k] = [x - q * y for x, y in zip(h[k], h[l])]
                mu[k][l] -= q
                for i in range(l):
                    mu[k][i] -= q * mu[l][i]

        def swap(k, kmax):
            b[k], b[k - 1] = b[k - 1], b[k]
            h[k], h[k - 1] = h[k - 1], h[k]
            for j in range(k - 1):
                mu[k][j], mu[k - 1][j] = mu[k - 1][j], mu[k][j]
            m_ = mu[k][k - 1]
            total = norms[k] + m_ * m_ * norms[k - 1]
            mu[k][k - 1] = m_ * norms[k - 1] / total
            norms[k] = norms[k - 1] * norms[k] / total
            norms[k - 1] = total
            for i in range(k + 1, kmax + 1):
                t = mu[i][k]
                mu[i][k] = mu[i][k - 1] - m_ * t
                mu[i][k - 1] = t + mu[k][k - 1] * mu[i][k]

        norms[0] = num(dot(b[0], b[0]))
        if norms[0] == 0:
            raise DegenerateBasisError("first basis vector is zero")
        k, kmax, swaps = 1, 0, 0
        while k < n:
            if k > kmax:
                kmax = k
                for j in range(k):
                    acc = num(dot(b[k], b[j]))
                    for i in range(j):
                        acc -= mu[j][i] * mu[k][i] * norms[i]
                    mu[k][j] = acc / norms[j]
                norms[k] = num(dot(b[k], b[k])) - sum(
                    (mu[k][j] * mu[k][j] * norms[j] for j in range(k)), num(0)
                )
                if norms[k] == 0:
                    raise DegenerateBasisError(f"vector {k} is linearly dependent")
            reduce_pair(k, k - 1)
            if norms[k] < (d - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1]:
                swap(k, kmax)
                swaps += 1
                k = max(1, k - 1)
            else:
                for l in range(k - 2, -1, -1):
                    reduce_pair(k, l)
                k += 1

    logger.debug("LLL finished: dimension=%d swaps=%d exact=%s", n, swaps, exact)
    reduced = tuple(tuple(v) for v in b)
    return ReducedBasis(
        vectors=reduced,
        gso=gram_schmidt(reduced, exact=exact),
        transform=tuple(tuple(row) for row in h),
        delta=delta,
    )


# --- Babai ---


@dataclass(frozen=True)
class BabaiResult:
    """Nearest-plane output with the per-vector data the refinement needs.

    ``mu``, ``roundings`` and ``directions`` are indexed in basis order even
    though the algorithm visits the basis from last to first.
    """

    b_op: Vector
    mu: tuple
    roundings: Vector
    directions: Vector
    target: tuple = field(default=())

    @property
    def coefficients(self) -> Vector:
        """Coefficients of b_op under the reduced basis (the roundings)."""
        return self.roundings


def babai_nearest_plane(reduced: ReducedBasis, target: Sequence) -> BabaiResult:
    """Find a lattice point near ``target`` and record mu_i, c_i and k_i = sign(mu_i - c_i).

    The residual starts at t and loses c_i * d_i per step, so the accumulated
    sum of c_i * d_i is the lattice point and ``t - b_op`` is the residual.
    """
    gso = reduced.gso
    if len(target) != len(reduced.vectors[0]):
        raise InvalidInputError("target and basis have different ambient dimensions")
    n = reduced.dimension
    with _precision(gso.exact) as num:
        residual = [_to_num(num, x) for x in target]
        mus = [None] * n
        cs = [0] * n
        for i in reversed(range(n)):
            mu_i = dot(residual, gso.vectors[i]) / gso.norms_sq[i]
            c_i = _nearest(mu_i)
            mus[i], cs[i] = mu_i, c_i
            if c_i:
                residual = [r - c_i * x for r, x in zip(residual, reduced.vectors[i])]
        directions = tuple(_sign(mus[i] - cs[i]) for i in range(n))
    b_op = [0] * len(target)
    for c_i, vec in zip(cs, reduced.vectors):
        if c_i:
            b_op = [a + c_i * x for a, x in zip(b_op, vec)]
    return BabaiResult(
        b_op=tuple(b_op),
        mu=tuple(mus),
        roundings=tuple(cs),
        directions=directions,
        target=tuple(target),
    )


def babai_gamma(m: int) -> float:
    """Approximation factor 2 * (2 / sqrt 3)^m of nearest-plane on an LLL basis."""
    return 2.0 * (2.0 / math.sqrt(3.0)) ** m


# --- lattice points ---


@lru_cache(maxsize=64)
def _pseudoinverse(lattice: PrimeLattice) -> np.ndarray:
    return np.linalg.pinv(np.array(lattice.basis, dtype=float))


def coefficients_of(point: Sequence[int], lattice: PrimeLattice) -> Vector:
    """Integral e with B e = point, from the pseudoinverse solution plus an exact check."""
    solution = _pseudoinverse(lattice) @ np.array([float(x) for x in point])
    e = tuple(int(round(float(x))) for x in solution)
    if lattice.multiply(e) != tuple(point):
        raise NotInLatticeError(f"point not in lattice: {tuple(point)}")
    return e


def neighborhood_point(result: BabaiResult, reduced: ReducedBasis, z: Sequence[int]) -> Vector:
    """b_op + sum z_i k_i d_i"""
    if len(z) != reduced.dimension:
        raise InvalidInputError(f"state has {len(z)} bits, lattice has dimension {reduced.dimension}")
    point = list(result.b_op)
    for z_i, k_i, vec in zip(z, result.directions, reduced.vectors):
        if z_i and k_i:
            point = [a + k_i * x for a, x in zip(point, vec)]
    return tuple(point)


@dataclass(frozen=True)
class LatticeInstance:
    """One CVP instance: the lattice, its reduction and Babai's approximation."""

    lattice: PrimeLattice
    reduced: ReducedBasis
    babai: BabaiResult
    lattice_id: int = 0


def prepare_instance(
    n: int,
    m: int,
    c: int,
    rng: np.random.Generator,
    delta=DEFAULT_DELTA,
    lattice_id: int = 0,
    f: Optional[Sequence[int]] = None,
) -> LatticeInstance:
    lattice = build_prime_lattice(n, m, c, rng, f)
    reduced = lll_reduce(lattice, delta)
    babai = babai_nearest_plane(reduced, lattice.target)
    return LatticeInstance(lattice, reduced, babai, lattice_id)
