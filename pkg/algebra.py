"""
Linear algebra phase: parity matrix over GF(2), congruence of squares and
the top-level factoring loop.

Row 0 of every ratio vector is the sign element -1; rows 1..M follow the
factor base.
"""

import logging
import time
from concurrent.futures import Executor
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import sympy

import config
from errors import BudgetExhaustedError, FactoringError, InvalidInputError, PerfectPowerError, PrimeInputError
from numtheory import FactorBase, gcd, is_prime
from sieve import CampaignParams, RelationSet, SrPair, run_collection_campaign

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1

# Trial division in the input screen stops here (the primes below 100),
# whatever the size of the factor base.
SCREEN_PRIME_COUNT = 25


def ratio_vector(pair: SrPair) -> Tuple[int, ...]:
    """e' - e with the sign element first; u > 0 so e_0 = 0."""
    size = max(len(pair.e.exps), len(pair.e_prime.exps))
    e = pair.e.padded(size).as_row()
    e_prime = pair.e_prime.padded(size).as_row()
    return tuple(b - a for a, b in zip(e, e_prime))


@dataclass
class GF2Matrix:
    """Dense parity matrix; column j is relation j's ratio vector mod 2."""

    bits: np.ndarray

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    @classmethod
    def from_relations(cls, relations: Sequence[SrPair], base_size: int) -> "GF2Matrix":
        bits = np.zeros((base_size + 1, len(relations)), dtype=np.uint8)
        for j, pair in enumerate(relations):
            vec = ratio_vector(pair)
            if len(vec) != base_size + 1:
                raise InvalidInputError(f"relation {j} has {len(vec) - 1} primes, expected {base_size}")
            bits[:, j] = np.array([x & 1 for x in vec], dtype=np.uint8)
        return cls(bits)

    def multiply(self, tau: Sequence[int]) -> np.ndarray:
        return (self.bits.astype(np.int64) @ np.asarray(tau, dtype=np.int64)) % 2


def nullspace_gf2(matrix: GF2Matrix) -> List[np.ndarray]:
    """Basis of {tau : matrix * tau = 0 over GF(2)} by Gauss-Jordan elimination."""
    a = matrix.bits.copy() & 1
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        candidates = np.nonzero(a[r:, c])[0]
        if candidates.size == 0:
            continue
        p = r + int(candidates[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        others = np.nonzero(a[:, c])[0]
        others = others[others != r]
        if others.size:
            a[others] ^= a[r]
        pivots.append(c)
        r += 1

    pivot_set = set(pivots)
    basis = []
    for free in range(cols):
        if free in pivot_set:
            continue
        tau = np.zeros(cols, dtype=np.uint8)
        tau[free] = 1
        for i, pc in enumerate(pivots):
            tau[pc] = a[i, free]
        basis.append(tau)
    return basis


@dataclass
class CongruenceResult:
    tau: Tuple[int, ...]
    x: int
    y: int
    factors: Optional[Tuple[int, int]] = None


def assemble_congruence(tau: Sequence[int], relations: Sequence[SrPair], n: int) -> CongruenceResult:
    """X = prod p_i^(sum tau_j (e + e')_i / 2), Y = prod p_i^(sum tau_j e'_i), both mod N."""
    if len(tau) != len(relations):
        raise InvalidInputError("tau must select over the given relations")
    size = max((max(len(r.e.exps), len(r.e_prime.exps)) for r in relations), default=0)
    total = [0] * (size + 1)
    right = [0] * (size + 1)
    for t, pair in zip(tau, relations):
        if not t:
            continue
        e = pair.e.padded(size).as_row()
        e_prime = pair.e_prime.padded(size).as_row()
        for i in range(size + 1):
            total[i] += e[i] + e_prime[i]
            right[i] += e_prime[i]
    if any(s % 2 for s in total):
        raise FactoringError("selected relations do not form a square; parity bug")

    primes = (-1,) + tuple(FactorBase.of_size(size).primes) if size else (-1,)
    x, y = 1, 1
    for p, s, w in zip(primes, total, right):
        if s:
            x = x * pow(p % n, s // 2, n) % n
        if w:
            y = y * pow(p % n, w, n) % n
    if (x * x - y * y) % n:
        raise FactoringError("assembled values are not a congruence of squares")
    result = CongruenceResult(tuple(int(t) for t in tau), x, y)
    result.factors = extract_factors(result, n)
    return result


def extract_factors(result: CongruenceResult, n: int) -> Optional[Tuple[int, int]]:
    """(p, q) with p * q = N and 1 < p <= q when X != +-Y mod N."""
    x, y = result.x % n, result.y % n
    if x == y or (x + y) % n == 0:
        return None
    p = gcd(abs(x - y), n)
    q = gcd(x + y, n)
    if p * q != n:
        q = n // p
    if not 1 < p < n:
        return None
    return (min(p, q), max(p, q))


def tau_candidates(basis: Sequence[np.ndarray], cap: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    """Basis vectors, then pairwise sums, then random combinations; at most ``cap``."""
    produced = 0
    for tau in basis:
        if produced >= cap:
            return
        produced += 1
        yield tau
    for a, b in combinations(basis, 2):
        if produced >= cap:
            return
        produced += 1
        yield a ^ b
    if len(basis) < 3:
        return
    while produced < cap:
        pick = rng.integers(0, 2, size=len(basis))
        if pick.sum() < 3:
            continue
        tau = np.zeros_like(basis[0])
        for chosen, vec in zip(pick, basis):
            if chosen:
                tau ^= vec
        produced += 1
        yield tau


# --- top level ---


@dataclass
class FactorReport:
    n: int
    factors: Optional[Tuple[int, int]]
    status: str
    method: str
    seed: int
    m: int = 0
    big_m: int = 0
    relations_used: int = 0
    lattices_consumed: int = 0
    collisions: int = 0
    collision_rate: float = 0.0
    tau_trials: int = 0
    elapsed: float = 0.0
    relations: List[SrPair] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc.pop("relations")
        doc["schema_version"] = REPORT_SCHEMA_VERSION
        doc["N"] = str(doc.pop("n"))
        doc["M"] = doc.pop("big_m")
        doc["factors"] = [str(f) for f in self.factors] if self.factors else None
        doc["elapsed"] = round(self.elapsed, 3)
        return doc


def screen_input(n: int, base: Optional[FactorBase] = None) -> Optional[Tuple[int, int]]:
    """Reject inputs the lattice method cannot handle; return a factor pair found by trial division.

    Trial division runs over ``base`` only; without one no division is tried.
    """
    if n < 4:
        raise InvalidInputError(f"N must be a composite integer of at least 4, got {n}")
    if n % 2 == 0:
        raise InvalidInputError(f"input is even: {n} = 2 * {n // 2}")
    if is_prime(n):
        raise PrimeInputError(f"input is prime: {n}")
    power = sympy.perfect_power(n)
    if power:
        root, exponent = power
        raise PerfectPowerError(n, int(root), int(exponent))
    if base is not None:
        for p in base.primes:
            if p * p > n:
                break
            if n % p == 0:
                return (p, n // p)
    return None


def factor(
    n: int,
    params: Optional[CampaignParams] = None,
    seed: int = 0,
    executor: Optional[Executor] = None,
    batch_size: int = 1,
    tau_trial_cap: int = 256,
) -> FactorReport:
    """Collect relations, solve the parity system and try congruences until N splits."""
    started = time.perf_counter()
    params = params or CampaignParams.for_bits(n.bit_length())
    report = FactorReport(n=n, factors=None, status="running", method="lattice", seed=seed, m=params.m, big_m=params.big_m)

    small = screen_input(n, FactorBase.of_size(SCREEN_PRIME_COUNT))
    if small is not None:
        report.factors = (min(small), max(small))
        report.status, report.method = "factored", "trial-division"
        report.elapsed = time.perf_counter() - started
        return report

    relations = RelationSet()
    target = params.relations_needed
    extra = max(5, params.big_m // 10)
    consumed = 0
    attempt = 0
    while True:
        remaining = params.budget - consumed
        if remaining <= 0:
            break
        campaign = run_collection_campaign(
            n,
            replace(params, target_relations=target, lattice_budget=remaining),
            seed=seed,
            executor=executor,
            batch_size=batch_size,
            relations=relations,
            start_index=consumed,
        )
        consumed += campaign.lattices_consumed
        report.lattices_consumed = consumed
        report.collisions = relations.stats.collisions
        report.collision_rate = relations.stats.collision_rate
        if not campaign.complete:
            break

        ordered = relations.ordered()
        report.relations_used = len(ordered)
        basis = nullspace_gf2(GF2Matrix.from_relations(ordered, params.big_m))
        rng = config.child_rng(seed, config.STREAM_TAU, attempt)
        for tau in tau_candidates(basis, tau_trial_cap, rng):
            report.tau_trials += 1
            result = assemble_congruence(tau, ordered, n)
            if result.factors is not None:
                report.factors = result.factors
                report.status = "factored"
                report.relations = ordered
                report.elapsed = time.perf_counter() - started
                logger.info("N=%d split as %d * %d after %d tau trials", n, *result.factors, report.tau_trials)
                return report
        logger.info("all %d congruences trivial; collecting %d more relations", report.tau_trials, extra)
        target = len(relations) + extra
        attempt += 1

    report.status = "budget-exhausted"
    report.relations = relations.ordered()
    report.relations_used = len(relations)
    report.elapsed = time.perf_counter() - started
    raise BudgetExhaustedError(
        f"lattice budget of {params.budget} exhausted with {len(relations)} relations", report
    )

