"""
From p-bit states to smooth relation pairs.

A lattice point b = B e gives u = prod p_i^e_i (e_i >= 0) and v = prod
p_i^-e_i (e_i < 0). The pair is kept when u, v and u - vN are all smooth
over the first M primes. Relations from many lattices are pooled in a
``RelationSet`` that counts collisions between lattices.
"""

import json
import logging
import math
import threading
import time
from collections import Counter
from concurrent.futures import Executor
from dataclasses import dataclass, field
from functools import lru_cache, partial
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from sympy.utilities.iterables import multiset_permutations

import config
from errors import InvalidInputError
from lattice import (
    BabaiResult,
    LatticeInstance,
    PrimeLattice,
    ReducedBasis,
    coefficients_of,
    diagonal_multiset,
    neighborhood_point,
    prepare_instance,
)
from numtheory import ExponentVector, FactorBase, smooth_factorize, split_exponents
from pbit import DEFAULT_COLLECTION_BETA, RefinementProblem, run_collection

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SrPair:
    u: int
    v: int
    e: ExponentVector
    e_prime: ExponentVector
    lattice_id: int = 0
    sweep_index: int = 0

    @property
    def key(self) -> Tuple[int, int]:
        return (self.u, self.v)

    def to_record(self) -> dict:
        return {
            "u": str(self.u),
            "v": str(self.v),
            "e": self.e.to_dict(),
            "e_prime": self.e_prime.to_dict(),
            "lattice_id": self.lattice_id,
            "sweep_index": self.sweep_index,
        }

    @classmethod
    def from_record(cls, record: dict) -> "SrPair":
        def vec(doc):
            return ExponentVector(int(doc["sign"]), tuple(int(x) for x in doc["exps"]))

        return cls(
            u=int(record["u"]),
            v=int(record["v"]),
            e=vec(record["e"]),
            e_prime=vec(record["e_prime"]),
            lattice_id=int(record.get("lattice_id", 0)),
            sweep_index=int(record.get("sweep_index", 0)),
        )


def state_to_uv(
    state: Sequence[int], lattice: PrimeLattice, reduced: ReducedBasis, babai: BabaiResult
) -> Tuple[int, int]:
    point = neighborhood_point(babai, reduced, state)
    e = coefficients_of(point, lattice)
    return split_exponents(e, lattice.primes)


def check_sr_pair(u: int, v: int, n: int, base: FactorBase) -> Optional[SrPair]:
    """An SrPair when u, v and u - vN are all p_M-smooth, else ``None``."""
    if u < 1 or v < 1:
        raise InvalidInputError("u and v must be positive")
    w = u - v * n
    if w == 0:
        logger.warning("degenerate candidate u = vN (u=%d, v=%d); skipped", u, v)
        return None
    e = smooth_factorize(u, base)
    if e is None or smooth_factorize(v, base) is None:
        return None
    e_prime = smooth_factorize(w, base)
    if e_prime is None:
        return None
    return SrPair(u=u, v=v, e=e, e_prime=e_prime)


# --- candidate stream ---


@dataclass(frozen=True)
class Candidate:
    state: Tuple[int, ...]
    sweep_index: int
    energy: int


class CandidateCollector:
    """Sink for emitted states. Records only the first sighting of each state."""

    def __init__(self):
        self.first_seen: Dict[Tuple[int, ...], Candidate] = {}
        self.emissions = 0

    def __call__(self, state, sweep_index, energy):
        self.emissions += 1
        if state not in self.first_seen:
            self.first_seen[state] = Candidate(state, sweep_index, energy)

    def candidates(self, by_cost: bool = False) -> List[Candidate]:
        found = list(self.first_seen.values())
        if by_cost:
            found.sort(key=lambda c: (c.energy, c.state))
        return found


def _check_candidate(candidate: Candidate, instance: LatticeInstance, n: int, base: FactorBase):
    u, v = state_to_uv(candidate.state, instance.lattice, instance.reduced, instance.babai)
    pair = check_sr_pair(u, v, n, base)
    if pair is None:
        return None
    return SrPair(pair.u, pair.v, pair.e, pair.e_prime, instance.lattice_id, candidate.sweep_index)


def check_candidates(
    candidates: Sequence[Candidate],
    instance: LatticeInstance,
    n: int,
    base: FactorBase,
    executor: Optional[Executor] = None,
) -> List[SrPair]:
    """Smoothness-check candidates in order; results keep the input order."""
    check = partial(_check_candidate, instance=instance, n=n, base=base)
    if executor is None:
        results = map(check, candidates)
    else:
        results = executor.map(check, candidates, chunksize=max(1, len(candidates) // 16))
    return [pair for pair in results if pair is not None]


# --- one lattice ---


@dataclass(frozen=True)
class EngineParams:
    beta: float = DEFAULT_COLLECTION_BETA
    sweeps_per_dimension: int = 20
    sweeps: Optional[int] = None
    update_order: str = "sweep"
    priority_order: bool = False
    delta: float = 0.99

    def sweeps_for(self, m: int) -> int:
        return self.sweeps if self.sweeps is not None else self.sweeps_per_dimension * m


@dataclass
class LatticeStats:
    lattice_id: int
    emissions: int = 0
    distinct_states: int = 0
    checked: int = 0
    sr_pairs: int = 0
    m: int = 0
    c: int = 0


@dataclass
class LatticeHarvest:
    instance: LatticeInstance
    pairs: List[SrPair]
    stats: LatticeStats


def collect_from_lattice(
    n: int,
    m: int,
    big_m: int,
    c: int,
    engine: EngineParams,
    rng: np.random.Generator,
    lattice_id: int = 0,
    executor: Optional[Executor] = None,
    diagonal: Optional[Sequence[int]] = None,
) -> LatticeHarvest:
    """Build, reduce and approximate one lattice, then harvest sr-pairs with the p-bit engine.

    ``diagonal`` fixes the lattice's diagonal; by default it is drawn from ``rng``.
    """
    if big_m < m:
        raise InvalidInputError(f"smoothness bound M={big_m} must be at least m={m}")
    instance = prepare_instance(n, m, c, rng, engine.delta, lattice_id, diagonal)
    base = FactorBase.of_size(big_m)
    collector = CandidateCollector()
    run_stats = run_collection(
        RefinementProblem.from_instance(instance),
        beta=engine.beta,
        sweeps=engine.sweeps_for(m),
        sink=collector,
        rng=rng,
        update_order=engine.update_order,
    )
    candidates = collector.candidates(by_cost=engine.priority_order)
    pairs = check_candidates(candidates, instance, n, base, executor)
    stats = LatticeStats(
        lattice_id=lattice_id,
        emissions=run_stats.emissions,
        distinct_states=len(candidates),
        checked=len(candidates),
        sr_pairs=len(pairs),
        m=m,
        c=c,
    )
    return LatticeHarvest(instance, pairs, stats)


# --- relation pool ---


@dataclass
class RelationStats:
    emissions: int = 0
    candidates_checked: int = 0
    submissions: int = 0
    collisions: int = 0
    same_lattice_duplicates: int = 0

    @property
    def collision_rate(self) -> float:
        return self.collisions / self.submissions if self.submissions else 0.0


class RelationSet:
    """Deduplicated sr-pairs keyed by (u, v). Safe to feed from several threads."""

    def __init__(self):
        self.relations: Dict[Tuple[int, int], SrPair] = {}
        self.origins: Dict[Tuple[int, int], set] = {}
        self.stats = RelationStats()
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.relations)

    def __iter__(self):
        return iter(self.relations.values())

    def add(self, pair: SrPair) -> str:
        """Returns ``"new"``, ``"collision"`` or ``"duplicate"``."""
        with self._lock:
            self.stats.submissions += 1
            seen_in = self.origins.get(pair.key)
            if seen_in is None:
                self.relations[pair.key] = pair
                self.origins[pair.key] = {pair.lattice_id}
                return "new"
            if pair.lattice_id in seen_in:
                self.stats.same_lattice_duplicates += 1
                return "duplicate"
            seen_in.add(pair.lattice_id)
            self.stats.collisions += 1
            return "collision"

    def absorb(self, harvest: LatticeHarvest):
        with self._lock:
            self.stats.emissions += harvest.stats.emissions
            self.stats.candidates_checked += harvest.stats.checked
        for pair in harvest.pairs:
            self.add(pair)

    def ordered(self) -> List[SrPair]:
        """Relations in discovery order."""
        return list(self.relations.values())

    def write_jsonl(self, handle):
        for pair in self.ordered():
            handle.write(json.dumps(pair.to_record()) + "\n")

    @classmethod
    def read_jsonl(cls, lines: Iterable[str]) -> "RelationSet":
        result = cls()
        for line in lines:
            line = line.strip()
            if line:
                result.add(SrPair.from_record(json.loads(line)))
        return result


# --- campaign ---


@dataclass(frozen=True)
class CampaignParams:
    m: int
    big_m: int
    c: int = 4
    target_relations: Optional[int] = None
    lattice_budget: Optional[int] = None
    budget_factor: int = 200
    escalate: bool = True
    engine: EngineParams = field(default_factory=EngineParams)

    @classmethod
    def for_bits(cls, bits: int, rule: str = "linear", scale="1/3", **kwargs) -> "CampaignParams":
        m = kwargs.pop("m", None) or config.dimension_for(bits, rule, scale)
        big_m = kwargs.pop("big_m", None) or m * m
        return cls(m=m, big_m=big_m, **kwargs)

    @property
    def relations_needed(self) -> int:
        return self.target_relations if self.target_relations is not None else self.big_m + 2

    @property
    def budget(self) -> int:
        if self.lattice_budget is not None:
            return self.lattice_budget
        return self.budget_factor * (self.big_m + 2)


# --- lattice families ---
# A family is one (m, c) pair. With few diagonal permutations a family runs
# dry quickly, so a campaign walks a fixed ladder of families: step s holds
# (m0 + a, c0 + s - a) for a = 0..s with m <= M. Every relation stays valid
# over the same M primes. The ladder depends only on the lattice index, so
# results do not depend on the worker count.

FAMILY_QUOTA_FACTOR = 4
FAMILY_ENUMERATION_LIMIT = 5040


def diagonal_count(m: int) -> int:
    """Number of distinct rearrangements of the diagonal multiset."""
    count = math.factorial(m)
    for multiplicity in Counter(diagonal_multiset(m)).values():
        count //= math.factorial(multiplicity)
    return count


@dataclass(frozen=True)
class LatticeFamily:
    index: int
    m: int
    c: int
    quota: Optional[int]

    @property
    def label(self) -> str:
        return f"m={self.m},c={self.c}"


@dataclass(frozen=True)
class LatticePlan:
    family: LatticeFamily
    position: int
    diagonal: Optional[Tuple[int, ...]]


def lattice_families(params: CampaignParams) -> Iterator[LatticeFamily]:
    if params.m > params.big_m:
        raise InvalidInputError(f"lattice dimension {params.m} exceeds the factor base size {params.big_m}")
    if not params.escalate:
        yield LatticeFamily(0, params.m, params.c, None)
        return
    cap = FAMILY_QUOTA_FACTOR * (params.big_m + 2)
    index = 0
    step = 0
    while True:
        for a in range(step + 1):
            m = params.m + a
            if m > params.big_m:
                break
            yield LatticeFamily(index, m, params.c + step - a, min(diagonal_count(m), cap))
            index += 1
        step += 1


@lru_cache(maxsize=32)
def _family_diagonals(m: int, seed: int, family: int) -> Tuple[Tuple[int, ...], ...]:
    """Every distinct diagonal of dimension m, in a seeded order per family."""
    diagonals = [tuple(int(x) for x in f) for f in multiset_permutations(diagonal_multiset(m))]
    order = config.child_rng(seed, config.STREAM_FAMILY, family).permutation(len(diagonals))
    return tuple(diagonals[i] for i in order)


def plan_lattice(params: CampaignParams, seed: int, index: int) -> LatticePlan:
    """Family and diagonal of campaign lattice ``index``.

    Within a family whose diagonals can be listed, lattices take distinct
    diagonals; larger families draw theirs from the lattice's own stream.
    """
    if index < 0:
        raise InvalidInputError(f"lattice index must be non-negative, got {index}")
    offset = index
    for family in lattice_families(params):
        if family.quota is None or offset < family.quota:
            break
        offset -= family.quota
    diagonal = None
    if family.quota is not None and diagonal_count(family.m) <= FAMILY_ENUMERATION_LIMIT:
        diagonal = _family_diagonals(family.m, seed, family.index)[offset]
    return LatticePlan(family, offset, diagonal)


@dataclass
class CampaignResult:
    relations: RelationSet
    lattices_consumed: int
    complete: bool
    lattice_stats: List[LatticeStats]
    elapsed: float

    @property
    def collision_rate(self) -> float:
        return self.relations.stats.collision_rate

    def summary(self) -> dict:
        stats = self.relations.stats
        return {
            "relations": len(self.relations),
            "lattices_consumed": self.lattices_consumed,
            "complete": self.complete,
            "emissions": stats.emissions,
            "candidates_checked": stats.candidates_checked,
            "submissions": stats.submissions,
            "collisions": stats.collisions,
            "same_lattice_duplicates": stats.same_lattice_duplicates,
            "collision_rate": stats.collision_rate,
            "mean_sr_pairs_per_lattice": (
                sum(s.sr_pairs for s in self.lattice_stats) / len(self.lattice_stats)
                if self.lattice_stats
                else 0.0
            ),
            "families": self.families,
            "elapsed_seconds": round(self.elapsed, 3),
        }

    @property
    def families(self) -> List[str]:
        """Lattice families used, in order of first use."""
        return list(dict.fromkeys(f"m={s.m},c={s.c}" for s in self.lattice_stats))


def harvest_lattice(n: int, params: CampaignParams, seed: int, index: int) -> LatticeHarvest:
    """Lattice ``index`` of a campaign; its randomness depends only on (seed, index)."""
    plan = plan_lattice(params, seed, index)
    rng = config.child_rng(seed, config.STREAM_LATTICE, index)
    return collect_from_lattice(
        n,
        plan.family.m,
        params.big_m,
        plan.family.c,
        params.engine,
        rng,
        lattice_id=index,
        diagonal=plan.diagonal,
    )


def run_collection_campaign(
    n: int,
    params: CampaignParams,
    seed: int = 0,
    executor: Optional[Executor] = None,
    batch_size: int = 1,
    relations: Optional[RelationSet] = None,
    start_index: int = 0,
) -> CampaignResult:
    """Harvest fresh lattices until enough relations are pooled or the budget runs out.

    Lattices may be harvested concurrently in batches, but they are absorbed
    in index order and the run stops at the first index that completes the
    target, so the result does not depend on the worker count.
    """
    started = time.perf_counter()
    relations = relations if relations is not None else RelationSet()
    needed = params.relations_needed
    stop_at = start_index + params.budget
    lattice_stats = []
    index = start_index
    batch_size = max(1, batch_size if executor is not None else 1)

    while len(relations) < needed and index < stop_at:
        batch = list(range(index, min(index + batch_size, stop_at)))
        if executor is None:
            harvests = [harvest_lattice(n, params, seed, i) for i in batch]
        else:
            harvests = list(executor.map(partial(harvest_lattice, n, params, seed), batch))
        for harvest in harvests:
            if lattice_stats and (harvest.stats.m, harvest.stats.c) != (lattice_stats[-1].m, lattice_stats[-1].c):
                logger.info(
                    "campaign N=%d: moving to lattice family m=%d c=%d at lattice %d with %d/%d relations",
                    n, harvest.stats.m, harvest.stats.c, harvest.stats.lattice_id, len(relations), needed,
                )
            relations.absorb(harvest)
            lattice_stats.append(harvest.stats)
            index = harvest.stats.lattice_id + 1
            if len(relations) >= needed:
                break
        logger.info(
            "campaign N=%d: %d lattices, %d/%d relations, %d collisions",
            n, index - start_index, len(relations), needed, relations.stats.collisions,
        )

    complete = len(relations) >= needed
    if not complete:
        logger.warning("lattice budget of %d exhausted with %d/%d relations", params.budget, len(relations), needed)
    return CampaignResult(
        relations=relations,
        lattices_consumed=index - start_index,
        complete=complete,
        lattice_stats=lattice_stats,
        elapsed=time.perf_counter() - started,
    )
