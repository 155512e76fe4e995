"""
Brute-force ground truth over the reduced neighbourhood of b_op.

Full enumeration walks all 2^m states in Gray-code order so each step
changes one bit and the residual is updated in O(m). A Hamming-weight bound
restricts the walk to states with at most ``weight_bound`` ones, which is
how large lattices are handled; such reports are always labelled with the
bound they used.
"""

import csv
import itertools
import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field
from functools import partial, reduce
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

from errors import EnumerationTooLargeError, InvalidInputError
from lattice import LatticeInstance, dot
from numtheory import FactorBase
from pbit import RefinementProblem
from sieve import check_sr_pair, state_to_uv

logger = logging.getLogger(__name__)

FULL_ENUMERATION_LIMIT = 26
DEFAULT_WEIGHT_BOUND = 6

State = Tuple[int, ...]


@dataclass(frozen=True)
class CensusEntry:
    state: State
    distance_sq: int
    u: int
    v: int
    is_sr_pair: bool

    @property
    def bitstring(self) -> str:
        return "".join(str(b) for b in self.state)


@dataclass
class EnumerationReport:
    best_state: State
    best_distance_sq: int
    sr_pairs: List[CensusEntry] = field(default_factory=list)
    states_visited: int = 0
    weight_bound: Optional[int] = None

    def merge(self, other: "EnumerationReport") -> "EnumerationReport":
        """Associative, order-independent combination of two partial reports."""
        if (other.best_distance_sq, other.best_state) < (self.best_distance_sq, self.best_state):
            best_state, best = other.best_state, other.best_distance_sq
        else:
            best_state, best = self.best_state, self.best_distance_sq
        return EnumerationReport(
            best_state=best_state,
            best_distance_sq=best,
            sr_pairs=sorted(self.sr_pairs + other.sr_pairs, key=lambda e: e.state),
            states_visited=self.states_visited + other.states_visited,
            weight_bound=self.weight_bound,
        )


def _check_size(m: int, weight_bound: Optional[int]):
    if weight_bound is None and m > FULL_ENUMERATION_LIMIT:
        raise EnumerationTooLargeError(
            f"full enumeration of 2^{m} states refused; set weight_bound "
            f"(e.g. {DEFAULT_WEIGHT_BOUND}) to enumerate low-weight states only"
        )
    if weight_bound is not None and weight_bound < 0:
        raise InvalidInputError("weight bound cannot be negative")


def _gray_walk(problem: RefinementProblem, prefix: State) -> Iterator[Tuple[State, int]]:
    """All completions of ``prefix`` with their exact energies, one bit flip per step."""
    m = problem.size
    free = m - len(prefix)
    state = list(prefix) + [0] * free
    residual = problem.residual(state)
    yield tuple(state), dot(residual, residual)
    for i in range(1, 1 << free):
        bit = (i & -i).bit_length() - 1
        j = len(prefix) + bit
        step = problem.step(j)
        if state[j]:
            residual = [r + x for r, x in zip(residual, step)]
        else:
            residual = [r - x for r, x in zip(residual, step)]
        state[j] ^= 1
        yield tuple(state), dot(residual, residual)


def _weighted_walk(problem: RefinementProblem, prefix: State, weight_bound: int) -> Iterator[Tuple[State, int]]:
    m = problem.size
    used = sum(prefix)
    free = range(len(prefix), m)
    for weight in range(0, max(0, weight_bound - used) + 1):
        for ones in itertools.combinations(free, weight):
            state = list(prefix) + [0] * (m - len(prefix))
            for j in ones:
                state[j] = 1
            residual = problem.residual(state)
            yield tuple(state), dot(residual, residual)


def walk(problem: RefinementProblem, weight_bound: Optional[int] = None, prefix: State = ()) -> Iterator[Tuple[State, int]]:
    if weight_bound is None:
        return _gray_walk(problem, prefix)
    if sum(prefix) > weight_bound:
        return iter(())
    return _weighted_walk(problem, prefix, weight_bound)


Classifier = Callable[[State, int], Optional[CensusEntry]]


def _enumerate_part(
    problem: RefinementProblem,
    weight_bound: Optional[int],
    prefix: State,
    classify: Optional[Classifier] = None,
) -> EnumerationReport:
    best_state, best = None, None
    visited = 0
    pairs = []
    for state, dist in walk(problem, weight_bound, prefix):
        visited += 1
        if best is None or (dist, state) < (best, best_state):
            best_state, best = state, dist
        if classify is not None:
            entry = classify(state, dist)
            if entry is not None and entry.is_sr_pair:
                pairs.append(entry)
    if best is None:
        # empty partition under a weight bound; merge identity
        return EnumerationReport((1,) * problem.size, float("inf"), [], 0, weight_bound)
    pairs.sort(key=lambda e: e.state)
    return EnumerationReport(best_state, best, pairs, visited, weight_bound)


def _partitions(m: int, parts: int) -> List[State]:
    bits = 0
    while (1 << bits) < parts and bits < m:
        bits += 1
    return [tuple(p) for p in itertools.product((0, 1), repeat=bits)]


def enumerate_neighborhood(
    problem: RefinementProblem,
    weight_bound: Optional[int] = None,
    executor: Optional[Executor] = None,
    parts: int = 1,
    classify: Optional[Classifier] = None,
) -> EnumerationReport:
    """Exact minimum of the energy over {0,1}^m (or its low-weight slice).

    Ties go to the lexicographically smallest state. With an executor the
    space is split on its leading bits and the partial reports merged.
    """
    _check_size(problem.size, weight_bound)
    prefixes = _partitions(problem.size, parts if executor is not None else 1)
    run = partial(_enumerate_part, problem, weight_bound, classify=classify)
    if executor is None:
        reports = [run(prefix) for prefix in prefixes]
    else:
        reports = list(executor.map(run, prefixes))
    report = reduce(EnumerationReport.merge, reports)
    report.weight_bound = weight_bound
    return report


class SrClassifier:
    """Classifies each visited state as sr-pair or not; picklable for process pools."""

    def __init__(self, instance: LatticeInstance, base: FactorBase, keep_all: bool = False):
        self.instance = instance
        self.base = base
        self.keep_all = keep_all
        self.entries: List[CensusEntry] = []

    def __call__(self, state: State, dist: int) -> CensusEntry:
        inst = self.instance
        u, v = state_to_uv(state, inst.lattice, inst.reduced, inst.babai)
        entry = CensusEntry(state, dist, u, v, check_sr_pair(u, v, inst.lattice.n, self.base) is not None)
        if self.keep_all:
            self.entries.append(entry)
        return entry


def enumerate_sr_pairs(
    instance: LatticeInstance,
    base: FactorBase,
    weight_bound: Optional[int] = None,
    executor: Optional[Executor] = None,
    parts: int = 1,
) -> List[CensusEntry]:
    """Every sr-pair in the (possibly weight-bounded) neighbourhood, sorted by state."""
    problem = RefinementProblem.from_instance(instance)
    report = enumerate_neighborhood(
        problem, weight_bound, executor=executor, parts=parts, classify=SrClassifier(instance, base)
    )
    return report.sr_pairs


def neighborhood_census(
    instance: LatticeInstance, base: FactorBase, weight_bound: Optional[int] = None
) -> Tuple[EnumerationReport, List[CensusEntry]]:
    """Report plus one entry per visited state, for CSV output and histograms."""
    problem = RefinementProblem.from_instance(instance)
    classifier = SrClassifier(instance, base, keep_all=True)
    report = enumerate_neighborhood(problem, weight_bound, classify=classifier)
    return report, sorted(classifier.entries, key=lambda e: e.state)


CENSUS_FIELDS = ("state", "distance_sq", "is_sr_pair", "u", "v")


def write_census_csv(entries: Sequence[CensusEntry], handle):
    writer = csv.writer(handle)
    writer.writerow(CENSUS_FIELDS)
    for e in entries:
        writer.writerow([e.bitstring, e.distance_sq, int(e.is_sr_pair), str(e.u), str(e.v)])
