import io
import itertools
from concurrent.futures import ThreadPoolExecutor
from functools import reduce

import pytest

import config
from errors import EnumerationTooLargeError, InvalidInputError
from numtheory import FactorBase
from oracle import (
    EnumerationReport,
    _enumerate_part,
    _partitions,
    enumerate_neighborhood,
    enumerate_sr_pairs,
    neighborhood_census,
    walk,
    write_census_csv,
)
from pbit import RefinementProblem, energy
from sieve import EngineParams, check_sr_pair, collect_from_lattice

# === Exhaustive minimum ===


def test_two_bit_table(two_bit_problem):
    """Energies 00:9, 01:1, 10:4, 11:6 have their minimum at 01."""
    report = enumerate_neighborhood(two_bit_problem)

    assert report.best_state == (0, 1)
    assert report.best_distance_sq == 1
    assert report.states_visited == 4
    assert report.weight_bound is None


def test_gray_walk_visits_every_state_with_exact_energy(instance_77):
    problem = RefinementProblem.from_instance(instance_77)

    visited = dict(walk(problem))

    assert set(visited) == set(itertools.product((0, 1), repeat=3))
    for state, dist in visited.items():
        assert dist == energy(problem, state)


def test_ties_go_to_the_smallest_state():
    """Both unit flips reach the target; 01 sorts before 10."""
    problem = RefinementProblem(
        target=(1, 1), b_op=(0, 0), basis_vectors=((1, 1), (1, 1)), directions=(1, 1)
    )
    report = enumerate_neighborhood(problem)
    assert report.best_state == (0, 1)
    assert report.best_distance_sq == 0


def test_zero_weight_bound_is_babai_point(instance_77):
    problem = RefinementProblem.from_instance(instance_77)

    report = enumerate_neighborhood(problem, weight_bound=0)

    assert report.best_state == (0, 0, 0)
    assert report.states_visited == 1
    assert report.best_distance_sq == energy(problem, (0, 0, 0))
    assert report.weight_bound == 0


def test_weight_bounded_walk_counts_states(make_instance):
    """Weight <= 2 over m = 6 visits 1 + 6 + 15 states."""
    problem = RefinementProblem.from_instance(make_instance(10403, 6))
    report = enumerate_neighborhood(problem, weight_bound=2)
    assert report.states_visited == 22
    assert sum(report.best_state) <= 2


def test_full_weight_bound_matches_gray_walk(make_instance):
    problem = RefinementProblem.from_instance(make_instance(10403, 6, seed=2))
    full = enumerate_neighborhood(problem)
    bounded = enumerate_neighborhood(problem, weight_bound=6)
    assert (full.best_state, full.best_distance_sq) == (bounded.best_state, bounded.best_distance_sq)
    assert full.states_visited == bounded.states_visited == 64


def test_large_dimension_needs_weight_bound():
    """2^27 states are refused without a Hamming-weight bound."""
    m = 27
    problem = RefinementProblem(
        target=(0,) * m,
        b_op=(0,) * m,
        basis_vectors=tuple(tuple(int(i == j) for j in range(m)) for i in range(m)),
        directions=(1,) * m,
    )
    with pytest.raises(EnumerationTooLargeError):
        enumerate_neighborhood(problem)

    report = enumerate_neighborhood(problem, weight_bound=1)
    assert report.states_visited == 28
    assert report.best_state == (0,) * m


def test_negative_weight_bound_is_rejected(two_bit_problem):
    with pytest.raises(InvalidInputError):
        enumerate_neighborhood(two_bit_problem, weight_bound=-1)


# === Partitioned enumeration ===


def test_partitioned_enumeration_matches_sequential(make_instance):
    instance = make_instance(10403, 6, seed=1)
    base = FactorBase.of_size(36)

    sequential = enumerate_sr_pairs(instance, base)
    with ThreadPoolExecutor(max_workers=4) as executor:
        parallel = enumerate_sr_pairs(instance, base, executor=executor, parts=4)

    assert sequential == parallel


def test_merge_is_associative_and_order_free(make_instance):
    problem = RefinementProblem.from_instance(make_instance(10403, 6, seed=4))
    report = enumerate_neighborhood(problem)
    parts = [_enumerate_part(problem, None, prefix) for prefix in _partitions(6, 4)]
    left = reduce(EnumerationReport.merge, parts)
    right = parts[0].merge(parts[1].merge(parts[2].merge(parts[3])))
    shuffled = reduce(EnumerationReport.merge, reversed(parts))

    for merged in (left, right, shuffled):
        assert merged.best_state == report.best_state
        assert merged.best_distance_sq == report.best_distance_sq
        assert merged.states_visited == 64


# === sr-pair census ===


def test_census_covers_every_state(instance_77):
    base = FactorBase.of_size(9)

    report, entries = neighborhood_census(instance_77, base)

    assert len(entries) == 8
    assert [e.state for e in entries] == sorted(itertools.product((0, 1), repeat=3))
    for entry in entries:
        assert entry.is_sr_pair == (check_sr_pair(entry.u, entry.v, 77, base) is not None)
    assert [e.state for e in report.sr_pairs] == [e.state for e in entries if e.is_sr_pair]


def test_enumerate_sr_pairs_is_sorted(make_instance):
    pairs = enumerate_sr_pairs(make_instance(10403, 6, seed=3), FactorBase.of_size(36))
    assert [p.state for p in pairs] == sorted(p.state for p in pairs)
    assert all(p.is_sr_pair for p in pairs)


def test_collection_finds_only_census_pairs():
    """Every pair the p-bit collection keeps is in the exhaustive census of its lattice."""
    found = 0
    for seed in range(6):
        harvest = collect_from_lattice(25591, 6, 36, 4, EngineParams(), config.child_rng(seed, config.STREAM_LATTICE, 0))

        census = {(e.u, e.v) for e in enumerate_sr_pairs(harvest.instance, FactorBase.of_size(36))}

        assert {p.key for p in harvest.pairs} <= census
        found += len(harvest.pairs)
    assert found > 0


def test_census_csv(instance_77):
    _, entries = neighborhood_census(instance_77, FactorBase.of_size(9))
    handle = io.StringIO()

    write_census_csv(entries, handle)

    lines = handle.getvalue().splitlines()
    assert lines[0] == "state,distance_sq,is_sr_pair,u,v"
    assert len(lines) == 9
    assert lines[1].startswith("000,")
