import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy

from errors import DegenerateBasisError, InvalidInputError, NotInLatticeError
from experiments import semiprime_for
from lattice import (
    PrimeLattice,
    babai_gamma,
    babai_nearest_plane,
    build_prime_lattice,
    coefficients_of,
    diagonal_multiset,
    distance_sq,
    gram_schmidt,
    is_size_reduced,
    lll_reduce,
    neighborhood_point,
    satisfies_lovasz,
    scaled_log_round,
)

# === Prime lattice construction ===


@pytest.mark.parametrize("x, expected", [(2, 6931), (3, 10986), (5, 16094), (77, 43438)])
def test_scaled_log_round(x, expected):
    """round(10^4 ln x) for the N = 77 example."""
    assert scaled_log_round(x, 4) == expected


def test_prime_lattice_for_77():
    """N = 77, m = 3, c = 4: bottom row and target carry the scaled logs."""
    lattice = build_prime_lattice(77, 3, 4, np.random.default_rng(0))

    assert lattice.basis[-1] == (6931, 10986, 16094)
    assert lattice.target == (0, 0, 0, 43438)
    assert sorted(lattice.f) == [1, 1, 2]
    for i in range(3):
        assert lattice.basis[i][i] == lattice.f[i]
        assert sum(abs(x) for x in lattice.basis[i]) == lattice.f[i]


def test_two_dimensional_diagonal_is_ones():
    """For m = 2 the multiset {ceil(1/2), ceil(2/2)} is {1, 1}."""
    assert diagonal_multiset(2) == [1, 1]
    lattice = build_prime_lattice(15, 2, 4, np.random.default_rng(3))
    assert lattice.f == (1, 1)


def test_same_seed_same_lattice():
    a = build_prime_lattice(10403, 6, 4, np.random.default_rng(11))
    b = build_prime_lattice(10403, 6, 4, np.random.default_rng(11))
    assert a == b


def test_columns_are_basis_vectors():
    lattice = build_prime_lattice(77, 3, 4, np.random.default_rng(0))
    columns = lattice.columns()
    assert len(columns) == 3
    assert all(len(col) == 4 for col in columns)
    assert lattice.multiply((1, 0, 0)) == columns[0]


def test_explicit_diagonal():
    lattice = build_prime_lattice(77, 3, 4, f=(2, 1, 1))
    assert lattice.f == (2, 1, 1)
    assert [lattice.basis[i][i] for i in range(3)] == [2, 1, 1]
    with pytest.raises(InvalidInputError, match="rearrangement"):
        build_prime_lattice(77, 3, 4, f=(1, 2, 2))


@pytest.mark.parametrize("n, m, c", [(76, 3, 4), (13, 3, 4), (77, 1, 4), (77, 3, 0)])
def test_build_prime_lattice_rejects_bad_parameters(n, m, c):
    with pytest.raises(InvalidInputError):
        build_prime_lattice(n, m, c, np.random.default_rng(0))


def test_lattice_dict_round_trip_is_checked():
    """A serialized lattice must match its own parameters."""
    lattice = build_prime_lattice(77, 3, 4, np.random.default_rng(0))
    assert PrimeLattice.from_dict(lattice.to_dict()) == lattice

    doc = lattice.to_dict()
    doc["target"][-1] += 1
    with pytest.raises(InvalidInputError):
        PrimeLattice.from_dict(doc)


# === Gram-Schmidt ===


def test_gram_schmidt_of_skewed_basis():
    """[(1, 0), (1, 1)] orthogonalizes to [(1, 0), (0, 1)] with mu = 1."""
    gso = gram_schmidt([(1, 0), (1, 1)])
    assert gso.vectors == ((1, 0), (0, 1))
    assert gso.mu[1] == (1,)
    assert gso.norms_sq == (1, 1)


def test_gram_schmidt_vectors_are_orthogonal():
    """Exact arithmetic gives exactly zero inner products."""
    rng = np.random.default_rng(5)
    vectors = [tuple(int(x) for x in row) for row in rng.integers(-10, 11, size=(5, 5)) + 60 * np.eye(5, dtype=int)]
    gso = gram_schmidt(vectors)
    for i, j in itertools.combinations(range(5), 2):
        assert sum(a * b for a, b in zip(gso.vectors[i], gso.vectors[j])) == 0


def test_gram_schmidt_rejects_dependent_vectors():
    with pytest.raises(DegenerateBasisError):
        gram_schmidt([(1, 2), (2, 4)])


# === LLL ===


def test_lll_leaves_orthonormal_basis_alone():
    reduced = lll_reduce([(1, 0), (0, 1)])
    assert sorted(reduced.vectors) == [(0, 1), (1, 0)]


def test_lll_reduces_skewed_basis():
    """(1, 0), (1000, 1) reduces to the unit vectors up to sign."""
    reduced = lll_reduce([(1, 0), (1000, 1)])
    assert sorted(abs(x) for v in reduced.vectors for x in v) == [0, 0, 1, 1]
    assert is_size_reduced(reduced.gso)
    assert satisfies_lovasz(reduced.gso, reduced.delta)


def test_lll_on_prime_lattice_is_reduced_and_unimodular(instance_77):
    """The reduced basis spans the same lattice through an integral, unimodular transform."""
    # Arrange
    reduced = instance_77.reduced
    columns = instance_77.lattice.columns()

    # Assert
    assert is_size_reduced(reduced.gso)
    assert satisfies_lovasz(reduced.gso, reduced.delta)
    assert abs(sympy.Matrix(reduced.transform).det()) == 1
    for d, row in zip(reduced.vectors, reduced.transform):
        combo = tuple(sum(h * col[k] for h, col in zip(row, columns)) for k in range(len(d)))
        assert combo == d


def test_lll_accepts_float_delta():
    reduced = lll_reduce([(1, 0), (7, 1)], delta=0.75)
    assert reduced.delta == Fraction(3, 4)


@pytest.mark.parametrize("delta", [0.25, 1, 1.5, Fraction(1, 8)])
def test_lll_rejects_delta_out_of_range(delta):
    with pytest.raises(InvalidInputError):
        lll_reduce([(1, 0), (0, 1)], delta=delta)


def test_lll_rejects_dependent_basis():
    with pytest.raises(DegenerateBasisError):
        lll_reduce([(1, 2), (2, 4)])


# === Babai nearest plane ===


def test_babai_on_integer_grid():
    """t = (0.4, 0.6) on Z^2: b_op = (0, 1), c = (0, 1), k = (+1, -1)."""
    reduced = lll_reduce([(1, 0), (0, 1)])
    result = babai_nearest_plane(reduced, (Fraction(2, 5), Fraction(3, 5)))

    by_vector = dict(zip(reduced.vectors, zip(result.roundings, result.directions)))
    assert result.b_op == (0, 1)
    assert by_vector[(1, 0)] == (0, 1)
    assert by_vector[(0, 1)] == (1, -1)


def test_babai_returns_lattice_points_exactly(instance_77):
    """A target that already lies in the lattice is its own approximation."""
    lattice = instance_77.lattice
    point = lattice.multiply((2, -1, 1))

    result = babai_nearest_plane(instance_77.reduced, point)

    assert result.b_op == point
    assert set(result.directions) == {0}


def test_babai_point_is_in_lattice(instance_77):
    b_op = instance_77.babai.b_op
    e = coefficients_of(b_op, instance_77.lattice)
    assert instance_77.lattice.multiply(e) == b_op


def test_babai_within_approximation_factor(make_instance):
    """50 lattices with m <= 6: |b_op - t|^2 <= gamma^2 * min over a +-3 coefficient box around Babai's rounding."""
    lattices = 0
    for m in (2, 3, 4, 5, 6):
        box = np.array(list(itertools.product(range(-3, 4), repeat=m)), dtype=np.int64)
        for seed in range(10):
            instance = make_instance(semiprime_for(seed, 12 + m).n, m, seed=seed)
            target = instance.lattice.target
            residual = np.array(target, dtype=np.int64) - np.array(instance.babai.b_op, dtype=np.int64)
            offsets = residual - box @ np.array(instance.reduced.vectors, dtype=np.int64)

            best = int((offsets * offsets).sum(axis=1).min())

            assert distance_sq(instance.babai.b_op, target) <= babai_gamma(m) ** 2 * best
            lattices += 1
    assert lattices == 50


def test_babai_rejects_wrong_target_dimension(instance_77):
    with pytest.raises(InvalidInputError):
        babai_nearest_plane(instance_77.reduced, (0, 0))


# === Coefficients and neighbourhood points ===


def test_coefficients_of_basis_columns(instance_77):
    lattice = instance_77.lattice
    assert coefficients_of(lattice.multiply((1, 0, 0)), lattice) == (1, 0, 0)
    assert coefficients_of((0, 0, 0, 0), lattice) == (0, 0, 0)


def test_coefficients_of_rejects_points_outside_lattice(instance_77):
    """The target (0, 0, 0, round(10^4 ln 77)) is not a lattice point."""
    with pytest.raises(NotInLatticeError):
        coefficients_of(instance_77.lattice.target, instance_77.lattice)


def test_neighborhood_point(instance_77):
    """z = 0 is b_op; z = e_j moves by k_j d_j."""
    babai, reduced = instance_77.babai, instance_77.reduced
    assert neighborhood_point(babai, reduced, (0, 0, 0)) == babai.b_op
    for j in range(3):
        z = tuple(int(i == j) for i in range(3))
        expected = tuple(b + babai.directions[j] * x for b, x in zip(babai.b_op, reduced.vectors[j]))
        assert neighborhood_point(babai, reduced, z) == expected


def test_neighborhood_point_checks_state_length(instance_77):
    with pytest.raises(InvalidInputError):
        neighborhood_point(instance_77.babai, instance_77.reduced, (0, 1))
