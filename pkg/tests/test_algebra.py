import numpy as np
import pytest

from algebra import (
    SCREEN_PRIME_COUNT,
    CongruenceResult,
    FactorReport,
    GF2Matrix,
    assemble_congruence,
    extract_factors,
    factor,
    nullspace_gf2,
    ratio_vector,
    screen_input,
    tau_candidates,
)
from errors import BudgetExhaustedError, InvalidInputError, PerfectPowerError, PrimeInputError
from experiments import semiprime_for
from numtheory import FactorBase
from sieve import CampaignParams, check_sr_pair

# === GF(2) matrix and nullspace ===


def test_ratio_vector_has_sign_first():
    """u = 80, N = 77 over (2, 3, 5, 7): e' - e = (0, -4, 1, -1, 0)."""
    pair = check_sr_pair(80, 1, 77, FactorBase.of_size(4))
    assert ratio_vector(pair) == (0, -4, 1, -1, 0)


def test_parity_column_of_negative_difference():
    """2 - 77 = -75 gives a column with the sign bit set."""
    pair = check_sr_pair(2, 1, 77, FactorBase.of_size(4))
    matrix = GF2Matrix.from_relations([pair], 4)
    assert matrix.rows == 5
    assert matrix.cols == 1
    assert matrix.bits[:, 0].tolist() == [1, 1, 1, 0, 0]


def test_from_relations_checks_base_size():
    pair = check_sr_pair(80, 1, 77, FactorBase.of_size(4))
    with pytest.raises(InvalidInputError):
        GF2Matrix.from_relations([pair], 5)


def test_nullspace_of_identity_is_empty():
    assert nullspace_gf2(GF2Matrix(np.eye(3, dtype=np.uint8))) == []


def test_nullspace_finds_duplicate_columns():
    """Columns 0 and 2 are equal, so tau = (1, 0, 1) is the only solution."""
    matrix = GF2Matrix(np.array([[1, 0, 1], [0, 1, 0]], dtype=np.uint8))

    basis = nullspace_gf2(matrix)

    assert len(basis) == 1
    assert basis[0].tolist() == [1, 0, 1]


def test_nullspace_vectors_solve_the_system():
    """Every basis vector of a random 20 x 22 matrix satisfies A tau = 0 mod 2."""
    # Arrange
    rng = np.random.default_rng(8)
    matrix = GF2Matrix(rng.integers(0, 2, size=(20, 22), dtype=np.uint8))

    # Act
    basis = nullspace_gf2(matrix)

    # Assert
    assert len(basis) >= 2
    for tau in basis:
        assert tau.any()
        assert not matrix.multiply(tau).any()


def test_tau_candidates_order_and_cap():
    """Basis vectors first, then pairwise sums, never more than the cap."""
    basis = [np.array(v, dtype=np.uint8) for v in ([1, 0, 0, 1], [0, 1, 0, 1], [0, 0, 1, 1])]

    produced = [t.tolist() for t in tau_candidates(basis, 5, np.random.default_rng(0))]

    assert len(produced) == 5
    assert produced[:3] == [b.tolist() for b in basis]
    assert produced[3] == [1, 1, 0, 0]


def sieved_relations(n, base, v_max=10, window=500):
    """Every sr-pair with 1 <= v <= v_max and |u - vN| <= window, by direct search."""
    found = []
    for v in range(1, v_max + 1):
        for u in range(max(1, v * n - window), v * n + window + 1):
            if u == v * n:
                continue
            pair = check_sr_pair(u, v, n, base)
            if pair is not None:
                found.append(pair)
    return found


def test_nullspace_combinations_are_congruences_of_squares():
    """1000 random nullspace combinations over sieved relations of 8051 = 83 * 97.

    Each one re-sums to an all-even integer vector and assembles X^2 = Y^2 mod N.
    """
    # Arrange
    n, base = 8051, FactorBase.of_size(15)
    relations = sieved_relations(n, base)[:40]
    ratios = [ratio_vector(pair) for pair in relations]
    basis = nullspace_gf2(GF2Matrix.from_relations(relations, base.size))
    rng = np.random.default_rng(11)
    splits = set()

    # Act / Assert
    assert len(relations) == 40
    assert len(basis) >= len(relations) - (base.size + 1)
    checked = 0
    while checked < 1000:
        pick = rng.integers(0, 2, size=len(basis))
        if not pick.any():
            continue
        tau = np.zeros(len(relations), dtype=np.uint8)
        for chosen, vec in zip(pick, basis):
            if chosen:
                tau ^= vec
        resummed = [sum(int(t) * row[i] for t, row in zip(tau, ratios)) for i in range(base.size + 1)]
        assert all(x % 2 == 0 for x in resummed)

        result = assemble_congruence(tau, relations, n)

        assert (result.x * result.x - result.y * result.y) % n == 0
        if result.factors is not None:
            splits.add(result.factors)
        checked += 1
    assert splits == {(83, 97)}


# === Congruence of squares ===


def test_congruence_for_fifteen():
    """16 - 15 = 1: X = 4, Y = 1 and gcd gives (3, 5)."""
    pair = check_sr_pair(16, 1, 15, FactorBase.of_size(3))

    result = assemble_congruence((1,), [pair], 15)

    assert (result.x, result.y) == (4, 1)
    assert result.factors == (3, 5)


def test_empty_selection_is_trivial():
    pair = check_sr_pair(16, 1, 15, FactorBase.of_size(3))
    result = assemble_congruence((0,), [pair], 15)
    assert (result.x, result.y) == (1, 1)
    assert result.factors is None


def test_assemble_checks_tau_length():
    pair = check_sr_pair(16, 1, 15, FactorBase.of_size(3))
    with pytest.raises(InvalidInputError):
        assemble_congruence((1, 0), [pair], 15)


@pytest.mark.parametrize("x, y", [(4, 4), (4, 11), (1, 14)])
def test_trivial_congruences_do_not_split(x, y):
    """X = Y or X = -Y mod 15 yields nothing."""
    assert extract_factors(CongruenceResult((1,), x, y), 15) is None


# === Input screening ===


def test_screen_rejects_even_input():
    with pytest.raises(InvalidInputError, match="input is even"):
        screen_input(100)


def test_screen_rejects_prime_input():
    with pytest.raises(PrimeInputError, match="input is prime"):
        screen_input(13)


def test_screen_rejects_perfect_power():
    with pytest.raises(PerfectPowerError) as info:
        screen_input(343)
    assert info.value.exit_code == 2
    assert "343 = 7^3" in str(info.value)


def test_screen_rejects_tiny_input():
    with pytest.raises(InvalidInputError):
        screen_input(3)


def test_screen_trial_division():
    assert screen_input(77, FactorBase.of_size(9)) == (7, 11)
    assert screen_input(25591, FactorBase.of_size(25)) is None


def test_screen_stops_at_small_primes():
    """97 * 103 is caught; 131 * 257 is left to the lattice sieve even though 131 is in its base."""
    screen = FactorBase.of_size(SCREEN_PRIME_COUNT)
    assert screen.bound == 97
    assert screen_input(9991, screen) == (97, 103)
    assert screen_input(33667, screen) is None


# === Top-level factoring ===


def test_factor_77_by_trial_division():
    report = factor(77, seed=1)
    assert report.factors == (7, 11)
    assert report.status == "factored"
    assert report.method == "trial-division"


def test_factor_above_the_screen_uses_lattices():
    """33667 = 131 * 257 has m = 6 and M = 36, so 131 sits inside the factor base."""
    report = factor(33667, seed=0)
    assert report.big_m == 36
    assert report.method == "lattice"
    assert report.factors == (131, 257)


@pytest.mark.parametrize("bits", [16, 20, 24])
def test_factor_random_semiprimes(bits):
    """Default parameters split several random semiprimes per bit length with the lattice sieve."""
    for index in range(3):
        semiprime = semiprime_for(7, bits, index)

        report = factor(semiprime.n, seed=index)

        assert report.status == "factored"
        assert report.method == "lattice"
        assert report.factors == (semiprime.p, semiprime.q)
        assert report.relations_used >= report.big_m + 2


def test_factor_with_lattices():
    """157 * 163 has no factor in the base, so the lattice sieve has to split it."""
    report = factor(25591, seed=0)

    assert report.method == "lattice"
    assert report.status == "factored"
    p, q = report.factors
    assert p * q == 25591
    assert (p, q) == (157, 163)
    assert report.relations_used >= report.big_m + 2
    assert report.lattices_consumed >= 1


def test_factor_budget_exhausted():
    params = CampaignParams(m=5, big_m=25, lattice_budget=1)

    with pytest.raises(BudgetExhaustedError) as info:
        factor(25591, params, seed=0)

    report = info.value.report
    assert info.value.exit_code == 3
    assert report.status == "budget-exhausted"
    assert report.lattices_consumed == 1
    assert report.factors is None


def test_factor_report_to_dict():
    report = FactorReport(n=77, factors=(7, 11), status="factored", method="trial-division", seed=1, m=3, big_m=9)
    doc = report.to_dict()
    assert doc["N"] == "77"
    assert doc["M"] == 9
    assert doc["factors"] == ["7", "11"]
    assert doc["schema_version"] == 1
    assert "relations" not in doc
