import json

from algebra import FactorReport
from extensions import db
from models import FactoringRun, StoredRelation
from numtheory import FactorBase
from sieve import check_sr_pair

# === FactoringRun Model Tests ===
#


def make_report(**overrides):
    pair = check_sr_pair(80, 1, 77, FactorBase.of_size(4))
    settings = dict(
        n=77,
        factors=(7, 11),
        status="factored",
        method="lattice",
        seed=3,
        m=3,
        big_m=4,
        relations_used=1,
        relations=[pair],
    )
    settings.update(overrides)
    return FactorReport(**settings)


def test_run_create_and_persist(app):
    """Test that a FactoringRun built from a report is persisted with its factors."""
    # Arrange
    run = FactoringRun.from_report(make_report())

    # Act
    db.session.add(run)
    db.session.commit()

    # Assert
    stored = FactoringRun.query.first()
    assert stored is not None
    assert stored.n == "77"
    assert (stored.p, stored.q) == ("7", "11")
    assert stored.status == "factored"
    assert stored.created_at is not None
    assert json.loads(stored.report_json)["N"] == "77"


def test_run_allows_missing_factors(app):
    """Test that an exhausted run stores no factors"""
    # Arrange
    run = FactoringRun.from_report(make_report(factors=None, status="budget-exhausted"))

    # Act
    db.session.add(run)
    db.session.commit()

    # Assert
    stored = FactoringRun.query.first()
    assert stored.p is None
    assert stored.q is None
    assert stored.to_dict()["factors"] is None


def test_run_keeps_big_integers_exact(app):
    """N beyond 64 bits survives as a decimal string."""
    n = 2**89 - 1
    db.session.add(FactoringRun.from_report(make_report(n=n, factors=None, status="budget-exhausted")))
    db.session.commit()
    assert int(FactoringRun.query.first().n) == n


def test_relations_are_stored_with_the_run(app):
    run = FactoringRun.from_report(make_report())
    db.session.add(run)
    db.session.commit()

    stored = StoredRelation.query.one()
    record = stored.to_record()
    assert stored.run.id == run.id
    assert (record["u"], record["v"]) == ("80", "1")
    assert record["e"] == {"sign": 0, "exps": [4, 0, 1, 0]}
    assert record["e_prime"] == {"sign": 0, "exps": [0, 1, 0, 0]}


def test_deleting_run_deletes_relations(app):
    run = FactoringRun.from_report(make_report())
    db.session.add(run)
    db.session.commit()

    db.session.delete(run)
    db.session.commit()

    assert StoredRelation.query.count() == 0


def test_run_to_dict(app):
    run = FactoringRun.from_report(make_report())
    db.session.add(run)
    db.session.commit()

    doc = run.to_dict()
    assert doc["N"] == "77"
    assert doc["factors"] == ["7", "11"]
    assert doc["M"] == 4
    assert doc["seed"] == 3
