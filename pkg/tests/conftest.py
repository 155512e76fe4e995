"""
Pytest configuration and fixtures for testing.

This module provides shared fixtures used across all test files:
- app: Flask application instance with test configuration
- runner: Flask CLI runner for invoking the pbit-factor commands
- small lattice instances and refinement problems
"""

import os
import tempfile

# The engine is bound when the application module is imported, so the test
# database has to be chosen before that import.
_DB_DIR = tempfile.mkdtemp(prefix="pbit-factor-tests-")
os.environ["PBITFACTOR_SQLALCHEMY_DATABASE_URI"] = f"sqlite:///{os.path.join(_DB_DIR, 'test.db')}"

import numpy as np  # noqa: E402
import pytest  # noqa: E402
from hypothesis import HealthCheck, settings  # noqa: E402

import config  # noqa: E402
from app import app as flask_app  # noqa: E402
from extensions import db  # noqa: E402
from lattice import prepare_instance  # noqa: E402
from pbit import RefinementProblem  # noqa: E402

settings.register_profile(
    "ci",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

# Keys the tests are allowed to change; reset before every test.
_RESETTABLE = {k: v for k, v in config.DEFAULTS.items() if not k.startswith("SQLALCHEMY_")}


@pytest.fixture
def app(tmp_path):
    """
    Create and configure the Flask application for testing.

    Every test starts from the default configuration with a single worker,
    an output directory under ``tmp_path`` and an empty history database.

    Args:
        tmp_path: pytest fixture providing a temporary directory path

    Yields:
        Flask application configured for testing
    """
    flask_app.config.update(_RESETTABLE)
    flask_app.config.pop("CONFIG_FILE", None)
    flask_app.config.update(
        TESTING=True,
        WORKERS=1,
        RECORD_RUNS=True,
        OUTPUT_DIR=str(tmp_path / "results"),
    )

    with flask_app.app_context():
        db.session.remove()
        db.drop_all()
        db.create_all()
        yield flask_app
        db.session.remove()
        db.drop_all()


@pytest.fixture
def runner(app):
    """
    Create a CLI runner that invokes the registered commands.

    Args:
        app: Flask application fixture

    Returns:
        FlaskCliRunner bound to the test application
    """
    return app.test_cli_runner()


@pytest.fixture
def instance_77():
    """Reduced prime lattice of N = 77 with m = 3, c = 4 and a fixed permutation."""
    return prepare_instance(77, 3, 4, np.random.default_rng(0))


@pytest.fixture
def make_instance():
    """Factory for seeded lattice instances: ``make_instance(n, m, seed=0)``."""

    def _make(n, m, seed=0, c=4):
        return prepare_instance(n, m, c, config.child_rng(seed, config.STREAM_LATTICE, 0))

    return _make


@pytest.fixture
def two_bit_problem():
    """Hand-built neighbourhood with energies 00:9, 01:1, 10:4, 11:6."""
    return RefinementProblem(
        target=(2, 2, 1),
        b_op=(0, 0, 0),
        basis_vectors=((0, 2, 1), (1, 2, 1)),
        directions=(1, 1),
    )
