"""
Test suite for pbit-factor.

Test Organization:
- test_numtheory.py, test_lattice.py, test_pbit.py, test_sieve.py,
  test_algebra.py, test_oracle.py: unit tests for the factoring pipeline
- test_experiments.py: measurement campaigns and manifests
- test_models.py: run history tables
- test_config.py: configuration layers and seed streams
- test_cli.py: the pbit-factor commands
- conftest.py: shared fixtures (app, runner, prepared instances)

Running Tests:
    pytest                       # Run all tests
    pytest tests/test_pbit.py    # Run only the p-bit tests
    pytest -k "oracle"           # Run tests matching "oracle"

Test Coverage:
    pytest --cov=. --cov-report=html
"""
