"""
Configuration defaults, dimension-mapping rules and the seed hierarchy.

Values here are loaded into ``app.config`` by ``app.py``; everything else in
the package receives plain parameters so the library stays usable without
the Flask application.
"""

import math
import os
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Optional

import numpy as np

from errors import InvalidInputError

DEFAULTS = {
    "LATTICE_PRECISION": 4,
    "DIMENSION_RULE": "linear",
    "DIMENSION_SCALE": "1/3",
    "COLLECTION_BETA": 0.66,
    "SWEEPS_PER_DIMENSION": 20,
    "BETA_START": 0.05,
    "BETA_END": 5.0,
    "REFINE_SWEEPS_PER_DIMENSION": 50,
    "LLL_DELTA": 0.99,
    "LATTICE_BUDGET_FACTOR": 200,
    "TAU_TRIAL_CAP": 256,
    "ESCALATE_FAMILIES": True,
    "WORKERS": None,
    "SEED": 0,
    "OUTPUT_DIR": "results",
    "OUTPUT_FORMAT": "text",
    "LOG_LEVEL": "WARNING",
    "RECORD_RUNS": True,
    "SQLALCHEMY_DATABASE_URI": "sqlite:///pbit_factor.db",
    "SQLALCHEMY_TRACK_MODIFICATIONS": False,
}

DIMENSION_RULES = ("linear", "sublinear")

# Settings pinned to their published values by --paper-scale.
PUBLISHED_KEYS = frozenset(
    {
        "LATTICE_PRECISION",
        "DIMENSION_RULE",
        "DIMENSION_SCALE",
        "COLLECTION_BETA",
        "SWEEPS_PER_DIMENSION",
        "BETA_START",
        "BETA_END",
    }
)


def as_fraction(value) -> Fraction:
    """Read a scale such as ``"1/3"``, ``0.5`` or ``Fraction(1, 2)`` exactly."""
    if isinstance(value, Fraction):
        return value
    return Fraction(str(value)).limit_denominator(1000)


def linear_dimension(bits: int, scale=Fraction(1, 3)) -> int:
    """m = ceil(k * bit length), never below 2."""
    return max(2, math.ceil(bits * as_fraction(scale)))


def sublinear_dimension(bits: int) -> int:
    """m = ceil(3/2 * bit length / log2(bit length)), never below 2."""
    if bits < 2:
        return 2
    return max(2, math.ceil(1.5 * bits / math.log2(bits)))


def dimension_for(bits: int, rule: str = "linear", scale=Fraction(1, 3)) -> int:
    if rule == "linear":
        return linear_dimension(bits, scale)
    if rule == "sublinear":
        return sublinear_dimension(bits)
    raise InvalidInputError(f"unknown dimension rule {rule!r}; expected one of {DIMENSION_RULES}")


def default_workers() -> int:
    return os.cpu_count() or 1


# --- seed hierarchy ---
# Every random stream is addressed by a path below the single root seed, so
# (seed, path) alone reproduces any lattice, network or experiment row.

STREAM_LATTICE = 1
STREAM_NETWORK = 2
STREAM_SEMIPRIME = 3
STREAM_TAU = 4
STREAM_FAMILY = 5


def seed_sequence(seed: int, *path: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))


def child_rng(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, *path))


@dataclass
class CliConfig:
    """Resolved settings for one CLI invocation.

    Any field left as ``None`` by the command line falls back to the
    application config, which itself falls back to ``DEFAULTS``.
    """

    subcommand: str = ""
    n: Optional[str] = None
    m: Optional[int] = None
    big_m: Optional[int] = None
    c: Optional[int] = None
    dimension_rule: Optional[str] = None
    dimension_scale: Optional[str] = None
    beta: Optional[float] = None
    beta_start: Optional[float] = None
    beta_end: Optional[float] = None
    sweeps: Optional[int] = None
    seed: Optional[int] = None
    workers: Optional[int] = None
    output_dir: Optional[str] = None
    output_format: Optional[str] = None
    paper_scale: bool = False
    extra: dict = field(default_factory=dict)

    _CONFIG_KEYS = {
        "c": "LATTICE_PRECISION",
        "dimension_rule": "DIMENSION_RULE",
        "dimension_scale": "DIMENSION_SCALE",
        "beta": "COLLECTION_BETA",
        "beta_start": "BETA_START",
        "beta_end": "BETA_END",
        "seed": "SEED",
        "workers": "WORKERS",
        "output_dir": "OUTPUT_DIR",
        "output_format": "OUTPUT_FORMAT",
    }

    @classmethod
    def resolve(cls, app_config, subcommand: str, **overrides) -> "CliConfig":
        known = {f.name for f in fields(cls)}
        values = {k: v for k, v in overrides.items() if k in known}
        extra = {k: v for k, v in overrides.items() if k not in known}
        cfg = cls(subcommand=subcommand, extra=extra, **values)
        for attr, key in cls._CONFIG_KEYS.items():
            if getattr(cfg, attr) is not None:
                continue
            if cfg.paper_scale and key in PUBLISHED_KEYS:
                setattr(cfg, attr, DEFAULTS[key])
            else:
                setattr(cfg, attr, app_config.get(key, DEFAULTS[key]))
        if cfg.workers is None:
            cfg.workers = default_workers()
        return cfg

    def setting(self, app_config, key: str):
        """A config value with no flag of its own, honouring --paper-scale."""
        if self.paper_scale and key in PUBLISHED_KEYS:
            return DEFAULTS[key]
        return app_config.get(key, DEFAULTS[key])

    def dimension(self, bits: int) -> int:
        if self.m is not None:
            return self.m
        return dimension_for(bits, self.dimension_rule, self.dimension_scale)

    def smoothness_bound(self, m: int) -> int:
        return self.big_m if self.big_m is not None else m * m
