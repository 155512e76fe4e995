"""
Measurement campaigns over lattice dimension, mapping rule and bit length.

Each campaign returns plot-ready datasets that ``write_experiment`` stores as
CSV files next to a JSON manifest. All randomness flows from
``ExperimentConfig.seed`` through the seed hierarchy in ``config``: lattice
``index`` of a data point is drawn from the path (experiment, point..., index),
so rows do not depend on the worker count or on the order work finishes in.
"""

import csv
import hashlib
import json
import logging
import math
import os
from concurrent.futures import Executor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

import config
from algebra import FactorReport, factor
from errors import BudgetExhaustedError, InvalidInputError
from lattice import prepare_instance
from numtheory import FactorBase, is_prime
from oracle import DEFAULT_WEIGHT_BOUND, enumerate_neighborhood, enumerate_sr_pairs, neighborhood_census
from pbit import (
    DEFAULT_BETA_END,
    DEFAULT_BETA_START,
    RefinementProblem,
    Schedule,
    StoppingCriterion,
    energy,
    run_refinement,
)
from sieve import CampaignParams, EngineParams, check_sr_pair, collect_from_lattice

logger = logging.getLogger(__name__)

EXPERIMENTS = ("fig2a", "fig2b", "fig3", "fig3a", "fig4")

DESK_LATTICES = 50
PUBLISHED_LATTICES = 500
DESK_SEMIPRIMES = 5
PUBLISHED_SEMIPRIMES = 25

CI_Z = 1.96
MANIFEST_SCHEMA_VERSION = 1
SCREEN_ATTEMPTS = 10

REFERENCE_SOLVERS = ("Schnorr", "QAOA", "Hill climbing")

# Choices the published campaigns leave open; copied into every manifest.
ARTIFACT_CHOICES = {
    "semiprime_generator": "two uniform primes of bitlen/2 bits, p != q, product of exact bit length",
    "second_linear_mapping": "k = 1/2",
    "semiprimes_per_point": "one semiprime per bit length for lattice statistics; fresh semiprimes for factoring runs",
    "confidence_interval": "mean +- 1.96 * standard error",
}


@dataclass(frozen=True)
class Mapping:
    rule: str
    scale: str = "1/3"

    def __post_init__(self):
        if self.rule not in config.DIMENSION_RULES:
            raise InvalidInputError(f"unknown dimension rule {self.rule!r}")

    @property
    def label(self) -> str:
        return f"linear k={self.scale}" if self.rule == "linear" else "sublinear"

    def dimension(self, bits: int) -> int:
        return config.dimension_for(bits, self.rule, self.scale)


DEFAULT_MAPPINGS = (Mapping("linear", "1/3"), Mapping("linear", "1/2"), Mapping("sublinear"))


@dataclass
class ExperimentConfig:
    """Everything a campaign depends on. Identical configs write identical files."""

    experiment: str
    bits: Tuple[int, int] = (20, 40)
    bit_step: int = 4
    lattices: Optional[int] = None
    semiprimes: Optional[int] = None
    seed: int = 0
    paper_scale: bool = False
    n: Optional[int] = None
    fixed_bits: int = 30
    dimensions: Tuple[int, int] = (8, 14)
    mappings: Tuple[Mapping, ...] = DEFAULT_MAPPINGS
    rule: str = "linear"
    scale: str = "1/3"
    c: int = 4
    delta: float = 0.99
    engine: EngineParams = field(default_factory=EngineParams)
    beta_start: float = DEFAULT_BETA_START
    beta_end: float = DEFAULT_BETA_END
    refine_sweeps_per_dimension: int = 50
    full_census_limit: int = 14
    weight_bound: int = DEFAULT_WEIGHT_BOUND
    smoothness_powers: Tuple[float, ...] = (1.0, 1.5, 2.0)
    distance_bins: int = 20
    budget_factor: int = 200
    tau_trial_cap: int = 256
    batch_size: int = 1
    reference: Tuple[Tuple[str, int, float], ...] = ()

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidInputError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        lo, hi = self.bits
        if lo < 8 or hi < lo:
            raise InvalidInputError(f"bit range must satisfy 8 <= low <= high, got {lo}:{hi}")
        if self.bit_step < 1:
            raise InvalidInputError("bit step must be positive")
        d_lo, d_hi = self.dimensions
        if d_lo < 2 or d_hi < d_lo:
            raise InvalidInputError(f"dimension range must satisfy 2 <= low <= high, got {d_lo}:{d_hi}")
        if self.lattices is not None and self.lattices < 1:
            raise InvalidInputError("need at least one lattice per point")
        if self.semiprimes is not None and self.semiprimes < 1:
            raise InvalidInputError("need at least one semiprime per point")

    @property
    def lattice_count(self) -> int:
        if self.lattices is not None:
            return self.lattices
        return PUBLISHED_LATTICES if self.paper_scale else DESK_LATTICES

    @property
    def semiprime_count(self) -> int:
        if self.semiprimes is not None:
            return self.semiprimes
        return PUBLISHED_SEMIPRIMES if self.paper_scale else DESK_SEMIPRIMES

    @property
    def code(self) -> int:
        return EXPERIMENTS.index(self.experiment)

    def bit_lengths(self) -> List[int]:
        lo, hi = self.bits
        return list(range(lo, hi + 1, self.bit_step))

    def census_bound(self, m: int) -> Optional[int]:
        """None for a full census, else the Hamming-weight bound used above ``full_census_limit``."""
        return None if m <= self.full_census_limit else self.weight_bound

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc.pop("batch_size")  # scheduling only; rows do not depend on it
        doc["bits"] = list(self.bits)
        doc["dimensions"] = list(self.dimensions)
        doc["mappings"] = [m.label for m in self.mappings]
        doc["lattice_count"] = self.lattice_count
        doc["semiprime_count"] = self.semiprime_count
        doc["n"] = str(self.n) if self.n is not None else None
        doc["reference"] = [list(r) for r in self.reference]
        return doc


# --- statistics ---


def mean_ci(values: Iterable[float]) -> Tuple[float, float, float]:
    """(mean, low, high) with a 1.96 standard-error half-width."""
    data = np.asarray(list(values), dtype=float)
    if data.size == 0:
        return math.nan, math.nan, math.nan
    mean = float(data.mean())
    if data.size < 2:
        return mean, mean, mean
    err = float(stats.sem(data))
    return mean, mean - CI_Z * err, mean + CI_Z * err


def proportion_ci(hits: int, trials: int) -> Tuple[float, float, float]:
    if trials == 0:
        return 0.0, 0.0, 0.0
    p = hits / trials
    err = math.sqrt(p * (1 - p) / trials)
    return p, p - CI_Z * err, p + CI_Z * err


def count_collisions(keys_per_lattice: Iterable[Sequence[Tuple[int, int]]]) -> Tuple[int, int]:
    """(submissions, collisions) where a collision re-finds a pair first seen in another lattice."""
    first_seen: Dict[Tuple[int, int], int] = {}
    submissions = collisions = 0
    for lattice, keys in enumerate(keys_per_lattice):
        for key in keys:
            submissions += 1
            origin = first_seen.setdefault(key, lattice)
            if origin != lattice:
                collisions += 1
    return submissions, collisions


def predicted_instances(big_m: int, per_lattice: float) -> float:
    """(M + 2) / mean sr-pairs per lattice, ignoring collisions."""
    return (big_m + 2) / per_lattice if per_lattice > 0 else math.inf


# --- semiprimes ---


@dataclass(frozen=True)
class Semiprime:
    n: int
    p: int
    q: int


def _uniform_below(rng: np.random.Generator, span: int) -> int:
    if span < 1 << 62:
        return int(rng.integers(span))
    nbits = span.bit_length()
    while True:
        value = int.from_bytes(rng.bytes((nbits + 7) // 8), "big") >> (-nbits % 8)
        if value < span:
            return value


def random_prime(bits: int, rng: np.random.Generator) -> int:
    """Uniform odd prime with exactly ``bits`` bits."""
    if bits < 2:
        raise InvalidInputError(f"no odd prime has {bits} bits")
    lo, hi = 1 << (bits - 1), 1 << bits
    while True:
        candidate = lo + _uniform_below(rng, hi - lo)
        if candidate > 2 and is_prime(candidate):
            return candidate


def random_semiprime(bits: int, rng: np.random.Generator) -> Semiprime:
    """N = p * q with p != q of about bits/2 bits each and N of exactly ``bits`` bits."""
    if bits < 8:
        raise InvalidInputError(f"semiprimes below 8 bits are not supported, got {bits}")
    half = bits // 2
    while True:
        p = random_prime(half, rng)
        q = random_prime(bits - half, rng)
        if p != q and (p * q).bit_length() == bits:
            return Semiprime(p * q, min(p, q), max(p, q))


def semiprime_for(seed: int, bits: int, index: int = 0) -> Semiprime:
    return random_semiprime(bits, config.child_rng(seed, config.STREAM_SEMIPRIME, bits, index))


# --- datasets ---


@dataclass
class Dataset:
    name: str
    fields: Tuple[str, ...]
    rows: List[dict] = field(default_factory=list)

    def write_csv(self, handle):
        writer = csv.DictWriter(handle, fieldnames=self.fields, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _cell(row.get(k)) for k in self.fields})


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    datasets: List[Dataset]
    n: Optional[int] = None

    def dataset(self, name: str) -> Dataset:
        for d in self.datasets:
            if d.name == name:
                return d
        raise KeyError(name)


def git_blob_hash(data: bytes) -> str:
    """Content hash in git's blob format."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def build_manifest(result: ExperimentResult, files: Dict[str, bytes]) -> dict:
    settings = result.config.to_dict()
    canonical = json.dumps(settings, sort_keys=True, default=str).encode()
    return {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "experiment": result.config.experiment,
        "seed": result.config.seed,
        "config": settings,
        "input_hash": git_blob_hash(canonical),
        "artifact_choices": ARTIFACT_CHOICES,
        "files": {name: {"sha1": git_blob_hash(data), "bytes": len(data)} for name, data in sorted(files.items())},
    }


def write_experiment(result: ExperimentResult, output_dir: str) -> List[str]:
    """Write one CSV per dataset plus ``<experiment>_manifest.json``; returns the paths written."""
    os.makedirs(output_dir, exist_ok=True)
    written, contents = [], {}
    for dataset in result.datasets:
        path = os.path.join(output_dir, f"{dataset.name}.csv")
        with open(path, "w", newline="", encoding="utf-8") as handle:
            dataset.write_csv(handle)
        with open(path, "rb") as handle:
            contents[os.path.basename(path)] = handle.read()
        written.append(path)
    manifest_path = os.path.join(output_dir, f"{result.config.experiment}_manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(build_manifest(result, contents), handle, indent=2, sort_keys=True)
        handle.write("\n")
    written.append(manifest_path)
    return written


def load_reference_series(handle) -> Tuple[Tuple[str, int, float], ...]:
    """Read published comparison numbers (columns: series, bits, cvp_instances)."""
    rows = []
    for record in csv.DictReader(handle):
        series = record["series"].strip()
        if series not in REFERENCE_SOLVERS:
            raise InvalidInputError(f"unknown reference series {series!r}; expected one of {REFERENCE_SOLVERS}")
        rows.append((series, int(record["bits"]), float(record["cvp_instances"])))
    return tuple(sorted(rows))


# --- per-lattice tasks ---
# Top-level functions so a process pool can pickle them.


def _lattice_rng(seed: int, point: Tuple[int, ...], index: int) -> np.random.Generator:
    return config.child_rng(seed, config.STREAM_LATTICE, *point, index)


def _network_rng(seed: int, point: Tuple[int, ...], index: int) -> np.random.Generator:
    return config.child_rng(seed, config.STREAM_NETWORK, *point, index)


def _map(executor: Optional[Executor], fn: Callable, items: Iterable) -> list:
    if executor is None:
        return [fn(item) for item in items]
    return list(executor.map(fn, items))


@dataclass
class LatticeCensus:
    index: int
    keys: Tuple[Tuple[int, int], ...]


def _census_task(n, m, big_m, c, delta, weight_bound, seed, point, index) -> LatticeCensus:
    instance = prepare_instance(n, m, c, _lattice_rng(seed, point, index), delta, index)
    pairs = enumerate_sr_pairs(instance, FactorBase.of_size(big_m), weight_bound)
    return LatticeCensus(index, tuple((e.u, e.v) for e in pairs))


@dataclass
class RefinementOutcome:
    index: int
    improvable: bool
    optimum: int = 0
    initial: int = 0
    best: int = 0
    first_hit_sweep: int = 0
    success: bool = False
    improvement_percent: float = 0.0


def _refine_task(n, m, c, delta, weight_bound, schedule, seed, point, index) -> RefinementOutcome:
    instance = prepare_instance(n, m, c, _lattice_rng(seed, point, index), delta, index)
    problem = RefinementProblem.from_instance(instance)
    report = enumerate_neighborhood(problem, weight_bound)
    initial = energy(problem, (0,) * m)
    if report.best_distance_sq >= initial:
        return RefinementOutcome(index, improvable=False, initial=initial)
    result = run_refinement(
        problem,
        schedule,
        StoppingCriterion(report.best_distance_sq),
        _network_rng(seed, point, index),
    )
    return RefinementOutcome(
        index=index,
        improvable=True,
        optimum=report.best_distance_sq,
        initial=initial,
        best=result.best_energy,
        first_hit_sweep=result.first_hit_sweep,
        success=result.best_energy <= report.best_distance_sq,
        improvement_percent=result.improvement_percent,
    )


@dataclass
class DistanceCensus:
    index: int
    distances: np.ndarray
    sr_distances: Tuple[np.ndarray, ...]


def _distance_task(n, m, bounds, c, delta, weight_bound, seed, point, index) -> DistanceCensus:
    instance = prepare_instance(n, m, c, _lattice_rng(seed, point, index), delta, index)
    largest = FactorBase.of_size(max(bounds))
    _, entries = neighborhood_census(instance, largest, weight_bound)
    distances = np.sqrt(np.array([float(e.distance_sq) for e in entries]))
    smooth = [e for e in entries if e.is_sr_pair]
    per_bound = []
    for bound in bounds:
        base = FactorBase.of_size(bound)
        if bound == max(bounds):
            hits = smooth
        else:
            # smooth over fewer primes implies smooth over the largest base
            hits = [e for e in smooth if check_sr_pair(e.u, e.v, n, base) is not None]
        per_bound.append(np.sqrt(np.array([float(e.distance_sq) for e in hits])))
    return DistanceCensus(index, distances, tuple(per_bound))


@dataclass
class HarvestOutcome:
    index: int
    found: Tuple[Tuple[int, int], ...]
    census: Tuple[Tuple[int, int], ...]


def _harvest_task(n, m, big_m, c, engine, weight_bound, seed, point, index) -> HarvestOutcome:
    harvest = collect_from_lattice(n, m, big_m, c, engine, _lattice_rng(seed, point, index), lattice_id=index)
    census = enumerate_sr_pairs(harvest.instance, FactorBase.of_size(big_m), weight_bound)
    return HarvestOutcome(index, tuple(p.key for p in harvest.pairs), tuple((e.u, e.v) for e in census))


# --- campaigns ---

COLLISION_FIELDS = (
    "dimension", "collision_rate", "ci_low", "ci_high",
    "lattices", "submissions", "collisions", "big_m", "weight_bound", "n", "seed",
)


def run_collision_experiment(cfg: ExperimentConfig, executor: Optional[Executor] = None) -> ExperimentResult:
    """Collision rate of enumerated sr-pairs for one fixed N across lattice dimensions."""
    n = cfg.n if cfg.n is not None else semiprime_for(cfg.seed, cfg.fixed_bits).n
    lo, hi = cfg.dimensions
    big_m = hi * hi
    dataset = Dataset("fig2a", COLLISION_FIELDS)
    for m in range(lo, hi + 1):
        bound = cfg.census_bound(m)
        task = partial(_census_task, n, m, big_m, cfg.c, cfg.delta, bound, cfg.seed, (cfg.code, m))
        censuses = sorted(_map(executor, task, range(cfg.lattice_count)), key=lambda x: x.index)
        submissions, collisions = count_collisions(x.keys for x in censuses)
        rate, low, high = proportion_ci(collisions, submissions)
        logger.info("fig2a m=%d: %d/%d collisions", m, collisions, submissions)
        dataset.rows.append(
            {
                "dimension": m,
                "collision_rate": rate,
                "ci_low": low,
                "ci_high": high,
                "lattices": len(censuses),
                "submissions": submissions,
                "collisions": collisions,
                "big_m": big_m,
                "weight_bound": bound,
                "n": n,
                "seed": cfg.seed,
            }
        )
    return ExperimentResult(cfg, [dataset], n=n)


MAPPING_TABLE_FIELDS = ("mapping", "bits", "dimension")
MAPPING_FIELDS = (
    "mapping", "bits", "dimension", "big_m", "mean_sr_pairs", "ci_low", "ci_high",
    "lattices", "weight_bound", "n", "seed",
)


def run_mapping_experiment(cfg: ExperimentConfig, executor: Optional[Executor] = None) -> ExperimentResult:
    """Dimension per mapping rule and the mean number of sr-pairs each rule's lattices hold."""
    table = Dataset("fig2b", MAPPING_TABLE_FIELDS)
    census = Dataset("fig2c", MAPPING_FIELDS)
    for which, mapping in enumerate(cfg.mappings):
        for bits in cfg.bit_lengths():
            m = mapping.dimension(bits)
            table.rows.append({"mapping": mapping.label, "bits": bits, "dimension": m})
            n = semiprime_for(cfg.seed, bits).n
            big_m = m * m
            bound = cfg.census_bound(m)
            task = partial(_census_task, n, m, big_m, cfg.c, cfg.delta, bound, cfg.seed, (cfg.code, which, bits))
            counts = [len(x.keys) for x in sorted(_map(executor, task, range(cfg.lattice_count)), key=lambda x: x.index)]
            mean, low, high = mean_ci(counts)
            logger.info("fig2c %s bits=%d m=%d: %.3f sr-pairs per lattice", mapping.label, bits, m, mean)
            census.rows.append(
                {
                    "mapping": mapping.label,
                    "bits": bits,
                    "dimension": m,
                    "big_m": big_m,
                    "mean_sr_pairs": mean,
                    "ci_low": low,
                    "ci_high": high,
                    "lattices": len(counts),
                    "weight_bound": bound,
                    "n": n,
                    "seed": cfg.seed,
                }
            )
    return ExperimentResult(cfg, [table, census])


REFINEMENT_FIELDS = (
    "mapping", "bits", "dimension", "screened", "attempted", "success_rate",
    "mean_sweeps", "sweeps_ci_low", "sweeps_ci_high",
    "mean_improvement_percent", "improvement_ci_low", "improvement_ci_high",
    "weight_bound", "n", "seed",
)


def _screened_outcomes(task, wanted: int, executor: Optional[Executor], batch: int) -> Tuple[List[RefinementOutcome], int]:
    """First ``wanted`` improvable lattices by index, giving up after SCREEN_ATTEMPTS * wanted."""
    kept, index, limit = [], 0, SCREEN_ATTEMPTS * wanted
    while len(kept) < wanted and index < limit:
        span = range(index, min(index + batch, limit))
        for outcome in sorted(_map(executor, task, span), key=lambda x: x.index):
            index = outcome.index + 1
            if outcome.improvable:
                kept.append(outcome)
                if len(kept) == wanted:
                    break
    return kept, index


def run_refinement_experiment(cfg: ExperimentConfig, executor: Optional[Executor] = None) -> ExperimentResult:
    """Sweeps to the enumerated optimum and distance improvement on lattices that can be refined."""
    dataset = Dataset("fig3", REFINEMENT_FIELDS)
    batch = max(1, cfg.batch_size)
    for which, mapping in enumerate(m for m in cfg.mappings if m.rule == "linear"):
        for bits in cfg.bit_lengths():
            m = mapping.dimension(bits)
            n = semiprime_for(cfg.seed, bits).n
            bound = cfg.census_bound(m)
            schedule = Schedule.linear(cfg.refine_sweeps_per_dimension * m, cfg.beta_start, cfg.beta_end)
            task = partial(_refine_task, n, m, cfg.c, cfg.delta, bound, schedule, cfg.seed, (cfg.code, which, bits))
            kept, attempted = _screened_outcomes(task, cfg.lattice_count, executor, batch)
            if len(kept) < cfg.lattice_count:
                logger.warning("fig3 bits=%d: only %d of %d lattices were refinable", bits, len(kept), cfg.lattice_count)
            hits = [o for o in kept if o.success]
            sweeps = mean_ci(o.first_hit_sweep for o in hits)
            improvement = mean_ci(o.improvement_percent for o in kept)
            dataset.rows.append(
                {
                    "mapping": mapping.label,
                    "bits": bits,
                    "dimension": m,
                    "screened": len(kept),
                    "attempted": attempted,
                    "success_rate": len(hits) / len(kept) if kept else 0.0,
                    "mean_sweeps": sweeps[0],
                    "sweeps_ci_low": sweeps[1],
                    "sweeps_ci_high": sweeps[2],
                    "mean_improvement_percent": improvement[0],
                    "improvement_ci_low": improvement[1],
                    "improvement_ci_high": improvement[2],
                    "weight_bound": bound,
                    "n": n,
                    "seed": cfg.seed,
                }
            )
    return ExperimentResult(cfg, [dataset])


HISTOGRAM_FIELDS = (
    "bits", "dimension", "smoothness_bound", "bin", "distance_low", "distance_high",
    "states", "sr_pairs", "sr_rate", "lattices", "weight_bound", "seed",
)


def run_distance_histogram(cfg: ExperimentConfig, executor: Optional[Executor] = None) -> ExperimentResult:
    """Number of sr-pairs by distance to the target, for several smoothness bounds."""
    dataset = Dataset("fig3a", HISTOGRAM_FIELDS)
    for bits in cfg.bit_lengths():
        m = config.dimension_for(bits, cfg.rule, cfg.scale)
        bounds = tuple(sorted({max(1, math.ceil(m**power)) for power in cfg.smoothness_powers}))
        n = semiprime_for(cfg.seed, bits).n
        bound = cfg.census_bound(m)
        task = partial(_distance_task, n, m, bounds, cfg.c, cfg.delta, bound, cfg.seed, (cfg.code, bits))
        censuses = sorted(_map(executor, task, range(cfg.lattice_count)), key=lambda x: x.index)
        every = np.concatenate([x.distances for x in censuses])
        edges = np.histogram_bin_edges(every, bins=cfg.distance_bins)
        states, _ = np.histogram(every, bins=edges)
        for k, smoothness in enumerate(bounds):
            found = np.concatenate([x.sr_distances[k] for x in censuses])
            counts, _ = np.histogram(found, bins=edges)
            for b in range(len(states)):
                dataset.rows.append(
                    {
                        "bits": bits,
                        "dimension": m,
                        "smoothness_bound": smoothness,
                        "bin": b,
                        "distance_low": float(edges[b]),
                        "distance_high": float(edges[b + 1]),
                        "states": int(states[b]),
                        "sr_pairs": int(counts[b]),
                        "sr_rate": float(counts[b]) / states[b] if states[b] else 0.0,
                        "lattices": len(censuses),
                        "weight_bound": bound,
                        "seed": cfg.seed,
                    }
                )
    return ExperimentResult(cfg, [dataset])


FACTORING_FIELDS = (
    "bits", "dimension", "big_m", "lattices",
    "mean_found", "found_ci_low", "found_ci_high",
    "mean_census", "census_ci_low", "census_ci_high", "recovery_fraction",
    "pred_enum", "pred_pc",
    "semiprimes", "factored", "trial_division",
    "mean_cvp_instances", "cvp_ci_low", "cvp_ci_high",
    "mean_collision_rate", "collision_ci_low", "collision_ci_high",
    "weight_bound", "seed",
)
SERIES_FIELDS = ("series", "bits", "cvp_instances", "ci_low", "ci_high")
RUN_FIELDS = (
    "bits", "index", "n", "p", "q", "status", "method",
    "lattices_consumed", "relations", "collisions", "collision_rate", "tau_trials", "seed",
)


def _factor_seed(seed: int, bits: int, index: int) -> int:
    return int(config.seed_sequence(seed, config.STREAM_SEMIPRIME, bits, index).generate_state(1)[0])


def _factor_run(n: int, params: CampaignParams, seed: int, cfg: ExperimentConfig, executor) -> FactorReport:
    try:
        return factor(
            n,
            params,
            seed=seed,
            executor=executor,
            batch_size=cfg.batch_size,
            tau_trial_cap=cfg.tau_trial_cap,
        )
    except BudgetExhaustedError as exc:
        logger.warning("factoring %d failed: %s", n, exc)
        return exc.report


def run_factoring_experiment(cfg: ExperimentConfig, executor: Optional[Executor] = None) -> ExperimentResult:
    """sr-pairs per lattice (found and enumerated), CVP instances to factor and collision rate."""
    summary = Dataset("fig4", FACTORING_FIELDS)
    series = Dataset("fig4_series", SERIES_FIELDS)
    runs = Dataset("fig4_runs", RUN_FIELDS)
    for bits in cfg.bit_lengths():
        m = config.dimension_for(bits, cfg.rule, cfg.scale)
        big_m = m * m
        bound = cfg.census_bound(m)
        n = semiprime_for(cfg.seed, bits).n
        task = partial(_harvest_task, n, m, big_m, cfg.c, cfg.engine, bound, cfg.seed, (cfg.code, bits))
        outcomes = sorted(_map(executor, task, range(cfg.lattice_count)), key=lambda x: x.index)
        found = mean_ci(len(o.found) for o in outcomes)
        available = mean_ci(len(o.census) for o in outcomes)
        fractions = [len(set(o.found) & set(o.census)) / len(o.census) for o in outcomes if o.census]
        recovery = float(np.mean(fractions)) if fractions else math.nan

        params = CampaignParams(m=m, big_m=big_m, c=cfg.c, budget_factor=cfg.budget_factor, engine=cfg.engine)
        instances, rates = [], []
        factored = trial_division = 0
        for j in range(cfg.semiprime_count):
            target = semiprime_for(cfg.seed, bits, j)
            run_seed = _factor_seed(cfg.seed, bits, j)
            report = _factor_run(target.n, params, run_seed, cfg, executor)
            if report.factors is not None:
                factored += 1
            if report.method == "trial-division":
                trial_division += 1
            else:
                instances.append(report.lattices_consumed)
                rates.append(report.collision_rate)
            p, q = report.factors if report.factors else (None, None)
            runs.rows.append(
                {
                    "bits": bits,
                    "index": j,
                    "n": target.n,
                    "p": p,
                    "q": q,
                    "status": report.status,
                    "method": report.method,
                    "lattices_consumed": report.lattices_consumed,
                    "relations": report.relations_used,
                    "collisions": report.collisions,
                    "collision_rate": report.collision_rate,
                    "tau_trials": report.tau_trials,
                    "seed": run_seed,
                }
            )
        cvp = mean_ci(instances)
        collision = mean_ci(rates)
        pred_enum = predicted_instances(big_m, available[0])
        pred_pc = predicted_instances(big_m, found[0])
        logger.info("fig4 bits=%d m=%d: %d/%d factored, %.1f CVP instances", bits, m, factored, cfg.semiprime_count, cvp[0])
        summary.rows.append(
            {
                "bits": bits,
                "dimension": m,
                "big_m": big_m,
                "lattices": len(outcomes),
                "mean_found": found[0],
                "found_ci_low": found[1],
                "found_ci_high": found[2],
                "mean_census": available[0],
                "census_ci_low": available[1],
                "census_ci_high": available[2],
                "recovery_fraction": recovery,
                "pred_enum": pred_enum,
                "pred_pc": pred_pc,
                "semiprimes": cfg.semiprime_count,
                "factored": factored,
                "trial_division": trial_division,
                "mean_cvp_instances": cvp[0],
                "cvp_ci_low": cvp[1],
                "cvp_ci_high": cvp[2],
                "mean_collision_rate": collision[0],
                "collision_ci_low": collision[1],
                "collision_ci_high": collision[2],
                "weight_bound": bound,
                "seed": cfg.seed,
            }
        )
        series.rows.append({"series": "P-Computing", "bits": bits, "cvp_instances": cvp[0], "ci_low": cvp[1], "ci_high": cvp[2]})
        series.rows.append({"series": "Pred. PC", "bits": bits, "cvp_instances": pred_pc})
        series.rows.append({"series": "Pred. Enum", "bits": bits, "cvp_instances": pred_enum})

    for name, bits, value in cfg.reference:
        series.rows.append({"series": name, "bits": bits, "cvp_instances": value})
    return ExperimentResult(cfg, [summary, series, runs])


RUNNERS: Dict[str, Callable[[ExperimentConfig, Optional[Executor]], ExperimentResult]] = {
    "fig2a": run_collision_experiment,
    "fig2b": run_mapping_experiment,
    "fig3": run_refinement_experiment,
    "fig3a": run_distance_histogram,
    "fig4": run_factoring_experiment,
}


def run_experiment(cfg: ExperimentConfig, executor: Optional[Executor] = None) -> ExperimentResult:
    logger.info("running %s with seed %d", cfg.experiment, cfg.seed)
    return RUNNERS[cfg.experiment](cfg, executor)
