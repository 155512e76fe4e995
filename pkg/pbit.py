"""
Software p-bit network for CVP refinement.

The network has one p-bit per reduced basis vector. State s selects the
lattice point b_op + sum s_i k_i d_i, and the energy of s is its squared
distance to the target. Each bias is computed directly from that energy
(a virtually connected Boltzmann machine), so every p-bit neighbours every
other one and updates are strictly sequential.

Indices are 0-based.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from errors import InvalidInputError
from lattice import LatticeInstance, dot

logger = logging.getLogger(__name__)

DEFAULT_COLLECTION_BETA = 0.66
DEFAULT_BETA_START = 0.05
DEFAULT_BETA_END = 5.0
SATURATION = 40.0

UPDATE_ORDERS = ("sweep", "random")

State = Tuple[int, ...]
Sink = Callable[[State, int, int], None]


@dataclass(frozen=True)
class RefinementProblem:
    """Target, Babai point, reduced basis and directions of one neighbourhood."""

    target: Tuple[int, ...]
    b_op: Tuple[int, ...]
    basis_vectors: Tuple[Tuple[int, ...], ...]
    directions: Tuple[int, ...]

    def __post_init__(self):
        width = len(self.target)
        if len(self.b_op) != width or any(len(d) != width for d in self.basis_vectors):
            raise InvalidInputError("all vectors must share the target's ambient dimension")
        if len(self.directions) != len(self.basis_vectors):
            raise InvalidInputError("need one direction per basis vector")
        if any(k not in (-1, 0, 1) for k in self.directions):
            raise InvalidInputError("directions must be -1, 0 or +1")

    @classmethod
    def from_instance(cls, instance: LatticeInstance) -> "RefinementProblem":
        return cls(
            target=tuple(int(x) for x in instance.lattice.target),
            b_op=instance.babai.b_op,
            basis_vectors=instance.reduced.vectors,
            directions=instance.babai.directions,
        )

    @property
    def size(self) -> int:
        return len(self.basis_vectors)

    @cached_property
    def steps(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(tuple(k * x for x in d) for k, d in zip(self.directions, self.basis_vectors))

    def step(self, i: int) -> Tuple[int, ...]:
        """k_i * d_i, the move p-bit i contributes when it is 1."""
        return self.steps[i]

    def residual(self, s: Sequence[int]) -> List[int]:
        """t - b_op - sum s_j k_j d_j"""
        r = [t - b for t, b in zip(self.target, self.b_op)]
        for j, s_j in enumerate(s):
            if s_j and self.directions[j]:
                r = [a - x for a, x in zip(r, self.step(j))]
        return r

    def point(self, s: Sequence[int]) -> Tuple[int, ...]:
        p = list(self.b_op)
        for j, s_j in enumerate(s):
            if s_j and self.directions[j]:
                p = [a + x for a, x in zip(p, self.step(j))]
        return tuple(p)

    @cached_property
    def energy_scale(self) -> float:
        """Mean |gap| of the single flips away from b_op, at least 1."""
        zeros = [0] * self.size
        residual = self.residual(zeros)
        gaps = [abs(energy_gap(self, zeros, i, residual)) for i in range(self.size) if self.directions[i]]
        if not gaps:
            return 1.0
        return max(1.0, float(np.mean([float(g) for g in gaps])))


def _check_state(problem: RefinementProblem, s: Sequence[int]):
    if len(s) != problem.size:
        raise InvalidInputError(f"state has {len(s)} bits, problem has {problem.size}")


def energy(problem: RefinementProblem, s: Sequence[int]) -> int:
    """E(s) = |t - (b_op + sum s_i k_i d_i)|^2, exact."""
    _check_state(problem, s)
    r = problem.residual(s)
    return dot(r, r)


def energy_gap(problem: RefinementProblem, s: Sequence[int], i: int, residual=None) -> int:
    """E(s | s_i = 0) - E(s | s_i = 1) from the cached residual.

    v0 is the residual with bit i cleared and v1 = v0 - k_i d_i, so the gap
    is 2 <v0, k_i d_i> - |d_i|^2 (zero when k_i = 0).
    """
    if not 0 <= i < problem.size:
        raise InvalidInputError(f"p-bit index {i} out of range")
    k = problem.directions[i]
    if k == 0:
        return 0
    if residual is None:
        residual = problem.residual(s)
    step = problem.step(i)
    v0 = [r + x for r, x in zip(residual, step)] if s[i] else residual
    return 2 * dot(v0, step) - dot(step, step)


def scale_gap(beta: float, gap: int) -> float:
    try:
        return beta * float(gap)
    except OverflowError:
        return math.copysign(math.inf, gap)


def calculate_bias(problem: RefinementProblem, s: Sequence[int], i: int, beta: float, residual=None) -> float:
    """beta * (E(s | s_i = 0) - E(s | s_i = 1))"""
    return scale_gap(beta, energy_gap(problem, s, i, residual))


def logistic(bias: float) -> float:
    if bias > SATURATION:
        return 1.0
    if bias < -SATURATION:
        return 0.0
    return float(expit(bias))


def sample_pbit(bias: float, rng: np.random.Generator) -> int:
    """1 with probability 1 / (1 + exp(-bias))."""
    return int(rng.random() < logistic(bias))


@dataclass
class Schedule:
    kind: str
    beta_start: float
    beta_end: float
    total_sweeps: int

    def __post_init__(self):
        if self.kind not in ("constant", "linear"):
            raise InvalidInputError(f"unknown schedule kind {self.kind!r}")
        if self.beta_start <= 0 or self.beta_end <= 0:
            raise InvalidInputError("beta must be positive")
        if self.total_sweeps < 0:
            raise InvalidInputError("sweep budget cannot be negative")

    @classmethod
    def constant(cls, beta: float, sweeps: int) -> "Schedule":
        return cls("constant", beta, beta, sweeps)

    @classmethod
    def linear(cls, sweeps: int, beta_start=DEFAULT_BETA_START, beta_end=DEFAULT_BETA_END) -> "Schedule":
        return cls("linear", beta_start, beta_end, sweeps)

    def beta_at(self, sweep: int) -> float:
        """Beta for 0-based sweep index ``sweep``."""
        if self.kind == "constant" or self.total_sweeps <= 1:
            return self.beta_start
        frac = min(max(sweep, 0), self.total_sweeps - 1) / (self.total_sweeps - 1)
        return self.beta_start + (self.beta_end - self.beta_start) * frac


@dataclass
class PBitNetwork:
    """Mutable network state. One mutator at a time."""

    problem: RefinementProblem
    states: List[int]
    biases: List[float]
    beta: float
    rng: np.random.Generator
    residual: List[int]
    current_energy: int
    update_order: str = "sweep"
    check_invariants: bool = False
    energy_unit: float = 1.0

    @classmethod
    def start(
        cls,
        problem: RefinementProblem,
        beta: float,
        rng: np.random.Generator,
        update_order: str = "sweep",
        check_invariants: bool = False,
        energy_unit: float = 1.0,
    ) -> "PBitNetwork":
        if beta <= 0:
            raise InvalidInputError("beta must be positive")
        if energy_unit <= 0:
            raise InvalidInputError("energy unit must be positive")
        if update_order not in UPDATE_ORDERS:
            raise InvalidInputError(f"unknown update order {update_order!r}")
        states = [0] * problem.size
        residual = problem.residual(states)
        return cls(
            problem=problem,
            states=states,
            biases=[0.0] * problem.size,
            beta=beta,
            rng=rng,
            residual=residual,
            current_energy=dot(residual, residual),
            update_order=update_order,
            check_invariants=check_invariants,
            energy_unit=float(energy_unit),
        )

    @property
    def state(self) -> State:
        return tuple(self.states)

    @property
    def effective_beta(self) -> float:
        """beta per unit of raw energy."""
        return self.beta / self.energy_unit

    def set_bit(self, i: int, value: int, gap: Optional[int] = None):
        """Set p-bit i, keeping the residual and energy caches exact."""
        if self.states[i] == value:
            return
        if gap is None:
            gap = energy_gap(self.problem, self.states, i, self.residual)
        step = self.problem.step(i)
        if value:
            self.residual = [r - x for r, x in zip(self.residual, step)]
            self.current_energy -= gap
        else:
            self.residual = [r + x for r, x in zip(self.residual, step)]
            self.current_energy += gap
        self.states[i] = value
        if self.check_invariants:
            self.verify()

    def verify(self):
        expected = self.problem.residual(self.states)
        if expected != self.residual:
            raise AssertionError("cached residual diverged from its definition")
        if dot(expected, expected) != self.current_energy:
            raise AssertionError("cached energy diverged from its definition")

    def update_bit(self, i: int) -> int:
        """Recompute bias i from the current state and resample the bit."""
        gap = energy_gap(self.problem, self.states, i, self.residual)
        self.biases[i] = scale_gap(self.effective_beta, gap)
        self.set_bit(i, sample_pbit(self.biases[i], self.rng), gap)
        return self.states[i]

    def select_and_update(self) -> int:
        """One step of the random-order loop.

        Picks a p-bit uniformly, resamples every other p-bit from its stored
        bias, then refreshes the stored bias of the picked one.
        """
        m = self.problem.size
        i = int(self.rng.integers(m))
        for j in range(m):
            if j != i:
                self.set_bit(j, sample_pbit(self.biases[j], self.rng))
        self.biases[i] = calculate_bias(self.problem, self.states, i, self.effective_beta, self.residual)
        return i


def sweep(network: PBitNetwork, problem: Optional[RefinementProblem] = None, emit: Optional[Callable[[], None]] = None):
    """One iteration: m sequential updates (sweep order) or m random selections."""
    if problem is not None and problem is not network.problem:
        raise InvalidInputError("network was built for a different problem")
    m = network.problem.size
    for i in range(m):
        if network.update_order == "sweep":
            network.update_bit(i)
        else:
            network.select_and_update()
        if emit is not None:
            emit()
    return network


@dataclass(frozen=True)
class TraceRow:
    sweep_index: int
    best_energy: int
    current_energy: int
    beta: float


@dataclass
class StoppingCriterion:
    """Stop after the schedule's sweep budget, or earlier once ``target_energy`` is reached."""

    target_energy: Optional[int] = None

    def reached(self, best_energy: int) -> bool:
        return self.target_energy is not None and best_energy <= self.target_energy


@dataclass
class RefinementResult:
    best_state: State
    best_energy: int
    initial_energy: int
    first_hit_sweep: int
    sweeps_run: int
    trace: List[TraceRow] = field(default_factory=list)
    energy_unit: float = 1.0

    @property
    def improvement_percent(self) -> float:
        """100 * (|b_op - t| - |best - t|) / |b_op - t|"""
        if self.initial_energy == 0:
            return 0.0
        before = math.sqrt(self.initial_energy)
        return 100.0 * (before - math.sqrt(self.best_energy)) / before


def run_refinement(
    problem: RefinementProblem,
    schedule: Schedule,
    stop: Optional[StoppingCriterion] = None,
    rng: Optional[np.random.Generator] = None,
    update_order: str = "sweep",
    energy_unit: Optional[float] = None,
) -> RefinementResult:
    """Anneal towards the lowest-energy neighbour of b_op.

    Every sampled state is a candidate for the best; ``first_hit_sweep`` is the
    1-based sweep in which the final best energy was first seen (0 if b_op is best).
    Schedule betas are in units of ``energy_unit``, which defaults to
    ``problem.energy_scale``; pass 1.0 for raw energies.
    """
    stop = stop or StoppingCriterion()
    rng = rng if rng is not None else np.random.default_rng()
    unit = problem.energy_scale if energy_unit is None else energy_unit
    network = PBitNetwork.start(problem, schedule.beta_at(0), rng, update_order, energy_unit=unit)
    best_state, best_energy = network.state, network.current_energy
    initial_energy = best_energy
    first_hit = 0
    trace = []
    sweeps_run = 0
    current_sweep = 0

    def observe():
        nonlocal best_state, best_energy, first_hit
        if network.current_energy < best_energy:
            best_state, best_energy = network.state, network.current_energy
            first_hit = current_sweep

    for index in range(schedule.total_sweeps):
        if stop.reached(best_energy):
            break
        current_sweep = index + 1
        network.beta = schedule.beta_at(index)
        sweep(network, emit=observe)
        sweeps_run = current_sweep
        trace.append(TraceRow(current_sweep, best_energy, network.current_energy, network.beta))

    logger.debug(
        "refinement: m=%d sweeps=%d initial=%d best=%d first_hit=%d",
        problem.size, sweeps_run, initial_energy, best_energy, first_hit,
    )
    return RefinementResult(best_state, best_energy, initial_energy, first_hit, sweeps_run, trace, unit)


@dataclass
class CollectionStats:
    emissions: int
    sweeps: int
    distinct_states: int
    best_energy: int


def run_collection(
    problem: RefinementProblem,
    beta: float = DEFAULT_COLLECTION_BETA,
    sweeps: int = 1,
    sink: Optional[Sink] = None,
    rng: Optional[np.random.Generator] = None,
    update_order: str = "sweep",
    energy_unit: Optional[float] = None,
) -> CollectionStats:
    """Explore at fixed beta, emitting the global state after every p-bit update.

    ``sink(state, sweep_index, energy)`` is called on the sampling thread and
    must only record the candidate; checking happens elsewhere. ``beta`` is in
    units of ``energy_unit`` (default ``problem.energy_scale``).
    """
    if sweeps < 1:
        raise InvalidInputError("collection needs at least one sweep")
    rng = rng if rng is not None else np.random.default_rng()
    unit = problem.energy_scale if energy_unit is None else energy_unit
    network = PBitNetwork.start(problem, beta, rng, update_order, energy_unit=unit)
    seen = set()
    emissions = 0
    best = network.current_energy
    current_sweep = 0

    def emit():
        nonlocal emissions, best
        state = network.state
        emissions += 1
        seen.add(state)
        best = min(best, network.current_energy)
        if sink is not None:
            sink(state, current_sweep, network.current_energy)

    for index in range(sweeps):
        current_sweep = index + 1
        sweep(network, emit=emit)

    return CollectionStats(emissions=emissions, sweeps=sweeps, distinct_states=len(seen), best_energy=best)


TRACE_FIELDS = ("sweep_index", "best_energy", "current_energy", "beta")


def write_trace_csv(rows: Sequence[TraceRow], handle):
    writer = csv.writer(handle)
    writer.writerow(TRACE_FIELDS)
    for row in rows:
        writer.writerow([row.sweep_index, row.best_energy, row.current_energy, f"{row.beta:.6g}"])
