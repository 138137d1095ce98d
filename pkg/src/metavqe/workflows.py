"""Experiment algorithms over a parametrized Hamiltonian family.

Four ways to estimate the ground-state energy profile E(x) over a sweep of
one Hamiltonian parameter:

* meta:     train the encoding ansatz once on the summed loss over the
            training grid, then just bind each test point.
* ga:       same training, but with a meta-independent ansatz of equal
            depth, so one fixed state serves every point.
* vqe:      an independent minimization per test point (zeros or seeded
            random start).
* opt-meta / opt-ga: an independent minimization per test point warm-started
            from the trained meta/ga parameters.

Per-point minimizations are independent, so they can run on a process pool;
results are aggregated in point order, making the profile identical for any
worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .circuit import Circuit, build_ga_circuit, build_meta_circuit
from .exact import ground_state
from .gradient import CircuitExpectation
from .optimizer import (
    GRADIENT_CONVERGED,
    OptimizerConfig,
    OptTrace,
    minimize,
    random_init,
)
from .pauli import HamiltonianFamily, PauliSum
from .rng import SplitMix64, derive_seed

REL_ERR_GUARD = 1e-6  # |exact| below this reports absolute error, flagged

# Scale of the symmetry-breaking jitter used when a training start point is
# stationary (see _train).
_ESCAPE_SCALE = 0.2


@dataclass(frozen=True)
class TrainingGrid:
    """Sweep values for one named Hamiltonian parameter, others held fixed."""

    symbol: str
    points: tuple[float, ...]
    constants: tuple[tuple[str, float], ...] = ()

    def __init__(self, symbol: str, points: Sequence[float], constants: Mapping[str, float] = ()):
        points = tuple(float(p) for p in points)
        if not points:
            raise ValueError("grid needs at least one point")
        if not all(math.isfinite(p) for p in points):
            raise ValueError("grid points must be finite")
        if any(a > b for a, b in zip(points, points[1:])):
            raise ValueError("grid points must be sorted ascending")
        constants = tuple(sorted(dict(constants).items()))
        if any(name == symbol for name, _ in constants):
            raise ValueError(f"sweep symbol {symbol!r} also listed as a constant")
        object.__setattr__(self, "symbol", symbol)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "constants", constants)

    def bindings(self, point: float) -> dict[str, float]:
        out = dict(self.constants)
        out[self.symbol] = float(point)
        return out

    def family_values(self, family: HamiltonianFamily, point: float) -> list[float]:
        bindings = self.bindings(point)
        missing = [n for n in family.parameter_names if n not in bindings]
        if missing:
            raise ValueError(f"no value for family parameters: {', '.join(missing)}")
        return [bindings[name] for name in family.parameter_names]

    def hamiltonian(self, family: HamiltonianFamily, point: float) -> PauliSum:
        return family.build(self.family_values(family, point))


def equispaced(start: float, stop: float, count: int) -> list[float]:
    """Inclusive uniform grid, computed point-by-point to avoid drift."""
    if count < 1:
        raise ValueError(f"need at least one point, got {count}")
    if count == 1:
        return [float(start)]
    return [start + i * (stop - start) / (count - 1) for i in range(count)]


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


class MetaLoss:
    """Summed expectation over the training grid, with its exact gradient."""

    def __init__(self, circuit: Circuit, family: HamiltonianFamily, grid: TrainingGrid):
        self.size = circuit.registry.size
        self._problems: list[tuple[CircuitExpectation, dict[str, float]]] = []
        compiled = None
        for point in grid.points:
            problem = CircuitExpectation(
                circuit, grid.hamiltonian(family, point), compiled=compiled
            )
            compiled = problem.compiled
            self._problems.append((problem, grid.bindings(point)))

    def __call__(self, params: np.ndarray) -> tuple[float, np.ndarray]:
        total = 0.0
        grad = np.zeros(self.size, dtype=np.float64)
        for problem, meta in self._problems:
            result = problem.value_and_gradient(meta, params)
            total += result.value
            grad += result.gradient
        return total, grad

    def value(self, params: np.ndarray) -> float:
        return sum(problem.value(meta, params) for problem, meta in self._problems)


def meta_loss(
    circuit: Circuit,
    family: HamiltonianFamily,
    grid: TrainingGrid,
    params: Sequence[float],
) -> tuple[float, np.ndarray]:
    """Loss value and gradient at one parameter vector."""
    return MetaLoss(circuit, family, grid)(np.asarray(params, dtype=np.float64))


@dataclass
class TrainResult:
    algorithm: str
    circuit: Circuit
    parameters: np.ndarray
    final_loss: float
    trace: OptTrace
    grid: TrainingGrid
    nqubits: int
    l1: int
    l2: int
    encoding: str
    seed: int

    def to_json(self, config_snapshot: Mapping[str, object] | None = None) -> str:
        registry = self.circuit.registry
        doc = {
            "algorithm": self.algorithm,
            "n": self.nqubits,
            "l1": self.l1,
            "l2": self.l2,
            "encoding": self.encoding,
            "seed": self.seed,
            "final_loss": self.final_loss,
            "termination": self.trace.termination,
            "iterations": self.trace.iterations,
            "grid": {
                "symbol": self.grid.symbol,
                "points": list(self.grid.points),
                "constants": dict(self.grid.constants),
            },
            "parameters": {
                name: float(self.parameters[i]) for i, name in enumerate(registry.names)
            },
            "config": dict(config_snapshot) if config_snapshot is not None else None,
        }
        return json.dumps(doc, indent=2)


@dataclass(frozen=True)
class _TrainTask:
    circuit: Circuit
    family: HamiltonianFamily
    grid: TrainingGrid
    config: OptimizerConfig
    x0: np.ndarray


def _train_one(task: _TrainTask):
    loss = MetaLoss(task.circuit, task.family, task.grid)
    return minimize(loss, task.x0, task.config)


def _jitter(config: OptimizerConfig, size: int, index: int) -> np.ndarray:
    stream = SplitMix64(derive_seed(config.rng_seed, 0x657363, index))
    return stream.uniform(-_ESCAPE_SCALE, _ESCAPE_SCALE, size)


def _train(
    circuit: Circuit,
    family: HamiltonianFamily,
    grid: TrainingGrid,
    config: OptimizerConfig,
    algorithm: str,
    nqubits: int,
    l1: int,
    l2: int,
    encoding: str,
    restarts: int = 1,
    workers: int = 1,
) -> TrainResult:
    """Minimize the summed loss; best of `restarts` seeded start points.

    The first start is always the registry's defaults (all angles zero for
    the linear encoding); the remaining starts add small seeded jitters.
    Computational-basis start points can be exact stationary points of the
    loss for XX+YY-type Hamiltonians: every parameter-shift pair cancels and
    a gradient-based minimizer cannot leave them. If the defaults run
    terminates on the spot that way and no other start was requested, one
    jittered retry is added so training cannot silently do nothing.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    size = circuit.registry.size
    x0 = circuit.registry.initial_values()
    starts = [x0] + [x0 + _jitter(config, size, k) for k in range(1, restarts)]
    tasks = [_TrainTask(circuit, family, grid, config, start) for start in starts]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_train_one, tasks))
    else:
        runs = [_train_one(t) for t in tasks]

    best_x, trace = runs[0]
    for x, tr in runs[1:]:
        if tr.final_objective < trace.final_objective:
            best_x, trace = x, tr

    stuck_at_start = (
        trace.termination == GRADIENT_CONVERGED
        and trace.iterations == 0
        and size > 0
    )
    if stuck_at_start:
        retry_x, retry_trace = _train_one(
            _TrainTask(circuit, family, grid, config, x0 + _jitter(config, size, restarts))
        )
        if retry_trace.final_objective < trace.final_objective:
            best_x, trace = retry_x, retry_trace
    return TrainResult(
        algorithm=algorithm,
        circuit=circuit,
        parameters=best_x,
        final_loss=trace.final_objective,
        trace=trace,
        grid=grid,
        nqubits=nqubits,
        l1=l1,
        l2=l2,
        encoding=encoding,
        seed=config.rng_seed,
    )


def train_meta_vqe(
    family: HamiltonianFamily,
    grid: TrainingGrid,
    n: int,
    l1: int,
    l2: int,
    config: OptimizerConfig = OptimizerConfig(),
    encoding: str = "linear",
    restarts: int = 1,
    workers: int = 1,
) -> TrainResult:
    """Train the encoding ansatz once over the whole training grid."""
    if l1 < 1:
        raise ValueError("meta training requires at least one encoding layer")
    circuit = build_meta_circuit(n, l1, l2, grid.symbol, encoding)
    return _train(circuit, family, grid, config, "meta", n, l1, l2, encoding, restarts, workers)


def train_ga_vqe(
    family: HamiltonianFamily,
    grid: TrainingGrid,
    n: int,
    l1: int,
    l2: int,
    config: OptimizerConfig = OptimizerConfig(),
    restarts: int = 1,
    workers: int = 1,
) -> TrainResult:
    """Train the meta-independent ansatz of equal depth on the same loss."""
    circuit = build_ga_circuit(n, l1 + l2)
    return _train(circuit, family, grid, config, "ga", n, l1, l2, "none", restarts, workers)


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProfilePoint:
    meta_value: float
    energy: float
    exact: float
    abs_err: float
    rel_err: float
    rel_is_abs: bool  # |exact| < REL_ERR_GUARD: rel_err column holds abs_err
    termination: str


@dataclass
class EnergyProfile:
    algorithm: str
    nqubits: int
    l1: int
    l2: int
    seed: int
    points: list[ProfilePoint] = field(default_factory=list)
    # Per-point minimizer statistics; filled by run_vqe_per_point only.
    minimizer_stats: list["_PointOutcome"] | None = None

    CSV_HEADER = "meta_value,energy,exact,abs_err,rel_err,algorithm,n,L1,L2,seed,termination"

    @property
    def meta_values(self) -> np.ndarray:
        return np.array([p.meta_value for p in self.points])

    @property
    def energies(self) -> np.ndarray:
        return np.array([p.energy for p in self.points])

    @property
    def exact_energies(self) -> np.ndarray:
        return np.array([p.exact for p in self.points])

    @property
    def abs_errors(self) -> np.ndarray:
        return np.array([p.abs_err for p in self.points])

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for p in self.points:
            lines.append(
                f"{p.meta_value:.12g},{p.energy:.12g},{p.exact:.12g},"
                f"{p.abs_err:.12g},{p.rel_err:.12g},{self.algorithm},"
                f"{self.nqubits},{self.l1},{self.l2},{self.seed},{p.termination}"
            )
        return "\n".join(lines) + "\n"

    def summary(self) -> dict[str, float | int]:
        abs_err = self.abs_errors
        rel_err = np.array([p.rel_err for p in self.points])
        return {
            "median_abs_err": float(np.median(abs_err)),
            "max_abs_err": float(np.max(abs_err)),
            "median_rel_err": float(np.median(rel_err)),
            "max_rel_err": float(np.max(rel_err)),
            "rel_err_guarded_points": int(sum(p.rel_is_abs for p in self.points)),
        }


def _make_point(meta_value: float, energy: float, exact: float, termination: str) -> ProfilePoint:
    abs_err = abs(energy - exact)
    if abs(exact) < REL_ERR_GUARD:
        return ProfilePoint(meta_value, energy, exact, abs_err, abs_err, True, termination)
    return ProfilePoint(
        meta_value, energy, exact, abs_err, abs_err / abs(exact), False, termination
    )


def exact_energies(
    family: HamiltonianFamily, grid: TrainingGrid, seed: int = 0
) -> list[float]:
    """Oracle ground energy at every grid point."""
    return [ground_state(grid.hamiltonian(family, p), seed=seed).energy for p in grid.points]


def exact_profile(
    family: HamiltonianFamily,
    grid: TrainingGrid,
    nqubits: int,
    l1: int = 0,
    l2: int = 0,
    seed: int = 0,
) -> EnergyProfile:
    """The oracle sweep itself, in profile form (zero errors by definition)."""
    profile = EnergyProfile("exact", nqubits, l1, l2, seed)
    for point, energy in zip(grid.points, exact_energies(family, grid, seed)):
        profile.points.append(_make_point(point, energy, energy, "none"))
    return profile


def evaluate_profile(
    result: TrainResult,
    family: HamiltonianFamily,
    test_points: Sequence[float],
    exact: Sequence[float] | None = None,
) -> EnergyProfile:
    """Bind each test point into the trained circuit and score it."""
    grid = TrainingGrid(result.grid.symbol, test_points, dict(result.grid.constants))
    if exact is None:
        exact = exact_energies(family, grid, seed=result.seed)
    profile = EnergyProfile(result.algorithm, result.nqubits, result.l1, result.l2, result.seed)
    problem = None
    for point, exact_e in zip(grid.points, exact):
        problem = CircuitExpectation(
            result.circuit,
            grid.hamiltonian(family, point),
            compiled=problem.compiled if problem is not None else None,
        )
        energy = problem.value(grid.bindings(point), result.parameters)
        profile.points.append(_make_point(point, energy, exact_e, result.trace.termination))
    return profile


# ---------------------------------------------------------------------------
# per-point minimization (vqe / opt-meta / opt-ga)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomStart:
    """Seeded uniform(-pi, pi) initialization, one stream per point/restart."""

    seed: int


@dataclass(frozen=True)
class WarmStart:
    """Start every point from a trained parameter vector."""

    circuit: Circuit
    parameters: np.ndarray

    @classmethod
    def from_result(cls, result: TrainResult) -> "WarmStart":
        return cls(result.circuit, result.parameters)


@dataclass(frozen=True)
class _PointTask:
    circuit: Circuit
    hamiltonian: PauliSum
    meta: dict[str, float]
    starts: tuple[np.ndarray, ...]
    config: OptimizerConfig
    escape_seed: int


def _minimize_point(task: _PointTask) -> "_PointOutcome":
    problem = CircuitExpectation(task.circuit, task.hamiltonian)

    def objective(params: np.ndarray) -> tuple[float, np.ndarray]:
        result = problem.value_and_gradient(task.meta, params)
        return result.value, result.gradient

    best: _PointOutcome | None = None
    for index, x0 in enumerate(task.starts):
        _, trace = minimize(objective, x0, task.config)
        if (
            trace.termination == GRADIENT_CONVERGED
            and trace.iterations == 0
            and x0.size > 0
        ):
            # Stationary start point (see _train); retry once from a seeded
            # jitter and keep whichever end point is lower.
            stream = SplitMix64(derive_seed(task.escape_seed, index, 0x657363))
            retry = x0 + stream.uniform(-_ESCAPE_SCALE, _ESCAPE_SCALE, x0.size)
            _, retry_trace = minimize(objective, retry, task.config)
            if retry_trace.final_objective < trace.final_objective:
                trace = retry_trace
        outcome = _PointOutcome(
            trace.final_objective,
            trace.termination,
            trace.iterations,
            trace.records[-1].grad_norm,
        )
        if best is None or outcome.energy < best.energy:
            best = outcome
    return best


@dataclass(frozen=True)
class _PointOutcome:
    energy: float
    termination: str
    iterations: int
    grad_norm: float


def run_vqe_per_point(
    family: HamiltonianFamily,
    grid: TrainingGrid,
    n: int,
    l1: int,
    l2: int,
    init: str | RandomStart | WarmStart,
    config: OptimizerConfig = OptimizerConfig(),
    restarts: int = 1,
    workers: int = 1,
    exact: Sequence[float] | None = None,
    algorithm: str | None = None,
) -> EnergyProfile:
    """One independent minimization per grid point.

    `init` is "zeros", a RandomStart, or a WarmStart. Zeros/random runs use
    the meta-independent ansatz with l1+l2 layers; a warm start reuses the
    trained circuit with the sweep symbol bound per point. Per-point
    failures are recorded in the profile, not raised: the best-seen energy
    is always kept.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    if isinstance(init, WarmStart):
        circuit = init.circuit
        x0 = np.asarray(init.parameters, dtype=np.float64)
        if x0.shape != (circuit.registry.size,):
            raise ValueError(
                f"warm-start vector has {x0.shape[0] if x0.ndim else 'scalar'} entries, "
                f"circuit registry has {circuit.registry.size}"
            )
        seed = config.rng_seed
        tag = algorithm or "opt-meta"
    else:
        circuit = build_ga_circuit(n, l1 + l2)
        seed = init.seed if isinstance(init, RandomStart) else config.rng_seed
        tag = algorithm or "vqe"

    tasks = []
    for index, point in enumerate(grid.points):
        if isinstance(init, WarmStart):
            starts = (x0.copy(),)
        elif isinstance(init, RandomStart):
            starts = tuple(
                random_init(circuit.registry.size, derive_seed(init.seed, index, r))
                for r in range(restarts)
            )
        elif init == "zeros":
            starts = (np.zeros(circuit.registry.size),)
        else:
            raise ValueError(f"unknown init mode {init!r}")
        tasks.append(
            _PointTask(
                circuit,
                grid.hamiltonian(family, point),
                grid.bindings(point),
                starts,
                config,
                escape_seed=derive_seed(seed, index),
            )
        )

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_minimize_point, tasks, chunksize=1))
    else:
        outcomes = [_minimize_point(t) for t in tasks]

    if exact is None:
        exact = exact_energies(family, grid, seed=seed)
    profile = EnergyProfile(tag, n, l1, l2, seed, minimizer_stats=list(outcomes))
    for point, outcome, exact_e in zip(grid.points, outcomes, exact):
        profile.points.append(
            _make_point(point, outcome.energy, exact_e, outcome.termination)
        )
    return profile
