"""Deterministic limited-memory quasi-Newton minimization.

L-BFGS (two-loop recursion, default history 10) with a monotone bisection
line search enforcing sufficient decrease and weak-curvature conditions.
Accepted objective values never increase along the trace, evaluations happen
in a fixed order, and identical inputs reproduce the trace bitwise, which is
what makes downstream energy profiles reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .rng import SplitMix64

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]

GRADIENT_CONVERGED = "gradient-converged"
FUNCTION_CONVERGED = "function-converged"
MAX_ITERATIONS = "max-iterations"
LINE_SEARCH_FAILURE = "line-search-failure"


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 1000
    grad_tol: float = 1e-6
    f_tol: float = 1e-10  # relative decrease per accepted step
    history: int = 10
    armijo_c1: float = 1e-4
    curvature_c2: float = 0.9
    max_line_search: int = 40
    rng_seed: int = 0

    def __post_init__(self):
        if self.grad_tol <= 0 or self.f_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.history < 1:
            raise ValueError("history must be >= 1")
        if not 0 < self.armijo_c1 < self.curvature_c2 < 1:
            raise ValueError("need 0 < armijo_c1 < curvature_c2 < 1")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    objective: float
    grad_norm: float
    step: float


@dataclass
class OptTrace:
    records: list[TraceRecord] = field(default_factory=list)
    termination: str = ""

    @property
    def final_objective(self) -> float:
        return self.records[-1].objective

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration

    def to_csv(self) -> str:
        lines = ["iter,objective,grad_norm,step"]
        for r in self.records:
            lines.append(f"{r.iteration},{r.objective!r},{r.grad_norm!r},{r.step!r}")
        return "\n".join(lines) + "\n"


class NonFiniteObjectiveError(RuntimeError):
    """Objective returned NaN/Inf; carries the trace accumulated so far."""

    def __init__(self, message: str, trace: OptTrace):
        super().__init__(message)
        self.trace = trace


def _evaluate(objective: Objective, x: np.ndarray, trace: OptTrace) -> tuple[float, np.ndarray]:
    value, grad = objective(x)
    grad = np.asarray(grad, dtype=np.float64)
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        trace.termination = LINE_SEARCH_FAILURE
        raise NonFiniteObjectiveError(f"objective returned non-finite value {value}", trace)
    return float(value), grad


def _lbfgs_direction(grad, s_hist, y_hist, rho_hist) -> np.ndarray:
    q = grad.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def minimize(
    objective: Objective,
    x0: Sequence[float],
    config: OptimizerConfig = OptimizerConfig(),
) -> tuple[np.ndarray, OptTrace]:
    """Minimize a smooth objective given values and gradients.

    Returns the best point seen and the full iteration trace. On line-search
    failure the current (best) point is returned with the reason recorded
    rather than raising: flat regions of variational landscapes are expected
    and the caller wants the partial result.
    """
    trace = OptTrace()
    x = np.asarray(x0, dtype=np.float64).copy()
    if x.ndim != 1:
        raise ValueError("x0 must be a vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")
    f, grad = _evaluate(objective, x, trace)
    gnorm = float(np.linalg.norm(grad))
    trace.records.append(TraceRecord(0, f, gnorm, 0.0))
    if x.size == 0 or gnorm <= config.grad_tol:
        trace.termination = GRADIENT_CONVERGED
        return x, trace

    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho_hist: list[float] = []

    for iteration in range(1, config.max_iterations + 1):
        direction = _lbfgs_direction(grad, s_hist, y_hist, rho_hist)
        slope = float(np.dot(grad, direction))
        if slope >= 0.0:
            # History produced a non-descent direction; restart from steepest.
            s_hist.clear()
            y_hist.clear()
            rho_hist.clear()
            direction = -grad
            slope = -gnorm * gnorm

        # Weak-Wolfe bisection line search (monotone: accepted steps satisfy
        # sufficient decrease, so objective values never increase).
        lo, hi = 0.0, np.inf
        alpha = 1.0 if s_hist else min(1.0, 1.0 / max(gnorm, 1.0))
        accepted = None
        for _ in range(config.max_line_search):
            x_try = x + alpha * direction
            f_try, g_try = _evaluate(objective, x_try, trace)
            if f_try > f + config.armijo_c1 * alpha * slope:
                hi = alpha
            elif float(np.dot(g_try, direction)) < config.curvature_c2 * slope:
                lo = alpha
            else:
                accepted = (x_try, f_try, g_try)
                break
            alpha = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * alpha
        if accepted is None:
            trace.termination = LINE_SEARCH_FAILURE
            return x, trace

        x_new, f_new, grad_new = accepted
        s = x_new - x
        y = grad_new - grad
        sy = float(np.dot(s, y))
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > config.history:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)

        decrease = f - f_new
        x, f, grad = x_new, f_new, grad_new
        gnorm = float(np.linalg.norm(grad))
        trace.records.append(TraceRecord(iteration, f, gnorm, float(alpha)))

        if gnorm <= config.grad_tol:
            trace.termination = GRADIENT_CONVERGED
            return x, trace
        if decrease <= config.f_tol * max(1.0, abs(f)):
            trace.termination = FUNCTION_CONVERGED
            return x, trace

    trace.termination = MAX_ITERATIONS
    return x, trace


def random_init(size: int, seed: int) -> np.ndarray:
    """Uniform(-pi, pi) start vector from the portable SplitMix64 stream."""
    if size < 0:
        raise ValueError(f"size must be >= 0, got {size}")
    return SplitMix64(seed).uniform(-np.pi, np.pi, size)
