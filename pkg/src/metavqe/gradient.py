"""Analytic gradients of circuit expectation values.

The parameter-shift rule is applied per gate site: every RY/RZ/Pauli
exponential is generated by a Pauli word with eigenvalues +-1, so

    dE/d(theta_g) = (E(theta_g + pi/2) - E(theta_g - pi/2)) / 2

exactly. Site derivatives are then chain-ruled through the angle-expression
partials and accumulated per registry parameter, which handles both shared
handles (one parameter feeding many gates) and encodings (one gate angle
depending on several parameters).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _engine
from .circuit import Circuit, CompiledCircuit, eval_param_expr
from .pauli import PauliSum, compile_observable

HALF_PI = 0.5 * np.pi


class UnsupportedGeneratorError(ValueError):
    """Raised when a parameterized gate's generator is not a plain Pauli word."""


@dataclass
class GradientResult:
    value: float
    gradient: np.ndarray


@dataclass
class EvalCounter:
    """Counts kernel-level expectation evaluations (cost accounting)."""

    shift_evaluations: int = 0
    value_evaluations: int = 0


class CircuitExpectation:
    """<psi(meta, params)|H|psi(meta, params)> with exact gradients.

    Compiles the circuit and observable once; reuse one instance per
    (circuit, Hamiltonian) pair in hot loops. Instances hold a scratch
    buffer and are not safe for concurrent use.
    """

    def __init__(self, circuit: Circuit, hamiltonian: PauliSum, compiled: CompiledCircuit | None = None):
        if hamiltonian.nqubits != circuit.nqubits:
            raise ValueError(
                f"operator acts on {hamiltonian.nqubits} qubits, circuit has {circuit.nqubits}"
            )
        self.compiled = compiled if compiled is not None else CompiledCircuit(circuit)
        self.registry = circuit.registry
        self.observable = compile_observable(hamiltonian)

    def _expect(self, amps: np.ndarray) -> float:
        obs = self.observable
        return float(
            _engine.expectation_value(amps, obs.coeffs, obs.flips, obs.pmasks, obs.iexps).real
        )

    def value(self, meta_values: Mapping[str, float], params: Sequence[float]) -> float:
        return self._expect(self.compiled.run(meta_values, params))

    def value_and_gradient(
        self,
        meta_values: Mapping[str, float],
        params: Sequence[float],
        counter: EvalCounter | None = None,
    ) -> GradientResult:
        cc = self.compiled
        cc.check_bindings(meta_values)
        values = self.registry.values_dict(params)
        base = cc.angles(meta_values, values)
        energy = self._expect(cc.run_angles(base))
        if counter is not None:
            counter.value_evaluations += 1
        grad = np.zeros(self.registry.size, dtype=np.float64)
        work = base.copy()
        for g, expr in cc.param_sites:
            if abs(cc.scales[g]) != 1.0:
                raise UnsupportedGeneratorError(
                    "parameter-shift needs generators with +-1 eigenvalues; fold the "
                    f"Pauli coefficient {cc.scales[g]!r} into the gate angle"
                )
            theta = base[g]
            work[g] = theta + HALF_PI
            e_plus = self._expect(cc.run_angles(work))
            work[g] = theta - HALF_PI
            e_minus = self._expect(cc.run_angles(work))
            work[g] = theta
            if counter is not None:
                counter.shift_evaluations += 2
            site_grad = 0.5 * (e_plus - e_minus)
            _, partials = eval_param_expr(expr, meta_values, values)
            for handle, dtheta_dp in partials.items():
                grad[self.registry.index(handle)] += site_grad * dtheta_dp
        return GradientResult(energy, grad)


def param_shift_gradient(
    circuit: Circuit,
    hamiltonian: PauliSum,
    meta_values: Mapping[str, float],
    param_values: Sequence[float],
    counter: EvalCounter | None = None,
) -> GradientResult:
    """Exact expectation gradient via the parameter-shift rule."""
    problem = CircuitExpectation(circuit, hamiltonian)
    return problem.value_and_gradient(meta_values, param_values, counter)


def finite_diff_gradient(
    circuit: Circuit,
    hamiltonian: PauliSum,
    meta_values: Mapping[str, float],
    param_values: Sequence[float],
    step: float = 1e-4,
) -> GradientResult:
    """Central-difference gradient over registry parameters (test oracle)."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    problem = CircuitExpectation(circuit, hamiltonian)
    params = np.asarray(param_values, dtype=np.float64).copy()
    value = problem.value(meta_values, params)
    grad = np.zeros(params.shape[0], dtype=np.float64)
    for i in range(params.shape[0]):
        saved = params[i]
        params[i] = saved + step
        e_plus = problem.value(meta_values, params)
        params[i] = saved - step
        e_minus = problem.value(meta_values, params)
        params[i] = saved
        grad[i] = (e_plus - e_minus) / (2.0 * step)
    return GradientResult(value, grad)
