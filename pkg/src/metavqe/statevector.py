"""Dense exact statevector simulation.

Indexing convention: qubit q is bit q of the amplitude index, so the
bitstring "101" puts qubit 0 in |1>, qubit 1 in |0>, qubit 2 in |1> and
addresses amplitude index 5. Rotation conventions are

    RY(th) = exp(-i th Y / 2),  RZ(th) = exp(-i th Z / 2),
    PauliExp(P, th) = exp(-i th P / 2)

with the Pauli word's coefficient folded into the effective angle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _engine
from .pauli import PauliSum, PauliTerm, compile_observable

MAX_QUBITS = 24


@dataclass
class Statevector:
    """Dense complex amplitude array over `nqubits` qubits."""

    amplitudes: np.ndarray
    nqubits: int

    def __post_init__(self):
        if self.nqubits < 1 or self.nqubits > MAX_QUBITS:
            raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {self.nqubits}")
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.nqubits,):
            raise ValueError(
                f"expected {2**self.nqubits} amplitudes for {self.nqubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "Statevector":
        return Statevector(self.amplitudes.copy(), self.nqubits)


@dataclass(frozen=True)
class Ry:
    target: int
    angle: float


@dataclass(frozen=True)
class Rz:
    target: int
    angle: float


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int


@dataclass(frozen=True)
class PauliExp:
    term: PauliTerm
    angle: float


Gate = Union[Ry, Rz, Cnot, PauliExp]


def zero_state(n: int) -> Statevector:
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(amps, n)


def basis_state(n: int, bits: str) -> Statevector:
    """Computational basis state from a qubit-0-first bitstring."""
    if len(bits) != n:
        raise ValueError(f"bitstring length {len(bits)} != qubit count {n}")
    index = 0
    for q, b in enumerate(bits):
        if b == "1":
            index |= 1 << q
        elif b != "0":
            raise ValueError(f"bitstring may contain only 0/1, got {bits!r}")
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[index] = 1.0
    return Statevector(amps, n)


def _check_qubit(q: int, n: int, role: str) -> None:
    if not 0 <= q < n:
        raise ValueError(f"{role} qubit {q} out of range for {n}-qubit state")


def encode_gate(gate: Gate, nqubits: int) -> tuple[int, int, int, int, float]:
    """Lower a gate to (opcode, a0, a1, iexp, angle_scale) for the kernels.

    The returned scale multiplies the gate angle; it is 1 except for Pauli
    exponentials, whose word coefficient folds into the rotation angle.
    """
    if isinstance(gate, Ry):
        _check_qubit(gate.target, nqubits, "target")
        return _engine.GATE_RY, 1 << gate.target, 0, 0, 1.0
    if isinstance(gate, Rz):
        _check_qubit(gate.target, nqubits, "target")
        return _engine.GATE_DIAG, 1 << gate.target, 0, 0, 1.0
    if isinstance(gate, Cnot):
        _check_qubit(gate.control, nqubits, "control")
        _check_qubit(gate.target, nqubits, "target")
        if gate.control == gate.target:
            raise ValueError("CNOT control and target must differ")
        return _engine.GATE_CNOT, 1 << gate.control, 1 << gate.target, 0, 1.0
    if isinstance(gate, PauliExp):
        if gate.term.max_qubit >= nqubits:
            raise ValueError(
                f"Pauli word {gate.term.word()!r} acts on qubit {gate.term.max_qubit}, "
                f"state has {nqubits}"
            )
        flip, pmask, iexp = gate.term.masks()
        if flip == 0:
            # Pure-Z (or identity) word: shares the diagonal kernel with RZ,
            # so PauliExp(Z_t, th) is bitwise identical to Rz(t, th).
            return _engine.GATE_DIAG, pmask, 0, 0, gate.term.coefficient
        return _engine.GATE_PAULI, flip, pmask, iexp, gate.term.coefficient
    raise TypeError(f"unknown gate {gate!r}")


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    """Apply one gate in place and return the state."""
    kind, a0, a1, iexp, scale = encode_gate(gate, state.nqubits)
    angle = 0.0 if isinstance(gate, Cnot) else gate.angle * scale
    _engine.apply_gates(
        state.amplitudes,
        np.array([kind], dtype=np.int64),
        np.array([a0], dtype=np.int64),
        np.array([a1], dtype=np.int64),
        np.array([iexp], dtype=np.int64),
        np.array([angle], dtype=np.float64),
    )
    return state


def expectation(state: Statevector, h: PauliSum) -> float:
    """Real expectation <psi|H|psi>; H must be on the same register."""
    if h.nqubits != state.nqubits:
        raise ValueError(
            f"operator acts on {h.nqubits} qubits but state has {state.nqubits}"
        )
    obs = compile_observable(h)
    value = _engine.expectation_value(
        state.amplitudes, obs.coeffs, obs.flips, obs.pmasks, obs.iexps
    )
    assert abs(value.imag) < 1e-10, f"non-real expectation {value}"
    return float(value.real)


def dump_amplitudes(state: Statevector) -> str:
    """Readable amplitude table for small states (debugging aid)."""
    if state.nqubits > 6:
        raise ValueError("amplitude dump is limited to 6 qubits")
    lines = []
    for index, amp in enumerate(state.amplitudes):
        bits = "".join("1" if index >> q & 1 else "0" for q in range(state.nqubits))
        lines.append(f"{bits}  {amp.real:+.12f} {amp.imag:+.12f}")
    return "\n".join(lines) + "\n"
