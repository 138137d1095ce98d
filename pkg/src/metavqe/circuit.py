"""Parametrized circuits: angle expressions, layer builders, binding.

A circuit's gate angles are symbolic expressions over two kinds of inputs:
meta symbols (Hamiltonian parameters such as the anisotropy being swept) and
named variational parameters held in a ParamRegistry. The registry is
partitioned into "encoding" parameters (those feeding meta-dependent angle
expressions) and "processing" parameters (plain trainable angles), which is
what makes the layered ansatz parameter-count identities checkable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import _engine
from .pauli import HamiltonianParseError, PauliTerm, _content_lines, _parse_header, _parse_word
from .statevector import Cnot, PauliExp, Ry, Rz, Statevector, encode_gate

ENCODING = "encoding"
PROCESSING = "processing"

ENCODINGS = ("linear", "gaussian", "gaussian-squared")


# ---------------------------------------------------------------------------
# parameter expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    handle: str


@dataclass(frozen=True)
class Linear:
    """weight * <symbol> + offset, the neural-network-style angle encoding."""

    weight: str
    symbol: str
    offset: str


@dataclass(frozen=True)
class Gaussian:
    """amp * exp(rate * (center - <symbol>)) + offset.

    With `squared=True` the exponent becomes rate * (center - <symbol>)**2
    (a floating-Gaussian bump; a negative rate makes it decay).
    """

    amp: str
    rate: str
    center: str
    offset: str
    symbol: str
    squared: bool = False


ParamExpr = Union[Const, Var, Linear, Gaussian]


def expr_handles(expr: ParamExpr) -> tuple[str, ...]:
    if isinstance(expr, Const):
        return ()
    if isinstance(expr, Var):
        return (expr.handle,)
    if isinstance(expr, Linear):
        return (expr.weight, expr.offset)
    return (expr.amp, expr.rate, expr.center, expr.offset)


def eval_param_expr(
    expr: ParamExpr,
    meta_values: Mapping[str, float],
    values: Mapping[str, float],
) -> tuple[float, dict[str, float]]:
    """Evaluate an angle expression and its partials w.r.t. each handle."""
    partials: dict[str, float] = {}

    def accumulate(handle: str, grad: float) -> None:
        partials[handle] = partials.get(handle, 0.0) + grad

    if isinstance(expr, Const):
        return expr.value, partials
    if isinstance(expr, Var):
        accumulate(expr.handle, 1.0)
        return values[expr.handle], partials
    if isinstance(expr, Linear):
        x = meta_values[expr.symbol]
        accumulate(expr.weight, x)
        accumulate(expr.offset, 1.0)
        return values[expr.weight] * x + values[expr.offset], partials
    if isinstance(expr, Gaussian):
        x = meta_values[expr.symbol]
        a = values[expr.amp]
        b = values[expr.rate]
        u = values[expr.center] - x
        arg = u * u if expr.squared else u
        e = math.exp(b * arg)
        accumulate(expr.amp, e)
        accumulate(expr.rate, a * arg * e)
        accumulate(expr.center, a * b * (2.0 * u if expr.squared else 1.0) * e)
        accumulate(expr.offset, 1.0)
        return a * e + values[expr.offset], partials
    raise TypeError(f"unknown expression {expr!r}")


class ParamRegistry:
    """Ordered, uniquely named variational parameters with default values.

    The declaration order defines the optimization vector layout.
    """

    def __init__(self):
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self._partition: dict[str, str] = {}
        self._init: dict[str, float] = {}

    def add(self, name: str, partition: str, init: float = 0.0) -> str:
        if name in self._index:
            raise ValueError(f"duplicate parameter name {name!r}")
        if partition not in (ENCODING, PROCESSING):
            raise ValueError(f"unknown partition {partition!r}")
        self._index[name] = len(self._names)
        self._names.append(name)
        self._partition[name] = partition
        self._init[name] = float(init)
        return name

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._names)

    @property
    def size(self) -> int:
        return len(self._names)

    def index(self, name: str) -> int:
        return self._index[name]

    def partition(self, name: str) -> str:
        return self._partition[name]

    def count(self, partition: str) -> int:
        return sum(1 for p in self._partition.values() if p == partition)

    def initial_values(self) -> np.ndarray:
        return np.array([self._init[n] for n in self._names], dtype=np.float64)

    def values_dict(self, vector: Sequence[float]) -> dict[str, float]:
        if len(vector) != self.size:
            raise ValueError(f"expected {self.size} parameter values, got {len(vector)}")
        return {name: float(vector[i]) for i, name in enumerate(self._names)}


# ---------------------------------------------------------------------------
# circuit templates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RotZ:
    target: int
    angle: ParamExpr


@dataclass(frozen=True)
class RotY:
    target: int
    angle: ParamExpr


@dataclass(frozen=True)
class CnotGate:
    control: int
    target: int


@dataclass(frozen=True)
class PauliExpGate:
    term: PauliTerm
    angle: ParamExpr


GateTemplate = Union[RotZ, RotY, CnotGate, PauliExpGate]


@dataclass
class Circuit:
    nqubits: int
    gates: tuple[GateTemplate, ...]
    registry: ParamRegistry
    meta_symbols: tuple[str, ...]
    reference: str | None = None  # bitstring; None means |0...0>


def _cnot_ring(n: int) -> list[CnotGate]:
    if n < 2:
        return []
    ring = [CnotGate(i, i + 1) for i in range(n - 1)]
    ring.append(CnotGate(n - 1, 0))
    return ring


class CircuitBuilder:
    """Incremental construction of a circuit over one shared registry."""

    def __init__(self, nqubits: int, reference: str | None = None):
        if nqubits < 1:
            raise ValueError(f"qubit count must be positive, got {nqubits}")
        self.nqubits = nqubits
        self.reference = reference
        self.registry = ParamRegistry()
        self._gates: list[GateTemplate] = []
        self._symbols: list[str] = []
        self._enc_layers = 0
        self._proc_layers = 0

    def _note_symbol(self, symbol: str) -> None:
        if symbol not in self._symbols:
            self._symbols.append(symbol)

    def _encoding_expr(self, prefix: str, symbol: str, encoding: str) -> ParamExpr:
        reg = self.registry
        if encoding == "linear":
            return Linear(
                reg.add(f"{prefix}_w", ENCODING, 0.0),
                symbol,
                reg.add(f"{prefix}_phi", ENCODING, 0.0),
            )
        if encoding in ("gaussian", "gaussian-squared"):
            # alpha, delta start at 0 and beta, gamma at 1 so the initial
            # angle is 0, matching the zero-initialized linear encoding.
            return Gaussian(
                reg.add(f"{prefix}_alpha", ENCODING, 0.0),
                reg.add(f"{prefix}_beta", ENCODING, 1.0),
                reg.add(f"{prefix}_gamma", ENCODING, 1.0),
                reg.add(f"{prefix}_delta", ENCODING, 0.0),
                symbol,
                squared=(encoding == "gaussian-squared"),
            )
        raise ValueError(f"unknown encoding {encoding!r} (expected one of {ENCODINGS})")

    def add_encoding_layers(self, layers: int, symbol: str, encoding: str = "linear") -> "CircuitBuilder":
        """Meta-dependent layers: RZ, RY per qubit, then the CNOT ring."""
        self._note_symbol(symbol)
        for _ in range(layers):
            layer = self._enc_layers
            self._enc_layers += 1
            for q in range(self.nqubits):
                prefix = f"enc{layer}_q{q}"
                self._gates.append(RotZ(q, self._encoding_expr(f"{prefix}_rz", symbol, encoding)))
                self._gates.append(RotY(q, self._encoding_expr(f"{prefix}_ry", symbol, encoding)))
            self._gates.extend(_cnot_ring(self.nqubits))
        return self

    def add_processing_layers(self, layers: int) -> "CircuitBuilder":
        """Meta-independent layers: RZ, RY per qubit, then the CNOT ring."""
        reg = self.registry
        for _ in range(layers):
            layer = self._proc_layers
            self._proc_layers += 1
            for q in range(self.nqubits):
                prefix = f"proc{layer}_q{q}"
                self._gates.append(RotZ(q, Var(reg.add(f"{prefix}_rz", PROCESSING, 0.0))))
                self._gates.append(RotY(q, Var(reg.add(f"{prefix}_ry", PROCESSING, 0.0))))
            self._gates.extend(_cnot_ring(self.nqubits))
        return self

    def add_pauli_exponential(self, term: PauliTerm, expr: ParamExpr) -> "CircuitBuilder":
        if term.max_qubit >= self.nqubits:
            raise ValueError(
                f"generator {term.word()!r} acts on qubit {term.max_qubit}, "
                f"circuit has {self.nqubits}"
            )
        for sym in _expr_symbols(expr):
            self._note_symbol(sym)
        self._gates.append(PauliExpGate(term, expr))
        return self

    def build(self) -> Circuit:
        return Circuit(
            self.nqubits,
            tuple(self._gates),
            self.registry,
            tuple(self._symbols),
            self.reference,
        )


def _expr_symbols(expr: ParamExpr) -> tuple[str, ...]:
    if isinstance(expr, (Linear, Gaussian)):
        return (expr.symbol,)
    return ()


def build_encoding_layers(n: int, layers: int, symbol: str = "delta", encoding: str = "linear") -> Circuit:
    """Standalone encoding fragment: `layers` meta-dependent layers."""
    return CircuitBuilder(n).add_encoding_layers(layers, symbol, encoding).build()


def build_processing_layers(n: int, layers: int) -> Circuit:
    """Standalone processing fragment: `layers` meta-independent layers."""
    return CircuitBuilder(n).add_processing_layers(layers).build()


def build_meta_circuit(
    n: int, l1: int, l2: int, symbol: str = "delta", encoding: str = "linear"
) -> Circuit:
    """Encoding layers followed by processing layers over one registry."""
    builder = CircuitBuilder(n)
    builder.add_encoding_layers(l1, symbol, encoding)
    builder.add_processing_layers(l2)
    return builder.build()


def build_ga_circuit(n: int, layers: int) -> Circuit:
    """Meta-independent ansatz of the same depth: all layers processing-form."""
    return CircuitBuilder(n).add_processing_layers(layers).build()


def build_ucc_circuit(
    reference: str,
    generators: Sequence[tuple[PauliTerm, str]],
    repetitions: int,
    encoding: str = "var",
    symbol: str = "d",
) -> Circuit:
    """Pauli-exponential ansatz applied to a computational-basis reference.

    Each repetition applies every generator once; a generator's named handle
    is shared across repetitions, so repeating does not add parameters. With
    `encoding` set to linear/gaussian the named angle becomes a function of
    the meta symbol instead of a free parameter.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    builder = CircuitBuilder(len(reference), reference=reference)
    exprs: dict[str, ParamExpr] = {}
    for term, name in generators:
        if name not in exprs:
            if encoding == "var":
                exprs[name] = Var(builder.registry.add(name, PROCESSING, 0.0))
            else:
                exprs[name] = builder._encoding_expr(name, symbol, encoding)
    for _ in range(repetitions):
        for term, name in generators:
            builder.add_pauli_exponential(term, exprs[name])
    return builder.build()


def parse_generator_file(text: str) -> tuple[str, list[tuple[PauliTerm, str]], int]:
    """Parse the excitation-generator format.

    Header lines `qubits <n>` and `reference <bitstring>` are followed by one
    generator per line: `<param-name> <P><idx> [...]`. Repeating a name gives
    those generators the same shared angle.
    """
    lines = _content_lines(text)
    n = _parse_header(lines)
    if len(lines) < 2:
        raise HamiltonianParseError("missing 'reference <bitstring>' line")
    ref_lineno, ref_line = lines[1]
    tokens = ref_line.split()
    if len(tokens) != 2 or tokens[0] != "reference":
        raise HamiltonianParseError("expected 'reference <bitstring>'", ref_lineno)
    reference = tokens[1]
    if len(reference) != n or any(b not in "01" for b in reference):
        raise HamiltonianParseError(
            f"reference must be a {n}-bit string of 0/1, got {reference!r}", ref_lineno
        )
    generators = []
    for lineno, line in lines[2:]:
        tokens = line.split()
        if len(tokens) < 2:
            raise HamiltonianParseError("expected '<param-name> <factors...>'", lineno)
        name = tokens[0]
        ops = _parse_word(tokens[1:], n, lineno)
        generators.append((PauliTerm(1.0, ops), name))
    return reference, generators, n


# ---------------------------------------------------------------------------
# binding and execution
# ---------------------------------------------------------------------------


class CompiledCircuit:
    """Circuit lowered to kernel arrays; only angles change between runs."""

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.nqubits = circuit.nqubits
        ngates = len(circuit.gates)
        self.kinds = np.empty(ngates, dtype=np.int64)
        self.a0 = np.empty(ngates, dtype=np.int64)
        self.a1 = np.empty(ngates, dtype=np.int64)
        self.iexp = np.empty(ngates, dtype=np.int64)
        self.scales = np.ones(ngates, dtype=np.float64)
        self.sites: list[tuple[int, ParamExpr]] = []
        for g, gate in enumerate(circuit.gates):
            if isinstance(gate, RotY):
                bound = Ry(gate.target, 0.0)
            elif isinstance(gate, RotZ):
                bound = Rz(gate.target, 0.0)
            elif isinstance(gate, CnotGate):
                bound = Cnot(gate.control, gate.target)
            elif isinstance(gate, PauliExpGate):
                bound = PauliExp(gate.term, 0.0)
            else:
                raise TypeError(f"unknown gate template {gate!r}")
            kind, a0, a1, iexp, scale = encode_gate(bound, circuit.nqubits)
            self.kinds[g] = kind
            self.a0[g] = a0
            self.a1[g] = a1
            self.iexp[g] = iexp
            self.scales[g] = scale
            if not isinstance(gate, CnotGate):
                self.sites.append((g, gate.angle))
        self.param_sites = [(g, e) for g, e in self.sites if expr_handles(e)]
        if circuit.reference is None:
            self.ref_index = 0
        else:
            ref = circuit.reference
            if len(ref) != circuit.nqubits or any(b not in "01" for b in ref):
                raise ValueError(f"bad reference bitstring {ref!r}")
            self.ref_index = sum(1 << q for q, b in enumerate(ref) if b == "1")
        self._buf = np.empty(2**circuit.nqubits, dtype=np.complex128)

    def check_bindings(self, meta_values: Mapping[str, float]) -> None:
        missing = [s for s in self.circuit.meta_symbols if s not in meta_values]
        if missing:
            raise KeyError(f"unbound meta symbols: {', '.join(missing)}")

    def angles(self, meta_values: Mapping[str, float], values: Mapping[str, float]) -> np.ndarray:
        """Gate angle vector (expression values; kernel scales applied later)."""
        out = np.zeros(len(self.kinds), dtype=np.float64)
        for g, expr in self.sites:
            out[g], _ = eval_param_expr(expr, meta_values, values)
        return out

    def run_angles(self, angles: np.ndarray) -> np.ndarray:
        """Execute with explicit gate angles; returns the internal buffer."""
        _engine.run_circuit(
            self._buf, self.ref_index, self.kinds, self.a0, self.a1, self.iexp,
            angles * self.scales,
        )
        return self._buf

    def run(self, meta_values: Mapping[str, float], params: Sequence[float]) -> np.ndarray:
        self.check_bindings(meta_values)
        values = self.circuit.registry.values_dict(params)
        return self.run_angles(self.angles(meta_values, values))


def bind_and_run(
    circuit: Circuit,
    meta_values: Mapping[str, float],
    param_values: Sequence[float],
) -> Statevector:
    """Evaluate all angle expressions and run the circuit from its reference."""
    compiled = CompiledCircuit(circuit)
    amps = compiled.run(meta_values, param_values)
    return Statevector(amps.copy(), circuit.nqubits)
