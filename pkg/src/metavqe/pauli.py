"""Pauli-string algebra and Hamiltonian construction.

Hamiltonians are real-weighted sums of Pauli words, kept in a canonical
merged form so that printing is deterministic and equality is term-for-term.
The module also builds the periodic XXZ chain with a transverse field and
loads Hamiltonians (and one-parameter Hamiltonian families) from text files.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from . import _engine

_PAULI_LETTERS = ("X", "Y", "Z")
_FACTOR_RE = re.compile(r"^([XYZ])(\d+)$")


class HamiltonianParseError(ValueError):
    """Raised for malformed Hamiltonian / generator file content."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class PauliTerm:
    """One real-weighted Pauli word; identity on qubits absent from `ops`.

    `ops` is stored as a sorted tuple of (qubit, letter) pairs so terms are
    hashable and canonically ordered. Use `operators` for a dict view.
    """

    coefficient: float
    ops: tuple[tuple[int, str], ...]

    def __init__(self, coefficient: float, operators: Mapping[int, str] | Iterable[tuple[int, str]]):
        coefficient = float(coefficient)
        if not math.isfinite(coefficient):
            raise ValueError(f"Pauli coefficient must be finite, got {coefficient}")
        pairs = sorted(dict(operators).items()) if not isinstance(operators, Mapping) else sorted(operators.items())
        seen = set()
        for q, letter in pairs:
            if not isinstance(q, int) or q < 0:
                raise ValueError(f"qubit index must be a non-negative integer, got {q!r}")
            if letter not in _PAULI_LETTERS:
                raise ValueError(f"unknown Pauli letter {letter!r} (expected X, Y or Z)")
            if q in seen:
                raise ValueError(f"duplicate qubit index {q} in Pauli term")
            seen.add(q)
        object.__setattr__(self, "coefficient", coefficient)
        object.__setattr__(self, "ops", tuple(pairs))

    @property
    def operators(self) -> dict[int, str]:
        return dict(self.ops)

    @property
    def max_qubit(self) -> int:
        return self.ops[-1][0] if self.ops else -1

    def scaled(self, factor: float) -> "PauliTerm":
        return PauliTerm(self.coefficient * factor, self.ops)

    def word(self) -> str:
        return " ".join(f"{letter}{q}" for q, letter in self.ops) if self.ops else "I"

    def masks(self) -> tuple[int, int, int]:
        """(flip, phase, #Y mod 4) masks for the simulation kernels."""
        x = y = z = 0
        ny = 0
        for q, letter in self.ops:
            bit = 1 << q
            if letter == "X":
                x |= bit
            elif letter == "Y":
                y |= bit
                ny += 1
            else:
                z |= bit
        return x | y, y | z, ny % 4


@dataclass(frozen=True)
class PauliSum:
    """Canonical merged sum of Pauli terms on a fixed qubit register."""

    nqubits: int
    terms: tuple[PauliTerm, ...] = field(default=())

    def __init__(self, nqubits: int, terms: Iterable[PauliTerm] = ()):
        if nqubits < 1:
            raise ValueError(f"qubit count must be positive, got {nqubits}")
        merged: dict[tuple[tuple[int, str], ...], float] = {}
        for term in terms:
            if term.max_qubit >= nqubits:
                raise ValueError(
                    f"term {term.word()!r} acts on qubit {term.max_qubit}, register has {nqubits}"
                )
            merged[term.ops] = merged.get(term.ops, 0.0) + term.coefficient
        canon = tuple(
            PauliTerm(coeff, ops) for ops, coeff in sorted(merged.items()) if coeff != 0.0
        )
        object.__setattr__(self, "nqubits", int(nqubits))
        object.__setattr__(self, "terms", canon)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.nqubits != self.nqubits:
            raise ValueError("cannot add Pauli sums on different register sizes")
        return PauliSum(self.nqubits, self.terms + other.terms)

    def scaled(self, factor: float) -> "PauliSum":
        return PauliSum(self.nqubits, tuple(t.scaled(factor) for t in self.terms))

    def __str__(self) -> str:
        return format_hamiltonian(self)


def compile_observable(h: PauliSum) -> _engine.CompiledObservable:
    """Lower a PauliSum to the flat arrays used by the expectation kernels."""
    nterms = len(h.terms)
    coeffs = np.empty(nterms, dtype=np.float64)
    flips = np.empty(nterms, dtype=np.int64)
    pmasks = np.empty(nterms, dtype=np.int64)
    iexps = np.empty(nterms, dtype=np.int64)
    for t, term in enumerate(h.terms):
        flip, pmask, iexp = term.masks()
        coeffs[t] = term.coefficient
        flips[t] = flip
        pmasks[t] = pmask
        iexps[t] = iexp
    return _engine.CompiledObservable(h.nqubits, coeffs, flips, pmasks, iexps)


def build_xxz(n: int, delta: float, field_strength: float) -> PauliSum:
    """Periodic XXZ chain with transverse field.

    H = sum_i (X_i X_{i+1} + Y_i Y_{i+1} + delta * Z_i Z_{i+1})
        + field * sum_i Z_i,  with site n identified with site 0.

    The bond list is the literal periodic sum, so for n=2 the (0,1) bond is
    visited twice and the merged coefficients double.
    """
    if n < 2:
        raise ValueError(f"XXZ chain needs at least 2 sites, got {n}")
    terms = []
    for i in range(n):
        j = (i + 1) % n
        terms.append(PauliTerm(1.0, {i: "X", j: "X"}))
        terms.append(PauliTerm(1.0, {i: "Y", j: "Y"}))
        terms.append(PauliTerm(delta, {i: "Z", j: "Z"}))
    for i in range(n):
        terms.append(PauliTerm(field_strength, {i: "Z"}))
    return PauliSum(n, terms)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------


def _parse_coefficient(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise HamiltonianParseError(f"bad coefficient {token!r}", lineno) from None
    if not math.isfinite(value):
        raise HamiltonianParseError(f"coefficient must be finite, got {token!r}", lineno)
    return value


def _parse_word(tokens: Sequence[str], nqubits: int, lineno: int) -> dict[int, str]:
    ops: dict[int, str] = {}
    if list(tokens) == ["I"]:
        return ops
    for token in tokens:
        m = _FACTOR_RE.match(token)
        if m is None:
            raise HamiltonianParseError(f"bad Pauli factor {token!r}", lineno)
        letter, qubit = m.group(1), int(m.group(2))
        if qubit >= nqubits:
            raise HamiltonianParseError(
                f"qubit index {qubit} out of range for {nqubits}-qubit register", lineno
            )
        if qubit in ops:
            raise HamiltonianParseError(f"duplicate qubit index {qubit}", lineno)
        ops[qubit] = letter
    return ops


def _content_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line))
    return out


def _parse_header(lines: list[tuple[int, str]]) -> int:
    if not lines:
        raise HamiltonianParseError("empty file: missing 'qubits <n>' header")
    lineno, line = lines[0]
    tokens = line.split()
    if len(tokens) != 2 or tokens[0] != "qubits":
        raise HamiltonianParseError("expected header 'qubits <n>'", lineno)
    try:
        n = int(tokens[1])
    except ValueError:
        raise HamiltonianParseError(f"bad qubit count {tokens[1]!r}", lineno) from None
    if n < 1:
        raise HamiltonianParseError(f"qubit count must be positive, got {n}", lineno)
    return n


def parse_hamiltonian_file(text: str) -> PauliSum:
    """Parse the plain Hamiltonian format.

    A required header line `qubits <n>` is followed by term lines of the form
    `<coefficient> <P><idx> [<P><idx> ...]` with P in {X, Y, Z}; a bare `I`
    names the identity term. `#` starts a comment and blank lines are
    ignored; duplicated words are merged by coefficient addition.
    """
    lines = _content_lines(text)
    n = _parse_header(lines)
    terms = []
    for lineno, line in lines[1:]:
        tokens = line.split()
        if len(tokens) < 2:
            raise HamiltonianParseError("expected '<coefficient> <factors...>'", lineno)
        coeff = _parse_coefficient(tokens[0], lineno)
        ops = _parse_word(tokens[1:], n, lineno)
        terms.append(PauliTerm(coeff, ops))
    return PauliSum(n, terms)


def format_hamiltonian(h: PauliSum) -> str:
    """Canonical text form; `parse_hamiltonian_file` round-trips it exactly."""
    lines = [f"qubits {h.nqubits}"]
    for term in h.terms:
        lines.append(f"{term.coefficient!r} {term.word()}")
    return "\n".join(lines) + "\n"


def matvec(h: PauliSum, v):
    """Apply H to a statevector term-by-term, without forming the matrix."""
    from .statevector import Statevector

    if h.nqubits != v.nqubits:
        raise ValueError(
            f"operator acts on {h.nqubits} qubits but state has {v.nqubits}"
        )
    obs = compile_observable(h)
    out = np.empty_like(v.amplitudes)
    _engine.matvec_into(v.amplitudes, out, obs.coeffs, obs.flips, obs.pmasks, obs.iexps)
    return Statevector(out, v.nqubits)


# ---------------------------------------------------------------------------
# parametrized families
# ---------------------------------------------------------------------------


class HamiltonianFamily(Protocol):
    """A map from a real parameter vector to a PauliSum."""

    nqubits: int
    parameter_names: tuple[str, ...]

    def build(self, values: Sequence[float]) -> PauliSum: ...


def _check_values(family: "HamiltonianFamily", values: Sequence[float]) -> None:
    if len(values) != len(family.parameter_names):
        raise ValueError(
            f"expected {len(family.parameter_names)} parameter values "
            f"({', '.join(family.parameter_names)}), got {len(values)}"
        )


@dataclass(frozen=True)
class XxzFamily:
    """XXZ chain family with parameters (delta, field), both affine in H."""

    nqubits: int
    parameter_names: tuple[str, ...] = ("delta", "field")

    def build(self, values: Sequence[float]) -> PauliSum:
        _check_values(self, values)
        delta, field_strength = values
        return build_xxz(self.nqubits, delta, field_strength)


@dataclass(frozen=True)
class FileFamily:
    """Family loaded from a file: fixed base terms plus scaled term groups."""

    base: PauliSum
    groups: tuple[tuple[str, PauliSum], ...]

    @property
    def nqubits(self) -> int:
        return self.base.nqubits

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.groups)

    def build(self, values: Sequence[float]) -> PauliSum:
        _check_values(self, values)
        total = self.base
        for (name, group), value in zip(self.groups, values):
            total = total + group.scaled(value)
        return total


def parse_family_file(text: str) -> FileFamily:
    """Parse the extended family format.

    Same as the plain format, except a term line may be prefixed with `@name`
    to place it in the group multiplied by the named scalar parameter:

        qubits 2
        1.0 X0 X1
        @d 1.0 Z0
        @d 1.0 Z1

    defines H(d) = X0 X1 + d * (Z0 + Z1).
    """
    lines = _content_lines(text)
    n = _parse_header(lines)
    base_terms: list[PauliTerm] = []
    group_terms: dict[str, list[PauliTerm]] = {}
    group_order: list[str] = []
    for lineno, line in lines[1:]:
        tokens = line.split()
        target = base_terms
        if tokens[0].startswith("@"):
            name = tokens[0][1:]
            if not name:
                raise HamiltonianParseError("empty parameter name after '@'", lineno)
            if name not in group_terms:
                group_terms[name] = []
                group_order.append(name)
            target = group_terms[name]
            tokens = tokens[1:]
        if len(tokens) < 2:
            raise HamiltonianParseError("expected '<coefficient> <factors...>'", lineno)
        coeff = _parse_coefficient(tokens[0], lineno)
        ops = _parse_word(tokens[1:], n, lineno)
        target.append(PauliTerm(coeff, ops))
    groups = tuple((name, PauliSum(n, group_terms[name])) for name in group_order)
    return FileFamily(PauliSum(n, base_terms), groups)
