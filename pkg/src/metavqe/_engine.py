"""Low-level statevector kernels.

All kernels operate on flat complex128 amplitude arrays. Qubit q addresses
bit q of the amplitude index, i.e. qubit 0 is the lowest-order bit. Gates are
encoded as parallel arrays of opcodes and integer operands so that a whole
circuit runs in a single compiled call:

    GATE_RY    a0 = 1 << target
    GATE_DIAG  a0 = phase mask (RZ and pure-Z Pauli exponentials)
    GATE_CNOT  a0 = 1 << control, a1 = 1 << target
    GATE_PAULI a0 = X|Y flip mask, a1 = (Y|Z) phase mask, iexp = #Y mod 4

A Pauli word P with flip mask m acts as P|j> = i^{#Y} (-1)^{parity(j & pm)}
|j XOR m>, which is all the kernels need. RZ(t) and exp(-i th Z_t / 2) share
the GATE_DIAG opcode, so they are bitwise identical by construction.

The hot loops are JIT compiled with numba when it is importable; otherwise
the module falls back to vectorized numpy versions of the same arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


GATE_RY = 0
GATE_DIAG = 1
GATE_CNOT = 2
GATE_PAULI = 3


@dataclass(frozen=True)
class CompiledObservable:
    """Pauli sum lowered to flat arrays for the expectation/matvec kernels."""

    nqubits: int
    coeffs: np.ndarray  # float64, one per term
    flips: np.ndarray  # int64 X|Y masks
    pmasks: np.ndarray  # int64 Y|Z masks
    iexps: np.ndarray  # int64, #Y mod 4


# ---------------------------------------------------------------------------
# numba loop kernels
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _parity(x):
    x ^= x >> 32
    x ^= x >> 16
    x ^= x >> 8
    x ^= x >> 4
    x ^= x >> 2
    x ^= x >> 1
    return x & 1


@njit(cache=True, inline="always")
def _i_power(k):
    if k == 0:
        return 1.0 + 0.0j
    if k == 1:
        return 0.0 + 1.0j
    if k == 2:
        return -1.0 + 0.0j
    return 0.0 - 1.0j


@njit(cache=True)
def _apply_gates_loop(v, kinds, a0, a1, iexp, angles):
    dim = v.shape[0]
    for g in range(kinds.shape[0]):
        kind = kinds[g]
        if kind == GATE_RY:
            tbit = a0[g]
            c = np.cos(0.5 * angles[g])
            s = np.sin(0.5 * angles[g])
            for i in range(dim):
                if i & tbit == 0:
                    j = i | tbit
                    lo = v[i]
                    hi = v[j]
                    v[i] = c * lo - s * hi
                    v[j] = s * lo + c * hi
        elif kind == GATE_DIAG:
            pmask = a0[g]
            c = np.cos(0.5 * angles[g])
            s = np.sin(0.5 * angles[g])
            f_even = c - 1j * s
            f_odd = c + 1j * s
            for i in range(dim):
                if _parity(i & pmask):
                    v[i] *= f_odd
                else:
                    v[i] *= f_even
        elif kind == GATE_CNOT:
            cbit = a0[g]
            tbit = a1[g]
            for i in range(dim):
                if (i & cbit) != 0 and (i & tbit) == 0:
                    j = i | tbit
                    tmp = v[i]
                    v[i] = v[j]
                    v[j] = tmp
        else:
            flip = a0[g]
            pmask = a1[g]
            c = np.cos(0.5 * angles[g])
            s = np.sin(0.5 * angles[g])
            pref = _i_power(iexp[g]) * (-1j * s)
            low = flip & (-flip)
            for i in range(dim):
                if i & low == 0:
                    j = i ^ flip
                    ai = v[i]
                    aj = v[j]
                    if _parity(j & pmask):
                        v[i] = c * ai - pref * aj
                    else:
                        v[i] = c * ai + pref * aj
                    if _parity(i & pmask):
                        v[j] = c * aj - pref * ai
                    else:
                        v[j] = c * aj + pref * ai


@njit(cache=True)
def _run_circuit_loop(buf, ref_index, kinds, a0, a1, iexp, angles):
    buf[:] = 0.0
    buf[ref_index] = 1.0
    _apply_gates_loop(buf, kinds, a0, a1, iexp, angles)


@njit(cache=True)
def _expectation_loop(v, coeffs, flips, pmasks, iexps):
    dim = v.shape[0]
    total = 0.0 + 0.0j
    for t in range(coeffs.shape[0]):
        flip = flips[t]
        pmask = pmasks[t]
        acc = 0.0 + 0.0j
        for i in range(dim):
            j = i ^ flip
            if _parity(j & pmask):
                acc -= np.conj(v[i]) * v[j]
            else:
                acc += np.conj(v[i]) * v[j]
        total += coeffs[t] * (_i_power(iexps[t]) * acc)
    return total


@njit(cache=True)
def _matvec_loop(v, out, coeffs, flips, pmasks, iexps):
    dim = v.shape[0]
    out[:] = 0.0
    for t in range(coeffs.shape[0]):
        flip = flips[t]
        pmask = pmasks[t]
        pref = coeffs[t] * _i_power(iexps[t])
        for i in range(dim):
            j = i ^ flip
            if _parity(j & pmask):
                out[i] -= pref * v[j]
            else:
                out[i] += pref * v[j]


# ---------------------------------------------------------------------------
# numpy fallbacks (same arithmetic, vectorized)
# ---------------------------------------------------------------------------


def _apply_gates_numpy(v, kinds, a0, a1, iexp, angles):
    dim = v.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    for g in range(kinds.shape[0]):
        kind = kinds[g]
        if kind == GATE_RY:
            tbit = a0[g]
            c = np.cos(0.5 * angles[g])
            s = np.sin(0.5 * angles[g])
            i0 = idx[(idx & tbit) == 0]
            i1 = i0 | tbit
            lo = v[i0].copy()
            hi = v[i1]
            v[i0] = c * lo - s * hi
            v[i1] = s * lo + c * hi
        elif kind == GATE_DIAG:
            pmask = a0[g]
            c = np.cos(0.5 * angles[g])
            s = np.sin(0.5 * angles[g])
            odd = (np.bitwise_count(idx & pmask) & 1).astype(bool)
            v *= np.where(odd, c + 1j * s, c - 1j * s)
        elif kind == GATE_CNOT:
            cbit = a0[g]
            tbit = a1[g]
            i0 = idx[((idx & cbit) != 0) & ((idx & tbit) == 0)]
            i1 = i0 | tbit
            tmp = v[i0].copy()
            v[i0] = v[i1]
            v[i1] = tmp
        else:
            flip = a0[g]
            pmask = a1[g]
            c = np.cos(0.5 * angles[g])
            s = np.sin(0.5 * angles[g])
            pref = (1j) ** int(iexp[g]) * (-1j * s)
            low = flip & (-flip)
            i0 = idx[(idx & low) == 0]
            i1 = i0 ^ flip
            sgn0 = 1.0 - 2.0 * (np.bitwise_count(i0 & pmask) & 1)
            sgn1 = 1.0 - 2.0 * (np.bitwise_count(i1 & pmask) & 1)
            ai = v[i0].copy()
            aj = v[i1]
            v[i0] = c * ai + pref * sgn1 * aj
            v[i1] = c * aj + pref * sgn0 * ai


def _run_circuit_numpy(buf, ref_index, kinds, a0, a1, iexp, angles):
    buf[:] = 0.0
    buf[ref_index] = 1.0
    _apply_gates_numpy(buf, kinds, a0, a1, iexp, angles)


def _expectation_numpy(v, coeffs, flips, pmasks, iexps):
    dim = v.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    total = 0.0 + 0.0j
    for t in range(coeffs.shape[0]):
        j = idx ^ flips[t]
        sgn = 1.0 - 2.0 * (np.bitwise_count(j & pmasks[t]) & 1)
        acc = np.sum(np.conj(v) * sgn * v[j])
        total += coeffs[t] * (1j) ** int(iexps[t]) * acc
    return total


def _matvec_numpy(v, out, coeffs, flips, pmasks, iexps):
    dim = v.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    out[:] = 0.0
    for t in range(coeffs.shape[0]):
        j = idx ^ flips[t]
        sgn = 1.0 - 2.0 * (np.bitwise_count(j & pmasks[t]) & 1)
        out += coeffs[t] * (1j) ** int(iexps[t]) * sgn * v[j]


if HAVE_NUMBA:
    apply_gates = _apply_gates_loop
    run_circuit = _run_circuit_loop
    expectation_value = _expectation_loop
    matvec_into = _matvec_loop
else:  # pragma: no cover
    apply_gates = _apply_gates_numpy
    run_circuit = _run_circuit_numpy
    expectation_value = _expectation_numpy
    matvec_into = _matvec_numpy
