"""Ground-truth ground-state energies.

Small registers go through a dense Hermitian eigensolve; larger ones use a
matrix-free Lanczos iteration with full reorthogonalization built on the
same term-by-term kernels as the simulator, so the two paths cross-check
each other. Every returned (energy, state) pair is certified by its residual
norm ||H v - E v||.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _engine
from .pauli import PauliSum, compile_observable
from .rng import SplitMix64
from .statevector import Statevector

DENSE_MAX_QUBITS = 10

_SINGLE = {
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


class LanczosConvergenceError(RuntimeError):
    """Lanczos failed to reach the requested residual; carries best estimate."""

    def __init__(self, message: str, best_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate


@dataclass
class SpectrumResult:
    energy: float
    state: Statevector | None
    method: str  # "dense" or "lanczos"
    residual: float


def dense_matrix(h: PauliSum) -> np.ndarray:
    """Full 2^n x 2^n matrix (qubit 0 on the lowest-order index bit)."""
    if h.nqubits > DENSE_MAX_QUBITS:
        raise ValueError(
            f"dense matrix limited to {DENSE_MAX_QUBITS} qubits, got {h.nqubits}"
        )
    dim = 2**h.nqubits
    total = np.zeros((dim, dim), dtype=np.complex128)
    identity = np.eye(2, dtype=np.complex128)
    for term in h.terms:
        ops = term.operators
        block = np.ones((1, 1), dtype=np.complex128)
        for q in range(h.nqubits):
            block = np.kron(_SINGLE.get(ops.get(q, "I"), identity), block)
        total += term.coefficient * block
    return total


def _residual(h: PauliSum, amps: np.ndarray, energy: float) -> float:
    obs = compile_observable(h)
    out = np.empty_like(amps)
    _engine.matvec_into(amps, out, obs.coeffs, obs.flips, obs.pmasks, obs.iexps)
    return float(np.linalg.norm(out - energy * amps))


def ground_state_dense(h: PauliSum) -> SpectrumResult:
    """Smallest eigenvalue and eigenvector by dense diagonalization."""
    if h.nqubits > DENSE_MAX_QUBITS:
        raise ValueError(
            f"dense diagonalization limited to {DENSE_MAX_QUBITS} qubits "
            f"(got {h.nqubits}); use ground_state_lanczos"
        )
    eigvals, eigvecs = np.linalg.eigh(dense_matrix(h))
    energy = float(eigvals[0])
    amps = np.ascontiguousarray(eigvecs[:, 0])
    return SpectrumResult(
        energy, Statevector(amps, h.nqubits), "dense", _residual(h, amps, energy)
    )


def ground_state_lanczos(
    h: PauliSum,
    max_krylov: int = 500,
    tol: float = 1e-9,
    seed: int = 0,
) -> SpectrumResult:
    """Lowest eigenvalue via Lanczos with full reorthogonalization.

    Matrix-vector products go through the Pauli-term kernels, so no 2^n x 2^n
    matrix is formed. The iteration stops once the Ritz pair's true residual
    drops below `tol`.
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    dim = 2**h.nqubits
    max_krylov = min(max_krylov, dim)
    obs = compile_observable(h)

    rng = SplitMix64(seed)
    start = rng.uniform(-1.0, 1.0, dim) + 1j * rng.uniform(-1.0, 1.0, dim)
    start /= np.linalg.norm(start)

    basis = np.zeros((max_krylov, dim), dtype=np.complex128)
    basis[0] = start
    alphas: list[float] = []
    betas: list[float] = []
    hv = np.empty(dim, dtype=np.complex128)
    best = np.inf

    def ritz(k: int) -> tuple[float, np.ndarray]:
        tri = np.diag(np.array(alphas[:k]))
        if k > 1:
            off = np.array(betas[: k - 1])
            tri += np.diag(off, 1) + np.diag(off, -1)
        vals, vecs = np.linalg.eigh(tri)
        return float(vals[0]), vecs[:, 0]

    _engine.matvec_into(basis[0], hv, obs.coeffs, obs.flips, obs.pmasks, obs.iexps)
    w = hv.copy()
    alphas.append(float(np.real(np.vdot(basis[0], w))))
    w -= alphas[0] * basis[0]

    for k in range(1, max_krylov + 1):
        # Full reorthogonalization (twice, for numerical safety).
        for _ in range(2):
            coeffs = basis[:k].conj() @ w
            w -= basis[:k].T @ coeffs
        beta = float(np.linalg.norm(w))
        exhausted = beta < 1e-13 or k == max_krylov
        if not exhausted:
            betas.append(beta)
            basis[k] = w / beta
            _engine.matvec_into(basis[k], hv, obs.coeffs, obs.flips, obs.pmasks, obs.iexps)
            w = hv - beta * basis[k - 1]
            alphas.append(float(np.real(np.vdot(basis[k], w))))
            w -= alphas[k] * basis[k]

        check = exhausted or (k >= 10 and k % 5 == 0)
        if check:
            energy, coeffs = ritz(k)
            best = min(best, energy)
            estimate = 0.0 if exhausted else abs(betas[-1] * coeffs[-1])
            if exhausted or estimate < tol:
                amps = basis[:k].T @ coeffs
                amps /= np.linalg.norm(amps)
                res = _residual(h, amps, energy)
                if res < tol:
                    return SpectrumResult(
                        energy, Statevector(amps, h.nqubits), "lanczos", res
                    )
                if exhausted:
                    break

    raise LanczosConvergenceError(
        f"no Ritz pair reached residual {tol} within {max_krylov} Lanczos steps",
        best,
    )


def ground_state(h: PauliSum, seed: int = 0) -> SpectrumResult:
    """Oracle dispatcher: dense when feasible, Lanczos beyond."""
    if h.nqubits <= DENSE_MAX_QUBITS:
        return ground_state_dense(h)
    return ground_state_lanczos(h, seed=seed)
