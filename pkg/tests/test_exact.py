import numpy as np
import pytest

from metavqe.exact import (
    LanczosConvergenceError,
    dense_matrix,
    ground_state,
    ground_state_dense,
    ground_state_lanczos,
)
from metavqe.pauli import PauliSum, PauliTerm, build_xxz, matvec

from test_pauli import kron_matrix, random_pauli_sum


def open_chain_2q(delta: float, lam: float) -> PauliSum:
    return PauliSum(
        2,
        [
            PauliTerm(1.0, {0: "X", 1: "X"}),
            PauliTerm(1.0, {0: "Y", 1: "Y"}),
            PauliTerm(delta, {0: "Z", 1: "Z"}),
            PauliTerm(lam, {0: "Z"}),
            PauliTerm(lam, {1: "Z"}),
        ],
    )


class TestDense:
    def test_dense_matrix_matches_kron_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            h = random_pauli_sum(rng, 3, 6)
            np.testing.assert_allclose(dense_matrix(h), kron_matrix(h), atol=1e-14)

    def test_single_z(self):
        result = ground_state_dense(PauliSum(1, [PauliTerm(1.0, {0: "Z"})]))
        assert result.energy == pytest.approx(-1.0, abs=1e-12)
        np.testing.assert_allclose(np.abs(result.state.amplitudes), [0, 1], atol=1e-12)
        assert result.method == "dense"

    @pytest.mark.parametrize("seed", range(10))
    def test_open_chain_analytic_spectrum(self, seed):
        rng = np.random.default_rng(seed)
        delta = float(rng.uniform(-2, 2))
        lam = float(rng.uniform(-2, 2))
        spectrum = np.linalg.eigvalsh(dense_matrix(open_chain_2q(delta, lam)))
        analytic = np.sort([delta + 2 * lam, delta - 2 * lam, -delta + 2, -delta - 2])
        np.testing.assert_allclose(spectrum, analytic, atol=1e-10)
        result = ground_state_dense(open_chain_2q(delta, lam))
        assert result.energy == pytest.approx(analytic[0], abs=1e-10)

    def test_open_chain_ground_at_origin(self):
        assert ground_state_dense(open_chain_2q(0.0, 0.0)).energy == pytest.approx(-2.0)

    def test_residual_contract(self):
        result = ground_state_dense(build_xxz(6, 0.3, 0.75))
        assert result.residual < 1e-10

    def test_size_limit(self):
        with pytest.raises(ValueError, match="lanczos"):
            ground_state_dense(build_xxz(11, 0.0, 0.0))


class TestLanczos:
    @pytest.mark.parametrize("seed", range(15))
    def test_agrees_with_dense_on_random_sums(self, seed):
        rng = np.random.default_rng(200 + seed)
        n = int(rng.integers(2, 7))
        h = random_pauli_sum(rng, n, 10)
        dense = ground_state_dense(h)
        lanczos = ground_state_lanczos(h, seed=seed)
        assert abs(dense.energy - lanczos.energy) < 1e-8
        assert lanczos.residual < 1e-9
        assert lanczos.method == "lanczos"

    def test_reference_point_cross_check(self):
        # The n=8 reference energy is defined by this oracle pair agreeing.
        h = build_xxz(8, 0.5, 0.75)
        dense = ground_state_dense(h)
        lanczos = ground_state_lanczos(h)
        assert abs(dense.energy - lanczos.energy) < 1e-8

    def test_degenerate_ground_state(self):
        h = build_xxz(4, 1.0, 0.0)
        dense = ground_state_dense(h)
        lanczos = ground_state_lanczos(h, tol=1e-9)
        assert abs(dense.energy - lanczos.energy) < 1e-8
        assert lanczos.residual < 1e-9

    def test_n14_aligned_phase_upper_bound(self):
        # <1...1|H|1...1> = n(delta - field) bounds the ground energy above.
        h = build_xxz(14, -1.1, 0.75)
        result = ground_state_lanczos(h, tol=1e-8)
        assert result.energy <= 14 * (-1.1 - 0.75) + 1e-10
        assert result.residual < 1e-8

    def test_eigenpair_residual_via_matvec(self):
        h = build_xxz(6, -0.4, 0.75)
        result = ground_state_lanczos(h)
        hv = matvec(h, result.state)
        np.testing.assert_allclose(
            hv.amplitudes, result.energy * result.state.amplitudes, atol=1e-8
        )

    def test_nonconvergence_error_carries_best(self):
        h = build_xxz(6, 0.9, 0.3)
        with pytest.raises(LanczosConvergenceError) as info:
            ground_state_lanczos(h, max_krylov=4, tol=1e-12)
        exact_energy = ground_state_dense(h).energy
        assert info.value.best_estimate >= exact_energy - 1e-9

    def test_bad_tolerance(self):
        with pytest.raises(ValueError, match="positive"):
            ground_state_lanczos(build_xxz(2, 0.0, 0.0), tol=0.0)


class TestDispatcher:
    def test_small_uses_dense(self):
        assert ground_state(build_xxz(4, 0.2, 0.1)).method == "dense"

    def test_large_uses_lanczos(self):
        assert ground_state(build_xxz(11, 0.2, 0.1)).method == "lanczos"
