import numpy as np
import pytest

from metavqe.circuit import (
    CnotGate,
    Const,
    Gaussian,
    Linear,
    ParamRegistry,
    RotY,
    RotZ,
    Var,
    bind_and_run,
    build_encoding_layers,
    build_ga_circuit,
    build_meta_circuit,
    build_processing_layers,
    build_ucc_circuit,
    eval_param_expr,
    parse_generator_file,
)
from metavqe.pauli import HamiltonianParseError, PauliTerm


class TestEvalParamExpr:
    def test_linear_example(self):
        value, partials = eval_param_expr(
            Linear("w", "delta", "phi"), {"delta": 0.5}, {"w": 2.0, "phi": 0.1}
        )
        assert value == pytest.approx(1.1)
        assert partials == {"w": 0.5, "phi": 1.0}

    def test_gaussian_at_init(self):
        value, partials = eval_param_expr(
            Gaussian("a", "b", "g", "d0", "d"),
            {"d": 1.0},
            {"a": 0.0, "b": 1.0, "g": 1.0, "d0": 0.0},
        )
        assert value == 0.0
        assert partials == {"a": 1.0, "b": 0.0, "g": 0.0, "d0": 1.0}

    def test_const_and_var(self):
        assert eval_param_expr(Const(0.25), {}, {}) == (0.25, {})
        value, partials = eval_param_expr(Var("t"), {}, {"t": -0.3})
        assert value == -0.3
        assert partials == {"t": 1.0}

    @pytest.mark.parametrize("squared", [False, True])
    @pytest.mark.parametrize("seed", range(5))
    def test_partials_match_finite_differences(self, squared, seed):
        rng = np.random.default_rng(seed)
        values = {
            "a": rng.uniform(-1, 1),
            "b": rng.uniform(-1, 1),
            "g": rng.uniform(-1, 1),
            "d0": rng.uniform(-1, 1),
        }
        meta = {"x": rng.uniform(-1, 1)}
        expr = Gaussian("a", "b", "g", "d0", "x", squared=squared)
        _, partials = eval_param_expr(expr, meta, values)
        h = 1e-6
        for handle in values:
            up = dict(values)
            down = dict(values)
            up[handle] += h
            down[handle] -= h
            fd = (eval_param_expr(expr, meta, up)[0] - eval_param_expr(expr, meta, down)[0]) / (2 * h)
            assert partials.get(handle, 0.0) == pytest.approx(fd, abs=1e-6)

    def test_missing_binding_raises(self):
        with pytest.raises(KeyError):
            eval_param_expr(Linear("w", "delta", "phi"), {}, {"w": 1.0, "phi": 0.0})


class TestRegistry:
    def test_duplicate_name_rejected(self):
        reg = ParamRegistry()
        reg.add("a", "encoding")
        with pytest.raises(ValueError, match="duplicate"):
            reg.add("a", "processing")

    def test_order_and_defaults(self):
        reg = ParamRegistry()
        reg.add("a", "encoding", 0.0)
        reg.add("b", "processing", 1.0)
        assert reg.names == ("a", "b")
        np.testing.assert_array_equal(reg.initial_values(), [0.0, 1.0])
        assert reg.values_dict([3.0, 4.0]) == {"a": 3.0, "b": 4.0}

    def test_values_dict_length_check(self):
        reg = ParamRegistry()
        reg.add("a", "encoding")
        with pytest.raises(ValueError, match="expected 1"):
            reg.values_dict([1.0, 2.0])


class TestLayerBuilders:
    def test_encoding_n2_l1_structure(self):
        frag = build_encoding_layers(2, 1)
        kinds = [type(g).__name__ for g in frag.gates]
        assert kinds == ["RotZ", "RotY", "RotZ", "RotY", "CnotGate", "CnotGate"]
        assert frag.gates[0].target == 0 and isinstance(frag.gates[0], RotZ)
        assert frag.gates[1].target == 0 and isinstance(frag.gates[1], RotY)
        assert (frag.gates[4].control, frag.gates[4].target) == (0, 1)
        assert (frag.gates[5].control, frag.gates[5].target) == (1, 0)
        assert frag.registry.size == 8

    def test_encoding_param_count_n8_l2(self):
        frag = build_encoding_layers(8, 2)
        assert frag.registry.size == 64
        assert frag.registry.count("encoding") == 64

    def test_total_count_n14(self):
        circuit = build_meta_circuit(14, 2, 2)
        assert circuit.registry.size == 168

    def test_processing_counts(self):
        assert build_processing_layers(8, 2).registry.size == 32
        assert build_processing_layers(10, 4).registry.size == 80
        assert build_processing_layers(2, 1).registry.size == 4

    @pytest.mark.parametrize("n", range(2, 15))
    @pytest.mark.parametrize("l1,l2", [(0, 1), (1, 0), (2, 2), (4, 3), (0, 4)])
    def test_count_identities(self, n, l1, l2):
        meta = build_meta_circuit(n, l1, l2)
        assert meta.registry.count("encoding") == 4 * n * l1
        assert meta.registry.count("processing") == 2 * n * l2
        assert meta.registry.size == n * (4 * l1 + 2 * l2)
        ga = build_ga_circuit(n, l1 + l2)
        assert ga.registry.size == n * (2 * l1 + 2 * l2)

    def test_cnot_ring_shape(self):
        frag = build_processing_layers(5, 1)
        ring = [g for g in frag.gates if isinstance(g, CnotGate)]
        assert [(g.control, g.target) for g in ring] == [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]

    def test_gaussian_encoding_defaults(self):
        frag = build_encoding_layers(2, 1, encoding="gaussian")
        assert frag.registry.size == 16  # 4 handles per rotation site
        inits = frag.registry.initial_values()
        # alpha, beta, gamma, delta per site -> defaults 0, 1, 1, 0
        np.testing.assert_array_equal(inits.reshape(-1, 4), [[0, 1, 1, 0]] * 4)


class TestBindAndRun:
    def test_zeros_give_reference_state(self):
        circuit = build_meta_circuit(3, 2, 1)
        state = bind_and_run(circuit, {"delta": 1.7}, np.zeros(circuit.registry.size))
        expected = np.zeros(8)
        expected[0] = 1.0
        np.testing.assert_allclose(state.amplitudes, expected, atol=1e-15)

    def test_gaussian_init_matches_linear_zeros(self):
        lin = build_meta_circuit(2, 1, 1, encoding="linear")
        gau = build_meta_circuit(2, 1, 1, encoding="gaussian")
        for d in (-1.0, 0.2, 2.5):
            a = bind_and_run(lin, {"delta": d}, lin.registry.initial_values())
            b = bind_and_run(gau, {"delta": d}, gau.registry.initial_values())
            np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-12)

    def test_linear_w1_delta_pi_single_ry(self):
        # One RY with angle = 1.0 * delta + 0 at delta = pi must flip the qubit.
        from metavqe.circuit import CircuitBuilder

        builder = CircuitBuilder(1)
        reg = builder.registry
        builder._gates.append(RotY(0, Linear(reg.add("w", "encoding", 0.0), "delta", reg.add("p", "encoding", 0.0))))
        builder._note_symbol("delta")
        circuit = builder.build()
        state = bind_and_run(circuit, {"delta": np.pi}, np.array([1.0, 0.0]))
        np.testing.assert_allclose(np.abs(state.amplitudes), [0.0, 1.0], atol=1e-15)

    def test_ga_reduction_weights_zero(self):
        # With all encoding weights zero the state cannot depend on delta.
        circuit = build_meta_circuit(3, 2, 1)
        rng = np.random.default_rng(1)
        params = rng.uniform(-1, 1, circuit.registry.size)
        for name in circuit.registry.names:
            if name.endswith("_w"):
                params[circuit.registry.index(name)] = 0.0
        a = bind_and_run(circuit, {"delta": -0.9}, params)
        b = bind_and_run(circuit, {"delta": 1.3}, params)
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-12)

    def test_pure_function_bitwise(self):
        circuit = build_meta_circuit(3, 1, 1)
        rng = np.random.default_rng(2)
        params = rng.uniform(-2, 2, circuit.registry.size)
        a = bind_and_run(circuit, {"delta": 0.3}, params)
        b = bind_and_run(circuit, {"delta": 0.3}, params)
        assert np.array_equal(a.amplitudes, b.amplitudes)

    def test_unbound_symbol_raises(self):
        circuit = build_meta_circuit(2, 1, 0)
        with pytest.raises(KeyError, match="delta"):
            bind_and_run(circuit, {}, np.zeros(circuit.registry.size))

    def test_wrong_parameter_count_raises(self):
        circuit = build_meta_circuit(2, 1, 0)
        with pytest.raises(ValueError, match="expected 8"):
            bind_and_run(circuit, {"delta": 0.0}, np.zeros(3))


class TestUccCircuit:
    def test_zero_angle_keeps_reference(self):
        circuit = build_ucc_circuit("00", [(PauliTerm(1.0, {0: "X", 1: "X"}), "t")], 1)
        state = bind_and_run(circuit, {}, np.zeros(1))
        np.testing.assert_allclose(state.amplitudes, [1, 0, 0, 0], atol=1e-15)

    def test_pi_angle_reaches_flipped_state(self):
        circuit = build_ucc_circuit("00", [(PauliTerm(1.0, {0: "X", 1: "X"}), "t")], 1)
        state = bind_and_run(circuit, {}, np.array([np.pi]))
        np.testing.assert_allclose(np.abs(state.amplitudes), [0, 0, 0, 1], atol=1e-15)

    def test_repetitions_share_handles(self):
        gens = [
            (PauliTerm(1.0, {0: "X", 1: "Y"}), "t1"),
            (PauliTerm(1.0, {2: "X", 3: "Y"}), "t2"),
        ]
        circuit = build_ucc_circuit("0011", gens, 2)
        assert len(circuit.gates) == 4
        assert circuit.registry.size == 2
        assert circuit.reference == "0011"

    def test_reference_state_used(self):
        circuit = build_ucc_circuit("01", [(PauliTerm(1.0, {0: "Z"}), "t")], 1)
        state = bind_and_run(circuit, {}, np.zeros(1))
        np.testing.assert_allclose(np.abs(state.amplitudes), [0, 0, 1, 0], atol=1e-15)

    def test_generator_out_of_range(self):
        with pytest.raises(ValueError, match="acts on qubit 3"):
            build_ucc_circuit("00", [(PauliTerm(1.0, {3: "X"}), "t")], 1)

    def test_linear_encoded_angles(self):
        circuit = build_ucc_circuit(
            "00", [(PauliTerm(1.0, {0: "X", 1: "X"}), "t")], 1, encoding="linear", symbol="d"
        )
        assert circuit.registry.size == 2
        assert circuit.meta_symbols == ("d",)
        # w = pi, offset = 0 at d = 1 gives the pi rotation
        state = bind_and_run(circuit, {"d": 1.0}, np.array([np.pi, 0.0]))
        np.testing.assert_allclose(np.abs(state.amplitudes), [0, 0, 0, 1], atol=1e-14)


class TestGeneratorFile:
    def test_parse(self):
        text = "qubits 4\nreference 0011\nt1 X0 X1 Y2 Y3\nt2 Y0 Y1 X2 X3\nt1 Z0 Z1\n"
        reference, generators, n = parse_generator_file(text)
        assert (reference, n) == ("0011", 4)
        assert [name for _, name in generators] == ["t1", "t2", "t1"]
        circuit = build_ucc_circuit(reference, generators, 2)
        assert circuit.registry.size == 2  # t1 shared across sites and reps
        assert len(circuit.gates) == 6

    def test_missing_reference(self):
        with pytest.raises(HamiltonianParseError, match="reference"):
            parse_generator_file("qubits 2\nt1 X0 X1\n")

    def test_bad_reference_length(self):
        with pytest.raises(HamiltonianParseError, match="2-bit"):
            parse_generator_file("qubits 2\nreference 011\n")

    def test_index_out_of_range(self):
        with pytest.raises(HamiltonianParseError, match="out of range"):
            parse_generator_file("qubits 2\nreference 00\nt1 X5\n")
