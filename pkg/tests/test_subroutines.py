import numpy as np
import pytest

from qmixed import channels, linalg, states
from qmixed.circuits import (
    CircuitBuilder,
    ProbFunction,
    SubroutineRef,
    circuit_channel,
    circuit_unitary,
    compile_subroutine,
    computed_function,
    inline_subroutines,
    subroutine_gate,
    subroutine_gate_bruteforce,
    to_unitary_circuit,
)
from qmixed.circuits.functions import restrict_to_blank_outputs, shift_unitary
from qmixed.circuits.library import (
    biased_m2,
    deterministic_not,
    fair_coin,
    h_measure,
    nested_coin,
    single_call,
    subroutine_host,
)
from qmixed.errors import ResourceError, ValidationError


def unit(d, i, j):
    e = np.zeros((d, d), dtype=complex)
    e[i, j] = 1
    return e


def blank_restricted(f):
    return restrict_to_blank_outputs(subroutine_gate(f), f)


class TestProbFunction:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            ProbFunction(1, 1, [[0.5, 0.4], [1, 0]])

    def test_shape_checked(self):
        with pytest.raises(ValidationError):
            ProbFunction(1, 1, [[1, 0]])

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            ProbFunction(0, 1, [[1.5, -0.5]])

    def test_deterministic(self):
        f = ProbFunction.deterministic(2, 1, [1, 0, 0, 1])
        assert np.array_equal(f.table, [[0, 1], [1, 0], [1, 0], [0, 1]])

    def test_record_round_trip(self, rng):
        f = ProbFunction.random(2, 2, rng)
        g = ProbFunction.from_record(f.to_record())
        assert np.array_equal(f.table, g.table)


class TestSubroutineGate:
    F = ProbFunction(1, 1, [[0.5, 0.5], [1.0, 0.0]])

    def test_off_diagonal_example(self):
        # inputs 0 and 1 with blank result: f0 x f1 coefficients
        out = blank_restricted(self.F).act(unit(2, 0, 1))
        want = 0.5 * unit(4, 0b00, 0b10) + 0.5 * unit(4, 0b01, 0b10)
        assert np.allclose(out, want, atol=1e-15)

    def test_diagonal_example(self):
        out = blank_restricted(self.F).act(unit(2, 0, 0))
        assert np.allclose(out, np.diag([0.5, 0.5, 0, 0]))
        out = blank_restricted(self.F).act(unit(2, 1, 1))
        assert np.allclose(out, np.diag([0, 0, 1, 0]))

    def test_fair_coin_off_diagonal_has_four_quarters(self):
        out = blank_restricted(fair_coin().f).act(unit(2, 0, 1))
        nz = np.abs(out[np.abs(out) > 1e-12])
        assert len(nz) == 4
        assert np.allclose(nz, 0.25)

    def test_deterministic_gate_is_shift_unitary(self):
        f = ProbFunction.deterministic(1, 1, [1, 0])
        u = shift_unitary(1, 1, [1, 0])
        assert subroutine_gate(f).allclose(channels.from_unitary(u), atol=1e-14)

    @pytest.mark.parametrize("m,p", [(0, 1), (1, 1), (1, 2), (2, 1)])
    def test_compact_form_equals_enumeration(self, rng, m, p):
        for _ in range(5):
            f = ProbFunction.random(m, p, rng)
            a, b = subroutine_gate(f), subroutine_gate_bruteforce(f)
            assert np.max(np.abs(a.choi - b.choi)) <= 1e-12

    def test_enumeration_cap(self, rng):
        with pytest.raises(ResourceError):
            subroutine_gate_bruteforce(ProbFunction.random(4, 2, rng))

    def test_classical_inputs_give_f(self, rng):
        f = ProbFunction.random(2, 1, rng)
        g = blank_restricted(f)
        for i in range(4):
            out = g.act(unit(4, i, i))
            marg = np.real(np.diag(linalg.partial_trace(out, [2])))
            assert np.max(np.abs(marg - f.table[i])) <= 1e-12
            # input register is left in |i>
            reg = np.real(np.diag(linalg.partial_trace(out, [0, 1])))
            assert reg[i] == pytest.approx(1)

    def test_cptp(self, rng):
        f = ProbFunction.random(1, 2, rng)
        assert channels.cptp_violations(subroutine_gate(f).choi, 3, 3) == []


class TestCompile:
    @pytest.mark.parametrize("make", [deterministic_not, fair_coin, biased_m2])
    def test_channel_equals_subroutine_gate(self, make):
        s = make()
        comp = compile_subroutine(s)
        got = circuit_channel(comp)
        assert np.max(np.abs(got.choi - subroutine_gate(s.f).choi)) <= 1e-9

    def test_layout_and_counts(self):
        comp = compile_subroutine(biased_m2())
        assert len(comp.data_inputs) == 3
        assert len(comp.blank_inputs) == 2 + 2 + 1
        counts = comp.meta["gate_counts"]
        assert counts["work_qubits"] == 2 and counts["input_copy"] == 2
        assert counts["total"] == 2 * counts["impl_gates"] + 1 + counts["garbage_detect"] + 2

    def test_compiled_computes_f(self):
        s = biased_m2()
        f = computed_function(compile_subroutine(s))
        # data inputs include the (classically zero) output register
        rows = f.table[::2]
        assert np.max(np.abs(rows - s.f.table)) <= 1e-9

    def test_impl_function_mismatch(self):
        s = fair_coin()
        bad = SubroutineRef(ProbFunction(1, 1, [[0.9, 0.1], [0.5, 0.5]]), s.impl)
        with pytest.raises(ValidationError, match="different function"):
            compile_subroutine(bad)

    def test_impl_must_be_unitary(self):
        s = SubroutineRef(ProbFunction(1, 1, np.full((2, 2), 0.5)), h_measure())
        with pytest.raises(ValidationError, match="unitary"):
            compile_subroutine(s)

    def test_impl_required(self):
        with pytest.raises(ValidationError):
            compile_subroutine(SubroutineRef(ProbFunction(1, 1, np.full((2, 2), 0.5))))

    def test_impl_must_keep_input(self):
        f = ProbFunction.deterministic(1, 1, [0, 1])
        b = CircuitBuilder(2, blank=[1])
        x, y = b.input_wires
        x, y = b.named("CNOT", [x, y])
        (x,) = b.named("H", [x])
        with pytest.raises(ValidationError, match="input register"):
            compile_subroutine(SubroutineRef(f, b.build([x, y], [y])))


class TestInline:
    @pytest.mark.parametrize("make", [fair_coin, biased_m2, nested_coin])
    def test_modes_agree_on_host(self, make):
        host = subroutine_host(make())
        a = circuit_channel(inline_subroutines(host, "semantic"))
        b = circuit_channel(inline_subroutines(host, "compiled"))
        assert np.max(np.abs(a.choi - b.choi)) <= 1e-7

    def test_semantic_is_subroutine_gate(self):
        s = fair_coin()
        got = circuit_channel(inline_subroutines(single_call(s), "semantic"))
        assert got.allclose(blank_restricted(s.f), atol=1e-12)

    def test_no_subroutines_unchanged(self):
        c = h_measure()
        assert inline_subroutines(c, "compiled") is c

    def test_bad_mode(self):
        with pytest.raises(ValidationError):
            inline_subroutines(single_call(fair_coin()), "lazy")

    def test_compiled_gate_count_meta(self):
        out = inline_subroutines(subroutine_host(biased_m2()), "compiled")
        gc = out.meta["gate_counts"]
        assert gc["host_gates"] == 4 and gc["total"] == gc["host_gates"] + gc["subroutine_gates"]

    def test_nested_function_is_fair(self):
        f = computed_function(inline_subroutines(single_call(nested_coin()), "compiled"))
        assert np.allclose(f.table, 0.5, atol=1e-9)


class TestUnitaryCircuit:
    def test_dilated_circuit_preserves_outputs(self, rng):
        c = h_measure()
        u = to_unitary_circuit(c)
        assert u.is_unitary_only()
        rho = states.random_state(1, rng)
        from qmixed.circuits import evaluate

        big = evaluate(u, rho).mat
        keep = linalg.partial_trace(big, list(range(len(c.outputs))))
        assert np.max(np.abs(keep - evaluate(c, rho).mat)) <= 1e-10

    def test_circuit_unitary_of_not(self):
        u = circuit_unitary(deterministic_not().impl)
        # |x, 0> -> |x, NOT x>
        assert abs(u[0b01, 0b00]) == pytest.approx(1)
        assert abs(u[0b10, 0b10]) == pytest.approx(1)
        assert linalg.is_unitary(u)

    def test_circuit_unitary_rejects_channels(self):
        with pytest.raises(ValidationError):
            circuit_unitary(h_measure())
