import numpy as np
import pytest

from qmixed import linalg, states
from qmixed.errors import DimensionError, ParseError, ValidationError

PLUS = np.array([1, 1]) / np.sqrt(2)
MINUS = np.array([1, -1]) / np.sqrt(2)


def assert_valid(rho):
    m = rho.mat
    assert np.allclose(m, m.conj().T, atol=1e-9)
    assert np.linalg.eigvalsh(m)[0] >= -states.TOL_PSD
    assert abs(np.trace(m) - 1) <= states.TOL_TRACE


class TestPure:
    def test_zero(self):
        assert np.array_equal(states.pure([1, 0]).mat, [[1, 0], [0, 0]])

    def test_plus_all_half(self):
        assert np.allclose(states.pure(PLUS).mat, 0.5)

    def test_rank_one_spectrum(self, rng):
        rho = states.pure(states.random_pure_vector(3, rng))
        w, _ = linalg.herm_eig(rho.mat)
        assert np.allclose(w, [1] + [0] * 7, atol=1e-12)

    def test_rejects_non_unit(self):
        with pytest.raises(ValidationError):
            states.pure([1, 1])

    def test_rejects_non_qubit_length(self):
        with pytest.raises(DimensionError):
            states.pure(np.ones(3) / np.sqrt(3))


class TestMixtures:
    def test_even_basis_mixture(self):
        assert np.allclose(states.from_mixture([(0.5, [1, 0]), (0.5, [0, 1])]).mat, np.eye(2) / 2)

    def test_single_item_is_pure(self, rng):
        v = states.random_pure_vector(2, rng)
        assert states.from_mixture([(1.0, v)]).allclose(states.pure(v))

    def test_different_ensembles_same_matrix(self):
        a = states.from_mixture([(0.5, [1, 0]), (0.5, [0, 1])])
        b = states.from_mixture([(0.5, PLUS), (0.5, MINUS)])
        assert a.allclose(b, atol=1e-15)

    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            states.Mixture(((0.5, np.array([1, 0])),))

    def test_linear_in_weights(self, rng):
        vs = [states.random_pure_vector(2, rng) for _ in range(4)]
        q = 0.3
        m1 = states.from_mixture([(0.4, vs[0]), (0.6, vs[1])])
        m2 = states.from_mixture([(0.1, vs[2]), (0.9, vs[3])])
        joint = states.from_mixture(
            [(q * 0.4, vs[0]), (q * 0.6, vs[1]), ((1 - q) * 0.1, vs[2]), ((1 - q) * 0.9, vs[3])]
        )
        assert np.max(np.abs(joint.mat - (q * m1.mat + (1 - q) * m2.mat))) <= 1e-12


class TestEigenMixture:
    def test_maximally_mixed(self):
        mix = states.eigen_mixture(states.maximally_mixed(1))
        assert len(mix) == 2
        assert all(p == pytest.approx(0.5) for p, _ in mix.items)
        assert abs(np.vdot(mix.items[0][1], mix.items[1][1])) < 1e-12

    def test_pure_single_item_with_fixed_phase(self, rng):
        v = states.random_pure_vector(2, rng) * np.exp(0.7j)
        mix = states.eigen_mixture(states.pure(v))
        assert len(mix) == 1
        p, w = mix.items[0]
        assert p == pytest.approx(1.0)
        k = np.argmax(np.abs(w))
        assert w[k].imag == pytest.approx(0, abs=1e-12) and w[k].real > 0
        assert abs(abs(np.vdot(w, v)) - 1) < 1e-12

    def test_round_trip(self, rng):
        vs = [states.random_pure_vector(3, rng) for _ in range(5)]
        ps = rng.dirichlet(np.ones(5))
        rho = states.from_mixture(list(zip(ps, vs)))
        back = states.from_mixture(states.eigen_mixture(rho))
        assert np.max(np.abs(back.mat - rho.mat)) <= 1e-9


class TestValidate:
    def test_accepts_random(self, rng):
        for n in range(4):
            assert_valid(states.random_state(n, rng))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValidationError):
            states.validate(np.diag([1.1, -0.1]))

    def test_rejects_bad_trace(self):
        with pytest.raises(ValidationError):
            states.validate(np.diag([0.5, 0.4]))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            states.validate(np.array([[0.5, 0.1], [0.0, 0.5]]))

    def test_repair_clamps_tiny_negatives(self):
        rho = states.validate(np.diag([1 + 1e-9, -1e-9]), repair=True)
        assert np.all(np.linalg.eigvalsh(rho.mat) >= 0)
        assert np.trace(rho.mat) == pytest.approx(1, abs=1e-15)

    def test_strict_mode_allows_tolerance_band(self):
        states.validate(np.diag([1 + 5e-9, -5e-9]))

    def test_immutable(self, rng):
        rho = states.random_state(1, rng)
        with pytest.raises(ValueError):
            rho.mat[0, 0] = 2


class TestReduceAndBasis:
    def test_reduce_product(self, rng):
        a, b = states.random_state(1, rng), states.random_state(2, rng)
        assert states.reduce(a.tensor(b), [0]).allclose(a)
        assert states.reduce(a.tensor(b), [1, 2]).allclose(b)

    def test_reduce_is_valid(self, rng):
        for _ in range(10):
            assert_valid(states.reduce(states.random_state(3, rng), [0, 2]))

    def test_basis_states(self):
        assert np.array_equal(states.basis_state("00").mat, np.diag([1, 0, 0, 0]))
        assert np.array_equal(states.basis_state("1").mat, np.diag([0, 1]))
        for i in range(8):
            m = states.basis_index_state(i, 3).mat
            assert m[i, i] == 1 and np.count_nonzero(m) == 1

    def test_basis_state_rejects_garbage(self):
        with pytest.raises(ValidationError):
            states.basis_state("012")

    def test_diagonal_states_are_distributions(self, rng):
        p = rng.dirichlet(np.ones(8))
        rho = states.validate(np.diag(p))
        assert np.array_equal(rho.probabilities(), p)
        marg = states.reduce(rho, [0]).probabilities()
        assert np.allclose(marg, [p[:4].sum(), p[4:].sum()], atol=1e-15)

    def test_record_round_trip(self, rng):
        rho = states.random_state(2, rng)
        assert states.DensityMatrix.from_record(rho.to_record()).allclose(rho, atol=0)

    def test_record_qubit_count_checked(self, rng):
        rec = states.random_state(1, rng).to_record()
        rec["n_qubits"] = 2
        with pytest.raises(ParseError):
            states.DensityMatrix.from_record(rec)
