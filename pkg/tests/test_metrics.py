import numpy as np
import pytest

from qmixed import channels, metrics, states
from qmixed.circuits import ProbFunction, gates
from qmixed.circuits.library import dephasing
from qmixed.errors import DimensionError, ResourceError
from qmixed.verify import perturbed_chain, perturbed_function, small_unitary

PLUS = np.array([1, 1]) / np.sqrt(2)
FAST = dict(restarts=8)


def depolarizing(p):
    ks = [np.sqrt(1 - 3 * p / 4) * gates.I] + [np.sqrt(p / 4) * g for g in (gates.X, gates.Y, gates.Z)]
    return channels.from_kraus(ks)


class TestClassical:
    def test_tvd_no_half(self):
        assert metrics.tvd([1, 0], [0, 1]) == 2
        assert metrics.tvd([0.5, 0.5], [0.5, 0.5]) == 0

    def test_tvd_shape(self):
        with pytest.raises(DimensionError):
            metrics.tvd([1], [0.5, 0.5])

    def test_function_distance_is_worst_row(self):
        f = ProbFunction(1, 1, [[1, 0], [0.5, 0.5]])
        g = ProbFunction(1, 1, [[0.9, 0.1], [0, 1]])
        d = metrics.function_distance(f, g)
        assert np.allclose(d.per_input, [0.2, 1.0])
        assert d.max == pytest.approx(1.0)


class TestTraceDistance:
    def test_zero_vs_plus(self):
        d = metrics.trace_distance(states.basis_state("0"), states.pure(PLUS))
        assert d == pytest.approx(np.sqrt(2), abs=1e-12)

    def test_orthogonal_states(self):
        assert metrics.trace_distance(states.basis_state("0"), states.basis_state("1")) == pytest.approx(2)

    def test_best_measurement_attains_trace_distance(self, rng):
        for _ in range(10):
            r, s = states.random_state(2, rng), states.random_state(2, rng)
            val, projs = metrics.max_measurement_tvd(r, s)
            assert abs(val - metrics.trace_distance(r, s)) <= 1e-9
            assert np.allclose(sum(projs), np.eye(4), atol=1e-12)

    def test_random_measurements_do_not_beat_it(self, rng):
        r, s = states.random_state(2, rng), states.random_state(2, rng)
        best = metrics.trace_distance(r, s)
        for _ in range(50):
            u = channels.random_unitary(2, rng)
            projs = [np.outer(u[:, k], u[:, k].conj()) for k in range(4)]
            assert metrics.measurement_tvd(r, s, projs) <= best + 1e-9


class TestDiamond:
    def test_identity_channel_is_one(self):
        assert metrics.diamond_norm(channels.identity(1)).value == pytest.approx(1, abs=1e-9)

    @pytest.mark.parametrize("shape", [(1, 1), (1, 2), (2, 1), (2, 2)])
    def test_cptp_maps_are_one(self, shape):
        t = channels.random_cptp(*shape, seed=sum(shape))
        assert metrics.diamond_norm(t, **FAST).value == pytest.approx(1, abs=1e-4)

    def test_zero_map(self):
        t = channels.identity(1)
        assert metrics.diamond_norm(t - t).value == 0

    @pytest.mark.parametrize("theta", [0.3, np.pi / 2, 2.0, np.pi])
    def test_identity_vs_phase(self, theta):
        want = 2 * np.sin(theta / 2)
        got = metrics.diamond_distance(channels.identity(1), channels.from_unitary(gates.phase(theta)))
        assert got.value == pytest.approx(want, abs=1e-3)
        assert metrics.unitary_pair_diamond(np.eye(2), gates.phase(theta)) == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize("p", [0.1, 0.5, 1.0])
    def test_depolarizing(self, p):
        got = metrics.diamond_distance(depolarizing(p), channels.identity(1)).value
        assert got == pytest.approx(1.5 * p, abs=1e-3)

    @pytest.mark.parametrize("p", [0.05, 0.3])
    def test_dephasing(self, p):
        got = metrics.diamond_distance(dephasing(p), channels.identity(1)).value
        assert got == pytest.approx(2 * p, abs=1e-3)

    def test_transpose_gap(self):
        t = metrics.transpose_map()
        assert metrics.naive_norm(t) <= 1 + 1e-6
        assert metrics.diamond_norm(t).value >= 2 - 1e-3

    def test_naive_at_most_diamond(self, rng):
        for _ in range(3):
            a, b = channels.random_cptp(1, 1, rng), channels.random_cptp(1, 1, rng)
            d = a - b
            assert metrics.naive_norm(d, **FAST) <= metrics.diamond_norm(d, **FAST).value + 1e-6

    def test_witness_is_exact_lower_bound(self, rng):
        d = channels.random_cptp(1, 1, rng) - channels.random_cptp(1, 1, rng)
        res = metrics.diamond_norm(d, **FAST)
        assert metrics.witness_value(d, res.witness) == pytest.approx(res.value, abs=1e-12)
        assert np.linalg.norm(res.witness) == pytest.approx(1)
        assert res.lower_bound == res.value

    def test_spread_and_restarts(self, rng):
        d = channels.random_cptp(1, 1, rng) - channels.identity(1)
        res = metrics.diamond_norm(d, restarts=5)
        assert res.restarts_used == 5 and len(res.restart_values) == 5
        assert res.spread == pytest.approx(res.restart_values.max() - res.restart_values.min())
        assert res.value == res.restart_values.max()

    def test_seed_determinism(self, rng):
        d = channels.random_cptp(1, 1, rng) - channels.identity(1)
        a = metrics.diamond_norm(d, restarts=4, seed=7)
        b = metrics.diamond_norm(d, restarts=4, seed=7)
        assert a.value == b.value and np.array_equal(a.witness, b.witness)

    def test_subadditive_and_homogeneous(self, rng):
        a = channels.random_cptp(1, 1, rng) - channels.identity(1)
        b = channels.random_cptp(1, 1, rng) - channels.identity(1)
        na, nb = metrics.diamond_norm(a, **FAST).value, metrics.diamond_norm(b, **FAST).value
        assert metrics.diamond_norm(a + b, **FAST).value <= na + nb + 1e-3
        assert metrics.diamond_norm(3 * a, **FAST).value == pytest.approx(3 * na, abs=3e-3)

    def test_size_cap(self):
        with pytest.raises(ResourceError):
            metrics.diamond_norm(channels.identity(5))

    def test_record(self, rng):
        res = metrics.diamond_norm(channels.identity(1), restarts=2)
        rec = res.to_record(1e-4, include_witness=False)
        assert rec["value"] == pytest.approx(1)
        assert "witness" not in rec


class TestUnitaryPair:
    def test_equal_is_zero(self, rng):
        u = channels.random_unitary(2, rng)
        assert metrics.unitary_pair_diamond(u, u) == pytest.approx(0, abs=1e-7)

    def test_global_phase_is_zero(self, rng):
        u = channels.random_unitary(1, rng)
        assert metrics.unitary_pair_diamond(u, np.exp(0.4j) * u) == pytest.approx(0, abs=1e-7)

    def test_x_vs_z_is_two(self):
        assert metrics.unitary_pair_diamond(gates.X, gates.Z) == pytest.approx(2)

    def test_matches_estimator(self, rng):
        for _ in range(5):
            v = small_unitary(1, rng, rng.uniform(0.1, 1.5))
            want = metrics.unitary_pair_diamond(v, np.eye(2))
            got = metrics.diamond_distance(channels.from_unitary(v), channels.identity(1)).value
            assert got == pytest.approx(want, abs=1e-3)


class TestErrorAccumulation:
    def test_chain_bound(self, rng):
        pairs, eps = perturbed_chain(1, 4, rng)
        rep = metrics.verify_error_accumulation(pairs, eps, **FAST)
        assert rep.passed
        assert len(rep.prefix_errors) == 4
        assert rep.prefix_bounds == pytest.approx(np.cumsum(eps))

    def test_estimated_eps(self, rng):
        pairs, _ = perturbed_chain(1, 2, rng)
        assert metrics.verify_error_accumulation(pairs, **FAST).passed

    def test_violation_detected(self, rng):
        pairs, eps = perturbed_chain(1, 2, rng)
        rep = metrics.verify_error_accumulation(pairs, [e / 10 for e in eps], tol=0.0, **FAST)
        assert not rep.passed and rep.worst_slack < 0

    def test_subroutine_bound(self, rng):
        for _ in range(3):
            f = ProbFunction.random(1, 1, rng)
            rep = metrics.verify_subroutine_error(f, perturbed_function(f, rng), **FAST)
            assert rep.passed
            assert rep.rhs == pytest.approx(5 * rep.function_distance)


# Diamond norms of random_cptp(shape, a) - random_cptp(shape, b), computed once
# with a semidefinite-programming solver and frozen here.
SDP_VALUES = [
    ((1, 1), 11, 12, 1.414009306),
    ((1, 1), 13, 14, 1.125452331),
    ((1, 2), 21, 22, 1.022532490),
    ((2, 1), 31, 32, 1.331346556),
    ((2, 2), 41, 42, 1.167041609),
]


@pytest.mark.parametrize("shape,a,b,want", SDP_VALUES)
def test_diamond_matches_sdp_reference(shape, a, b, want):
    t = channels.random_cptp(*shape, seed=a) - channels.random_cptp(*shape, seed=b)
    got = metrics.diamond_norm(t).value
    assert got == pytest.approx(want, abs=1e-4)
    # the estimate is attained by a witness, so it cannot exceed the true norm
    assert got <= want + 1e-6
