"""Executable checks of the library's identities and bounds, grouped in suites.

Each property reports a residual (how far the computed quantity is from the
identity, or how much a bound is exceeded) and passes when the residual is at
most its tolerance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from . import analysis, channels, linalg, metrics, states
from .circuits import core, library
from .circuits.compiler import compile_subroutine, inline_subroutines
from .circuits.core import Circuit, Node, circuit_channel, computed_function, evaluate, random_circuit, topo_sort
from .circuits.functions import ProbFunction, subroutine_gate, subroutine_gate_bruteforce

SUITES = ("gs", "theorem2", "errors", "norms", "causality")


@dataclass(frozen=True)
class PropertyResult:
    suite: str
    name: str
    residual: float
    tolerance: float
    cases: int
    seconds: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_record(self) -> dict:
        return {
            "suite": self.suite,
            "property": self.name,
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "cases": self.cases,
            "passed": self.passed,
        }


def random_function(m: int, p: int, rng: np.random.Generator) -> ProbFunction:
    return ProbFunction.random(m, p, rng)


def perturbed_function(f: ProbFunction, rng: np.random.Generator, scale: float = 0.1) -> ProbFunction:
    """Random nearby table: add uniform noise of size ``scale`` and renormalize rows."""
    t = np.clip(f.table + rng.uniform(-scale, scale, size=f.table.shape), 0.0, None)
    t[t.sum(axis=1) == 0, 0] = 1.0
    return ProbFunction(f.m, f.p, t / t.sum(axis=1, keepdims=True))


def small_unitary(n: int, rng: np.random.Generator, angle: float) -> np.ndarray:
    """``exp(-i angle H)`` for a random Hermitian ``H`` of operator norm 1."""
    h = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    h = (h + h.conj().T) / 2
    return expm(-1j * angle * h / np.linalg.norm(h, 2))


def perturbed_chain(n: int, length: int, rng: np.random.Generator):
    """Random CPTP chain with each gate preceded by a small unitary error.

    Returns the ``(T_j, T_j')`` pairs and the exact errors of the unitary
    perturbations, which bound the per-gate errors ``||T_j' - T_j||``.
    """
    pairs, eps = [], []
    for _ in range(length):
        t = channels.random_cptp(n, n, rng)
        w = small_unitary(n, rng, rng.uniform(0.01, 0.3))
        pairs.append((t, channels.compose(t, channels.from_unitary(w))))
        eps.append(metrics.unitary_pair_diamond(w, np.eye(2**n)))
    return pairs, eps


def append_gate(c: Circuit, gate, positions, kind: str = "channel") -> Circuit:
    """Copy of ``c`` with one more gate on the outputs at ``positions``."""
    top = max([c.n_wires_in - 1] + [w for n in c.nodes for w in n.out_wires])
    ins = [c.outputs[p] for p in positions]
    outs = list(range(top + 1, top + 1 + gate.n_out))
    node = Node(f"extra{len(c.nodes)}", gate, tuple(ins), tuple(outs), kind)
    new_outputs = list(c.outputs)
    for p, w in zip(positions, outs):
        new_outputs[p] = w
    return Circuit(c.n_wires_in, c.nodes + (node,), c.blank_inputs, (), tuple(new_outputs))


def _run(suite: str, name: str, tol: float, fn: Callable[[], tuple[float, int]]) -> PropertyResult:
    t0 = time.perf_counter()
    residual, cases = fn()
    return PropertyResult(suite, name, float(residual), tol, cases, time.perf_counter() - t0)


# ---------------------------------------------------------------- suites


def suite_gs(rng: np.random.Generator, tol: float | None) -> list[PropertyResult]:
    def compact_vs_enumeration():
        worst, n = 0.0, 0
        for m, p in ((1, 1), (1, 2), (2, 1)):
            for _ in range(20):
                f = random_function(m, p, rng)
                diff = subroutine_gate(f).choi - subroutine_gate_bruteforce(f).choi
                worst = max(worst, linalg.trace_norm(diff))
                n += 1
        return worst, n

    def classical_inputs():
        worst, n = 0.0, 0
        for m, p in ((1, 1), (2, 2)):
            f = random_function(m, p, rng)
            g = subroutine_gate(f)
            for i in range(2**m):
                out = g.act(states.basis_index_state(i * 2**p, m + p).mat)
                got = np.real(np.diag(out)).reshape(2**m, 2**p)
                want = np.zeros_like(got)
                want[i] = f.table[i]
                worst = max(worst, float(np.abs(got - want).max()))
                n += 1
        return worst, n

    return [
        _run("gs", "compact_form_equals_enumeration", 1e-12 if tol is None else tol, compact_vs_enumeration),
        _run("gs", "classical_inputs_give_f", 1e-12 if tol is None else tol, classical_inputs),
    ]


def suite_dilation_and_compilation(rng: np.random.Generator, tol: float | None) -> list[PropertyResult]:
    def dilation():
        worst, n = 0.0, 0
        for n_in, n_out in ((1, 1), (1, 2), (2, 1), (2, 2)):
            for _ in range(5):
                d = channels.dilate_to_unitary(channels.random_cptp(n_in, n_out, rng))
                worst = max(worst, d.residual(), d.unitarity_residual())
                n += 1
        return worst, n

    def compiled_channel():
        worst, n = 0.0, 0
        for s in (library.deterministic_not(), library.fair_coin(), library.biased_m2()):
            diff = circuit_channel(compile_subroutine(s)).choi - subroutine_gate(s.f).choi
            worst = max(worst, linalg.trace_norm(diff))
            n += 1
        return worst, n

    def inline_modes():
        worst, n = 0.0, 0
        for s in (library.fair_coin(), library.biased_m2(), library.nested_coin()):
            host = library.subroutine_host(s)
            a = computed_function(inline_subroutines(host, "semantic"))
            b = computed_function(inline_subroutines(host, "compiled"))
            worst = max(worst, metrics.function_distance(a, b).max)
            n += 1
        return worst, n

    return [
        _run("theorem2", "dilation_reconstructs_channel", 1e-9 if tol is None else tol, dilation),
        _run("theorem2", "compiled_channel_equals_subroutine_gate", 1e-9 if tol is None else tol, compiled_channel),
        _run("theorem2", "inline_modes_agree", 1e-7 if tol is None else tol, inline_modes),
    ]


def suite_errors(rng: np.random.Generator, tol: float | None, seed: int) -> list[PropertyResult]:
    def chains():
        worst, n = -np.inf, 0
        for _ in range(5):
            pairs, eps = perturbed_chain(2, 4, rng)
            rep = metrics.verify_error_accumulation(pairs, eps, seed=seed)
            worst = max(worst, -rep.worst_slack)
            n += 1
        return max(worst, 0.0), n

    def subroutines():
        worst, n = -np.inf, 0
        for m, p in ((1, 1), (1, 2), (2, 1)):
            for _ in range(3):
                f = random_function(m, p, rng)
                rep = metrics.verify_subroutine_error(f, perturbed_function(f, rng), seed=seed)
                worst = max(worst, rep.lhs - rep.rhs)
                n += 1
        return max(worst, 0.0), n

    return [
        _run("errors", "chain_error_at_most_sum_of_gate_errors", 1e-3 if tol is None else tol, chains),
        _run("errors", "subroutine_error_at_most_five_eps", 1e-3 if tol is None else tol, subroutines),
    ]


def suite_norms(rng: np.random.Generator, tol: float | None, seed: int) -> list[PropertyResult]:
    def cptp_is_one():
        vals = [metrics.diamond_norm(channels.random_cptp(1 + k % 2, 1 + k % 2, rng), seed=seed).value for k in range(6)]
        return float(np.max(np.abs(np.array(vals) - 1))), len(vals)

    def unitary_pairs():
        worst = 0.0
        for k in range(6):
            n = 1 + k % 2
            v, w = channels.random_unitary(n, rng), channels.random_unitary(n, rng)
            est = metrics.diamond_distance(channels.from_unitary(v), channels.from_unitary(w), seed=seed).value
            worst = max(worst, abs(est - metrics.unitary_pair_diamond(v, w)))
        return worst, 6

    def best_measurement():
        worst = 0.0
        for _ in range(5):
            r, s = states.random_state(2, rng), states.random_state(2, rng)
            val, _ = metrics.max_measurement_tvd(r, s)
            worst = max(worst, abs(val - metrics.trace_distance(r, s)))
        return worst, 5

    def stabilization_gap():
        t = metrics.transpose_map()
        naive = metrics.naive_norm(t, seed=seed)
        dia = metrics.diamond_norm(t, seed=seed).value
        return max(naive - 1.0, 2.0 - dia, 0.0), 1

    return [
        _run("norms", "cptp_diamond_norm_is_one", 1e-4 if tol is None else tol, cptp_is_one),
        _run("norms", "unitary_pair_closed_form", 1e-3 if tol is None else tol, unitary_pairs),
        _run("norms", "trace_distance_is_best_measurement", 1e-9 if tol is None else tol, best_measurement),
        _run("norms", "transpose_stabilization_gap", 1e-3 if tol is None else tol, stabilization_gap),
    ]


def suite_causality(rng: np.random.Generator, tol: float | None) -> list[PropertyResult]:
    def witnesses():
        missing, n = 0, 0
        for _ in range(20):
            c = random_circuit(4, 6, rng, blank=range(4))
            g = analysis.correlation_graph(evaluate(c))
            missing += sum(1 for a, b in g.edges if analysis.causality_witness(c, a, b) is None)
            n += 1
        return float(missing), n

    def ghz_depth():
        worst = -np.inf
        for r in (2, 4, 8):
            rep = analysis.depth_bound_check(library.ghz_tree(r))
            worst = max(worst, rep.bound - rep.circuit_depth)
        return max(worst, 0.0), 3

    def order_invariance():
        worst = 0.0
        for _ in range(10):
            c = random_circuit(3, 8, rng)
            rho = states.random_state(3, rng)
            a = evaluate(c, rho).mat
            b = evaluate(c, rho, order=topo_sort(c, rng)).mat
            worst = max(worst, float(np.abs(a - b).max()))
        return worst, 10

    def off_register_gate():
        worst = 0.0
        for _ in range(10):
            c = random_circuit(4, 6, rng)
            rho = states.random_state(4, rng)
            c2 = append_gate(c, channels.random_cptp(2, 2, rng), [2, 3])
            a = linalg.partial_trace(evaluate(c, rho).mat, [0, 1])
            b = linalg.partial_trace(evaluate(c2, rho).mat, [0, 1])
            worst = max(worst, float(np.abs(a - b).max()))
        return worst, 10

    return [
        _run("causality", "correlated_outputs_share_an_ancestor", 0.0 if tol is None else tol, witnesses),
        _run("causality", "ghz_tree_depth_bound", 0.0 if tol is None else tol, ghz_depth),
        _run("causality", "topological_order_invariance", 1e-12 if tol is None else tol, order_invariance),
        _run("causality", "gates_off_register_leave_reduced_state", 1e-11 if tol is None else tol, off_register_gate),
    ]


def run_suite(name: str, seed: int = metrics.DEFAULT_SEED, tol: float | None = None) -> list[PropertyResult]:
    """Run one suite (or ``"all"``); ``tol`` replaces every property tolerance."""
    if name == "all":
        return [r for s in SUITES for r in run_suite(s, seed, tol)]
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    rng = np.random.default_rng([seed, SUITES.index(name)])
    if name == "gs":
        return suite_gs(rng, tol)
    if name == "theorem2":
        return suite_dilation_and_compilation(rng, tol)
    if name == "errors":
        return suite_errors(rng, tol, seed)
    if name == "norms":
        return suite_norms(rng, tol, seed)
    return suite_causality(rng, tol)
