"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary and on
stdout with ``-s``) before asserting, so a failing criterion still reports
its measured values.
"""

import time

import numpy as np

from qmixed import analysis, channels, linalg, metrics, states
from qmixed.circuits import (
    ProbFunction,
    circuit_channel,
    compile_subroutine,
    computed_function,
    evaluate,
    inline_subroutines,
    random_circuit,
    subroutine_gate,
    subroutine_gate_bruteforce,
    topo_sort,
)
from qmixed.circuits import library
from qmixed.verify import append_gate, perturbed_chain, perturbed_function

from conftest import ACCEPTANCE

SEED = 20240611


def record(name, checks, seconds, budget=None):
    """``checks`` maps a label to ``(measured, bound, ok)``."""
    ok = all(c[2] for c in checks.values())
    parts = [f"{k}={v[0]:.3e} (bound {v[1]:.1e})" for k, v in checks.items()]
    if budget is not None:
        ok = ok and seconds <= budget
        parts.append(f"time={seconds:.1f}s (budget {budget:.0f}s)")
    else:
        parts.append(f"time={seconds:.1f}s")
    detail = "; ".join(parts)
    ACCEPTANCE.append((name, ok, detail))
    print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    return ok


def at_most(value, bound):
    return (float(value), float(bound), bool(value <= bound))


def test_criterion_1_dilation():
    t0 = time.perf_counter()
    shapes = [(1, 1), (1, 2), (2, 1), (2, 2)]
    worst_rec, worst_unit = 0.0, 0.0
    for k in range(50):
        d = channels.dilate_to_unitary(channels.random_cptp(*shapes[k % 4], seed=SEED + k))
        worst_rec = max(worst_rec, d.residual())
        worst_unit = max(worst_unit, d.unitarity_residual())
    ok = record(
        "1 dilation",
        {"reconstruction": at_most(worst_rec, 1e-9), "unitarity": at_most(worst_unit, 1e-9)},
        time.perf_counter() - t0,
        10,
    )
    assert ok


def test_criterion_2_compact_subroutine_gate():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for m, p in [(1, 1), (1, 2), (2, 1)]:
        for _ in range(20):
            f = ProbFunction.random(m, p, rng)
            worst = max(worst, linalg.trace_norm(subroutine_gate(f).choi - subroutine_gate_bruteforce(f).choi))
    ok = record("2 subroutine gate closed form", {"choi_trace_norm": at_most(worst, 1e-12)}, time.perf_counter() - t0, 30)
    assert ok


def test_criterion_3_compiled_subroutines():
    t0 = time.perf_counter()
    checks = {}
    for s in (library.fair_coin(), library.biased_m2()):
        diff = circuit_channel(compile_subroutine(s)).choi - subroutine_gate(s.f).choi
        checks[f"compile[{s.name}]"] = at_most(linalg.trace_norm(diff), 1e-9)
    worst = 0.0
    for s in (library.fair_coin(), library.biased_m2()):
        host = library.subroutine_host(s)
        a = computed_function(inline_subroutines(host, "semantic"))
        b = computed_function(inline_subroutines(host, "compiled"))
        worst = max(worst, metrics.function_distance(a, b).max)
    checks["inline_modes_tvd"] = at_most(worst, 1e-7)
    ok = record("3 compiled subroutine channel", checks, time.perf_counter() - t0, 60)
    assert ok


def test_criterion_4_metric_closed_forms():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    shapes = [(1, 1), (1, 2), (2, 1), (2, 2)]
    cptp_dev, lb_gap = 0.0, 0.0
    for k in range(20):
        res = metrics.diamond_norm(channels.random_cptp(*shapes[k % 4], seed=rng))
        cptp_dev = max(cptp_dev, abs(res.value - 1))
        lb_gap = max(lb_gap, res.lower_bound - res.value)
    pair_dev = 0.0
    for k in range(20):
        n = 1 + k % 2
        v, w = channels.random_unitary(n, rng), channels.random_unitary(n, rng)
        est = metrics.diamond_distance(channels.from_unitary(v), channels.from_unitary(w)).value
        pair_dev = max(pair_dev, abs(est - metrics.unitary_pair_diamond(v, w)))
    meas_dev, dominated = 0.0, 0.0
    for _ in range(10):
        r, s = states.random_state(2, rng), states.random_state(2, rng)
        td = metrics.trace_distance(r, s)
        best, _ = metrics.max_measurement_tvd(r, s)
        meas_dev = max(meas_dev, abs(best - td))
        for _ in range(10):
            u = channels.random_unitary(2, rng)
            projs = [np.outer(u[:, j], u[:, j].conj()) for j in range(4)]
            dominated = max(dominated, metrics.measurement_tvd(r, s, projs) - td)
    ok = record(
        "4 metric closed forms",
        {
            "cptp_norm_minus_1": at_most(cptp_dev, 1e-4),
            "lower_bound_above_estimate": at_most(lb_gap, 0.0),
            "unitary_pair_dev": at_most(pair_dev, 1e-3),
            "best_measurement_dev": at_most(meas_dev, 1e-9),
            "random_measurement_excess": at_most(dominated, 1e-9),
        },
        time.perf_counter() - t0,
        120,
    )
    assert ok


def test_criterion_5_error_accumulation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    comp_excess, func_excess = -np.inf, -np.inf
    for k in range(50):
        pairs, eps = perturbed_chain(1 + k % 2, 4, rng)
        rep = metrics.verify_error_accumulation(pairs, eps)
        comp_excess = max(comp_excess, max(e - b for e, b in zip(rep.prefix_errors, rep.prefix_bounds)))
        func_excess = max(func_excess, rep.function_error - rep.prefix_bounds[-1])
    sub_excess = -np.inf
    shapes = [(1, 1), (1, 2), (2, 1)]
    for k in range(50):
        f = ProbFunction.random(*shapes[k % 3], rng)
        rep = metrics.verify_subroutine_error(f, perturbed_function(f, rng))
        sub_excess = max(sub_excess, rep.lhs - rep.rhs)
    ok = record(
        "5 error accumulation",
        {
            "composite_minus_sum_eps": at_most(comp_excess, 1e-3),
            "function_minus_sum_eps": at_most(func_excess, 1e-3),
            "subroutine_minus_5eps": at_most(sub_excess, 1e-3),
        },
        time.perf_counter() - t0,
        120,
    )
    assert ok


def test_criterion_6_order_and_locality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst_order = 0.0
    for _ in range(50):
        c = random_circuit(3, 8, rng)
        rho = states.random_state(3, rng)
        a = evaluate(c, rho, order=topo_sort(c, rng)).mat
        b = evaluate(c, rho, order=topo_sort(c, rng)).mat
        worst_order = max(worst_order, float(np.abs(a - b).max()))
    worst_local = 0.0
    for _ in range(20):
        c = random_circuit(4, 6, rng)
        rho = states.random_state(4, rng)
        c2 = append_gate(c, channels.random_cptp(2, 2, rng), [2, 3])
        a = linalg.partial_trace(evaluate(c, rho).mat, [0, 1])
        b = linalg.partial_trace(evaluate(c2, rho).mat, [0, 1])
        worst_local = max(worst_local, float(np.abs(a - b).max()))
    ok = record(
        "6 order invariance and locality",
        {"order_diff": at_most(worst_order, 1e-12), "off_register_diff": at_most(worst_local, 1e-11)},
        time.perf_counter() - t0,
    )
    assert ok


def test_criterion_7_causality_and_depth():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    missing, edges = 0, 0
    for _ in range(100):
        c = random_circuit(4, 5, rng, blank=range(4))
        g = analysis.correlation_graph(evaluate(c))
        edges += len(g.edges)
        missing += sum(1 for a, b in g.edges if analysis.causality_witness(c, a, b) is None)
    depth_short = -np.inf
    for r in (2, 4, 8):
        rep = analysis.depth_bound_check(library.ghz_tree(r))
        depth_short = max(depth_short, 0.5 * np.log2(r - 1) - rep.circuit_depth)
    bad_half = 0
    for r in (2, 4, 8):
        g = analysis.function_correlation_graph(analysis.half_half_function(r), 0)
        if not (g.is_complete and all(g.degree(v) == r - 1 for v in range(r))):
            bad_half += 1
    ok = record(
        "7 causality and depth",
        {
            "missing_witnesses": at_most(missing, 0),
            "correlated_pairs_seen": (float(edges), 1.0, edges >= 1),
            "ghz_depth_shortfall": at_most(depth_short, 0.0),
            "half_half_not_complete": at_most(bad_half, 0),
        },
        time.perf_counter() - t0,
    )
    assert ok


def test_criterion_8_transpose_gap():
    t0 = time.perf_counter()
    t = metrics.transpose_map()
    naive = metrics.naive_norm(t)
    dia = metrics.diamond_norm(t).value
    ok = record(
        "8 transpose stabilization gap",
        {"naive_minus_1": at_most(naive - 1, 1e-6), "2_minus_diamond": at_most(2 - dia, 1e-3)},
        time.perf_counter() - t0,
    )
    assert ok
