"""Small reference circuits and subroutines used by the tests, CLI and docs."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import channels
from . import gates
from .core import Circuit, CircuitBuilder
from .functions import ProbFunction, SubroutineRef


def identity_circuit(n: int = 1) -> Circuit:
    b = CircuitBuilder(n)
    return b.build(b.input_wires, b.input_wires)


def h_measure() -> Circuit:
    """One data qubit reset-free: H on a blank qubit, then a basic measurement.

    The data input passes through untouched; the result is the measurement
    outcome bit, so ``f[i] = (1/2, 1/2)`` for both inputs.
    """
    b = CircuitBuilder(2, blank=[1])
    x, q = b.input_wires
    (q,) = b.named("H", [q])
    q, out = b.measure([q])
    return b.build([x, q, out], [out])


def ghz_tree(r: int) -> Circuit:
    """H on qubit 0 then a doubling CNOT fan-out tree; depth ``1 + ceil(log2 r)``."""
    b = CircuitBuilder(r, blank=range(r))
    lines = list(b.input_wires)
    (lines[0],) = b.named("H", [lines[0]])
    have = 1
    while have < r:
        for src in range(min(have, r - have)):
            lines[src], lines[have + src] = b.named("CNOT", [lines[src], lines[have + src]])
        have *= 2
    return b.build(lines, lines)


def ghz_chain(r: int) -> Circuit:
    """H on qubit 0 then CNOT ``k -> k+1`` down the line; depth ``r``."""
    b = CircuitBuilder(r, blank=range(r))
    lines = list(b.input_wires)
    (lines[0],) = b.named("H", [lines[0]])
    for k in range(r - 1):
        lines[k], lines[k + 1] = b.named("CNOT", [lines[k], lines[k + 1]])
    return b.build(lines, lines)


def _impl_from_rotations(thetas: Sequence[float]) -> Circuit:
    """Input ``i`` (m bits) rotates the result qubit by ``RY(theta_i)``; a CNOT
    then copies the result onto a garbage qubit (the measurement dilation)."""
    m = int(np.log2(len(thetas)))
    b = CircuitBuilder(m + 2, blank=[m, m + 1])
    ins = b.input_wires[:m]
    res, garb = b.input_wires[m], b.input_wires[m + 1]
    if m == 0:
        (res,) = b.unitary(gates.ry(thetas[0]), [res])
    else:
        blocks = [gates.ry(t) for t in thetas]
        u = np.zeros((2 ** (m + 1),) * 2, dtype=np.complex128)
        for i, blk in enumerate(blocks):
            u[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = blk
        out = b.unitary(u, ins + [res], params={"name": "controlled_ry"})
        ins, res = out[:m], out[m]
    res, garb = b.named("CNOT", [res, garb])
    return b.build(ins + [res, garb], [res])


def rotation_subroutine(probs_one: Sequence[float], name: str = "") -> SubroutineRef:
    """Subroutine with ``r = 1`` returning 1 on input ``i`` with probability ``probs_one[i]``."""
    probs_one = np.asarray(probs_one, dtype=float)
    m = int(np.log2(len(probs_one)))
    f = ProbFunction(m, 1, np.stack([1 - probs_one, probs_one], axis=1))
    thetas = 2 * np.arcsin(np.sqrt(probs_one))
    return SubroutineRef(f, _impl_from_rotations(thetas), name)


def fair_coin() -> SubroutineRef:
    """``m = r = 1``; output is a fair coin regardless of the input."""
    return rotation_subroutine([0.5, 0.5], "fair_coin")


def biased_m2() -> SubroutineRef:
    """``m = 2, r = 1`` with a different bias per input."""
    return rotation_subroutine([0.1, 0.5, 0.75, 1.0], "biased_m2")


def deterministic_not() -> SubroutineRef:
    """``m = r = 1``, ``f(i) = NOT i``: CNOT the input into the result then flip it."""
    f = ProbFunction.deterministic(1, 1, [1, 0])
    b = CircuitBuilder(2, blank=[1])
    x, y = b.input_wires
    x, y = b.named("CNOT", [x, y])
    (y,) = b.named("X", [y])
    return SubroutineRef(f, b.build([x, y], [y]), "not")


def single_call(s: SubroutineRef) -> Circuit:
    """A host circuit that only calls ``s`` on fresh blank result wires."""
    m, p = s.f.m, s.f.p
    b = CircuitBuilder(m + p, blank=range(m, m + p))
    outs = b.add(s, b.input_wires)
    return b.build(outs, outs[m:])


def nested_coin() -> SubroutineRef:
    """Two-level subroutine: input XOR a fair-coin call, so again a fair coin.

    Its implementation calls :func:`fair_coin`, so that call must be compiled
    (and its discard step dilated) before the outer subroutine can be.
    """
    coin = fair_coin()
    b = CircuitBuilder(3, blank=[1, 2])
    x, y1, y2 = b.input_wires
    x, y1 = b.add(coin, [x, y1], node_id="inner")
    x, y2 = b.named("CNOT", [x, y2])
    y1, y2 = b.named("CNOT", [y1, y2])
    impl = b.build([x, y2, y1], [y2])
    f = ProbFunction(1, 1, np.full((2, 2), 0.5))
    return SubroutineRef(f, impl, "coin_xor")


def subroutine_host(s: SubroutineRef, pre: str = "H") -> Circuit:
    """Data qubit(s) through ``pre`` gates, then ``s``, then a final H on the inputs.

    Superposed inputs exercise the off-diagonal part of the subroutine gate.
    """
    m, p = s.f.m, s.f.p
    b = CircuitBuilder(m + p, blank=range(m, m + p))
    ws = list(b.input_wires)
    for k in range(m):
        (ws[k],) = b.named(pre, [ws[k]])
    ws = b.add(s, ws, node_id="call")
    for k in range(m):
        (ws[k],) = b.named("H", [ws[k]])
    return b.build(ws, ws)


def dephasing(p: float = 0.5) -> channels.SuperOperator:
    return channels.from_kraus([np.sqrt(1 - p) * gates.I, np.sqrt(p) * gates.Z])
