"""Compilation passes: general gates to unitaries, subroutines to unitary circuits."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import channels, linalg
from ..errors import ValidationError
from . import gates
from .core import Circuit, CircuitBuilder, topo_sort
from .functions import SubroutineRef, subroutine_gate

FUNCTION_MATCH_TOL = 1e-6


def _splice(b: CircuitBuilder, sub: Circuit, data_wires: Sequence[int], prefix: str) -> list[int]:
    """Copy ``sub`` into ``b`` with its data inputs bound to ``data_wires``.

    Blank inputs of ``sub`` become new blank inputs of ``b``. Returns the
    builder wires for ``sub.outputs``.
    """
    wm = dict(zip(sub.data_inputs, data_wires))
    for w in sorted(sub.blank_inputs):
        wm[w] = b.add_input(blank=True)
    for node in topo_sort(sub):
        outs = b.add(node.gate, [wm[w] for w in node.in_wires], node.kind, f"{prefix}{node.id}", node.params)
        wm.update(zip(node.out_wires, outs))
    return [wm[w] for w in sub.outputs]


def to_unitary_circuit(c: Circuit) -> Circuit:
    """Replace every non-unitary gate by its unitary dilation.

    Each channel node of order ``(n, m)`` becomes a unitary on its ``n`` input
    wires plus fresh blank ancillas; its first ``m`` outputs continue the
    circuit and the rest join the discarded ("garbage") outputs. Trace-out
    nodes are dropped and their wires become garbage outputs too. Outputs are
    the original outputs followed by garbage, so the reduced state on the
    original outputs, and the computed function, are unchanged.
    """
    if c.has_subroutines():
        raise ValidationError("inline subroutines before converting to a unitary circuit")
    b = CircuitBuilder()
    wm = {w: b.add_input(blank=w in c.blank_inputs) for w in c.inputs}
    garbage: list[int] = []
    for node in topo_sort(c):
        ins = [wm[w] for w in node.in_wires]
        if node.kind == "unitary":
            outs = b.add(node.gate, ins, "unitary", node.id, node.params)
        elif node.kind == "traceout":
            garbage.extend(ins)
            continue
        else:
            dil = channels.dilate_to_unitary(node.gate)
            anc = [b.add_input(blank=True) for _ in range(dil.ancilla_count)]
            res = b.unitary(dil.u, ins + anc, node_id=node.id, params={"dilation_of": node.kind})
            outs = res[: node.gate.n_out]
            garbage.extend(res[node.gate.n_out :])
        wm.update(zip(node.out_wires, outs))
    out = b.build([wm[w] for w in c.outputs] + garbage, [wm[w] for w in c.result_outputs])
    out.meta.update(c.meta, garbage_outputs=len(garbage))
    return out


def lineage(c: Circuit) -> dict[int, int]:
    """For a circuit of square gates: input wire -> the output wire it flows to."""
    pos_map = {w: w for w in c.inputs}
    for node in topo_sort(c):
        if len(node.in_wires) != len(node.out_wires):
            raise ValidationError("lineage needs gates with equal fan-in and fan-out")
        inv = {v: k for k, v in pos_map.items()}
        for a, z in zip(node.in_wires, node.out_wires):
            pos_map[inv[a]] = z
    return pos_map


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Unitary matrix of a unitary-only circuit.

    Columns range over all inputs (data inputs, then blank inputs, each in
    wire order); rows over the corresponding output wires in the same order.
    """
    if not c.is_unitary_only():
        raise ValidationError("circuit contains non-unitary gates")
    order_in = list(c.data_inputs) + sorted(c.blank_inputs)
    lin = lineage(c)
    n = len(order_in)
    linalg.check_qubit_cap(n)
    live = list(order_in)
    psi = np.eye(2**n, dtype=np.complex128).reshape((2,) * n + (2**n,))
    for node in topo_sort(c):
        u = node.gate.kraus[0]
        k = len(node.in_wires)
        tgt = [live.index(w) for w in node.in_wires]
        psi = np.moveaxis(psi, tgt, range(k))
        shp = psi.shape
        psi = (u @ psi.reshape(2**k, -1)).reshape(shp)
        psi = np.moveaxis(psi, range(k), tgt)
        for a, z in zip(node.in_wires, node.out_wires):
            live[live.index(a)] = z
    perm = [live.index(lin[w]) for w in order_in]
    psi = np.transpose(psi, perm + [n])
    return psi.reshape(2**n, 2**n)


def _check_impl(s: SubroutineRef) -> Circuit:
    impl = s.impl
    f = s.f
    if impl is None:
        raise ValidationError("subroutine has no implementing circuit")
    if not impl.is_unitary_only():
        raise ValidationError("subroutine implementation must use unitary gates only")
    if len(impl.data_inputs) != f.m or len(impl.result_outputs) != f.p:
        raise ValidationError(
            f"implementation has {len(impl.data_inputs)} inputs / {len(impl.result_outputs)} results, "
            f"subroutine needs {f.m} / {f.p}"
        )
    u = circuit_unitary(impl)
    M = 2**f.m
    blocks = u.reshape(M, u.shape[0] // M, M, u.shape[1] // M)
    off = blocks.copy()
    off[np.arange(M), :, np.arange(M), :] = 0
    if np.max(np.abs(off), initial=0.0) > 1e-9:
        raise ValidationError("subroutine implementation does not preserve its input register")
    # Result distribution per classical input, read off the columns with blanks at |0>.
    n = len(impl.inputs)
    lin = lineage(impl)
    rows = [lin[w] for w in list(impl.data_inputs) + sorted(impl.blank_inputs)]
    res_pos = [rows.index(w) for w in impl.result_outputs]
    cols = u[:, np.arange(M) * (u.shape[1] // M)].T
    probs = (np.abs(cols) ** 2).reshape((M,) + (2,) * n)
    probs = np.transpose(probs, [0] + [1 + k for k in res_pos] + [1 + k for k in range(n) if k not in res_pos])
    probs = probs.reshape(M, 2**f.p, -1).sum(axis=2)
    err = float(np.max(np.sum(np.abs(probs - f.table), axis=1)))
    if err > FUNCTION_MATCH_TOL:
        raise ValidationError(f"implementation computes a different function (t.v.d. {err:.3e})")
    return impl


def compile_subroutine(s: SubroutineRef) -> Circuit:
    """Unitary-plus-discard circuit whose channel equals ``subroutine_gate(s.f)``.

    Register layout: inputs ``[x (m), y (p)]`` are the subroutine's input and
    output registers; the blank inputs that follow are the implementation's
    work register, ``m`` input-copy ancillas and one garbage-control qubit, in
    that order. Steps: run the implementation ``U``, CNOT-copy its ``p``
    result bits into ``y``, run ``U^dagger``, flip the control iff the work
    register is non-zero, copy ``x`` into the ancillas controlled on that flag,
    then discard work, control and ancillas.

    The garbage-detect and controlled-copy steps are single composite
    permutation gates here; ``meta["gate_counts"]`` reports their decomposed
    sizes.
    """
    impl = _check_impl(s)
    m, p = s.f.m, s.f.p
    w = len(impl.blank_inputs)
    linalg.check_qubit_cap(2 * m + p + w + 1)
    b = CircuitBuilder()
    xs = [b.add_input() for _ in range(m)]
    ys = [b.add_input() for _ in range(p)]
    work = [b.add_input(blank=True) for _ in range(w)]
    copies = [b.add_input(blank=True) for _ in range(m)]
    ctrl = b.add_input(blank=True)

    cur = dict(zip(impl.data_inputs, xs))
    cur.update(zip(sorted(impl.blank_inputs), work))
    order = topo_sort(impl)
    for node in order:
        outs = b.add(node.gate, [cur[a] for a in node.in_wires], "unitary", f"U.{node.id}", node.params)
        cur.update(zip(node.out_wires, outs))
    for t, rw in enumerate(impl.result_outputs):
        cur[rw], ys[t] = b.named("CNOT", [cur[rw], ys[t]], node_id=f"copy.{t}")
    for node in reversed(order):
        adj = channels.from_unitary(linalg.dagger(node.gate.kraus[0]))
        outs = b.add(adj, [cur[z] for z in node.out_wires], "unitary", f"Udg.{node.id}")
        cur.update(zip(node.in_wires, outs))

    work = [cur[a] for a in sorted(impl.blank_inputs)]
    xs = [cur[a] for a in impl.data_inputs]
    res = b.unitary(gates.garbage_detect(w), work + [ctrl], node_id="garbage_detect")
    work, ctrl = res[:w], res[w]
    res = b.unitary(gates.controlled_copy(m), [ctrl] + xs + copies, node_id="input_copy")
    ctrl, xs, copies = res[0], res[1 : 1 + m], res[1 + m :]
    b.traceout(work + [ctrl] + copies, node_id="discard")
    out = b.build(xs + ys, ys)

    k = len(order)
    counts = {
        "impl_gates": k,
        "impl_adjoint_gates": k,
        "copy_gates": p,
        "garbage_detect": gates.garbage_detect_cost(w),
        "input_copy": m,
        "work_qubits": w,
    }
    counts["total"] = 2 * k + p + counts["garbage_detect"] + m
    out.meta["gate_counts"] = counts
    return out


def inline_subroutines(c: Circuit, mode: str = "semantic") -> Circuit:
    """Remove every subroutine node.

    ``semantic`` substitutes the subroutine gate channel; ``compiled`` splices
    in :func:`compile_subroutine`, first flattening implementations that use
    subroutines or non-unitary gates themselves.
    """
    if mode not in ("semantic", "compiled"):
        raise ValidationError(f"mode must be 'semantic' or 'compiled', not {mode!r}")
    if not c.has_subroutines():
        return c
    b = CircuitBuilder()
    wm = {w: b.add_input(blank=w in c.blank_inputs) for w in c.inputs}
    total = 0
    for node in topo_sort(c):
        ins = [wm[w] for w in node.in_wires]
        if not isinstance(node.gate, SubroutineRef):
            outs = b.add(node.gate, ins, node.kind, node.id, node.params)
        elif mode == "semantic":
            outs = b.add(subroutine_gate(node.gate.f), ins, "channel", node.id, {"subroutine": node.gate.name})
        else:
            s = node.gate
            if s.impl is not None and (s.impl.has_subroutines() or not s.impl.is_unitary_only()):
                s = SubroutineRef(s.f, to_unitary_circuit(inline_subroutines(s.impl, "compiled")), s.name)
            comp = compile_subroutine(s)
            total += comp.meta["gate_counts"]["total"]
            outs = _splice(b, comp, ins, f"{node.id}/")
        wm.update(zip(node.out_wires, outs))
    out = b.build([wm[w] for w in c.outputs], [wm[w] for w in c.result_outputs])
    if mode == "compiled":
        plain = sum(1 for n in c.nodes if not isinstance(n.gate, SubroutineRef))
        out.meta["gate_counts"] = {"host_gates": plain, "subroutine_gates": total, "total": plain + total}
    return out
