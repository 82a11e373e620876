"""Circuits as directed acyclic graphs of gates over wires.

Every wire has exactly one producer (a node, or the circuit itself for input
wires ``0..n_wires_in-1``) and at most one consumer. Unconsumed wires are the
circuit outputs. A node of order ``(k, l)`` consumes ``k`` wires and produces
``l`` fresh ones, so trace-out nodes produce nothing and measurements that
record their outcome produce extra wires.
"""

from __future__ import annotations

import functools
import heapq
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .. import channels, linalg
from ..channels import SuperOperator
from ..errors import DimensionError, ValidationError
from ..states import DensityMatrix, validate
from .functions import ProbFunction, SubroutineRef, subroutine_gate

KINDS = ("unitary", "channel", "measure", "traceout", "subroutine")
_BATCH_ENTRIES = 2**24


def id_key(node_id) -> tuple:
    """Sort key putting integer ids first (numerically), then strings."""
    if isinstance(node_id, (int, np.integer)):
        return (0, int(node_id), "")
    return (1, 0, str(node_id))


@dataclass(frozen=True, eq=False)
class Node:
    id: Any
    gate: SuperOperator | SubroutineRef
    in_wires: tuple[int, ...]
    out_wires: tuple[int, ...]
    kind: str = "channel"
    params: dict = field(default_factory=dict)

    @property
    def order(self) -> tuple[int, int]:
        if isinstance(self.gate, SubroutineRef):
            return self.gate.width, self.gate.width
        return self.gate.n_in, self.gate.n_out

    @property
    def channel(self) -> SuperOperator:
        if isinstance(self.gate, SubroutineRef):
            return _subroutine_channel(self.gate)
        return self.gate


@functools.lru_cache(maxsize=128)
def _subroutine_channel(s: SubroutineRef) -> SuperOperator:
    return subroutine_gate(s.f)


@dataclass(frozen=True, eq=False)
class Circuit:
    """A validated quantum circuit.

    Attributes:
        n_wires_in: input wires are ``0 .. n_wires_in - 1``.
        nodes: gate nodes in any order.
        blank_inputs: input wires initialised to ``|0>``.
        result_outputs: ordered output wires read by :func:`computed_function`.
        outputs: ordered list of all output wires; defaults to ascending ids.
    """

    n_wires_in: int
    nodes: tuple[Node, ...]
    blank_inputs: frozenset[int] = frozenset()
    result_outputs: tuple[int, ...] = ()
    outputs: tuple[int, ...] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "blank_inputs", frozenset(int(w) for w in self.blank_inputs))
        object.__setattr__(self, "result_outputs", tuple(int(w) for w in self.result_outputs))
        dangling = _check_structure(self)
        if self.outputs is None:
            object.__setattr__(self, "outputs", tuple(sorted(dangling)))
        else:
            outs = tuple(int(w) for w in self.outputs)
            if sorted(outs) != sorted(dangling):
                raise ValidationError(f"outputs {outs} do not match unconsumed wires {sorted(dangling)}")
            object.__setattr__(self, "outputs", outs)
        if len(set(self.result_outputs)) != len(self.result_outputs) or not set(self.result_outputs) <= set(dangling):
            raise ValidationError("result outputs must be distinct circuit outputs")
        _check_subroutine_blanks(self)

    @property
    def inputs(self) -> tuple[int, ...]:
        return tuple(range(self.n_wires_in))

    @property
    def data_inputs(self) -> tuple[int, ...]:
        return tuple(w for w in self.inputs if w not in self.blank_inputs)

    @property
    def node_map(self) -> dict:
        return {n.id: n for n in self.nodes}

    def producers(self) -> dict[int, Any]:
        return {w: n.id for n in self.nodes for w in n.out_wires}

    def consumers(self) -> dict[int, Any]:
        return {w: n.id for n in self.nodes for w in n.in_wires}

    def predecessors(self) -> dict[Any, set]:
        prod = self.producers()
        return {n.id: {prod[w] for w in n.in_wires if w in prod} for n in self.nodes}

    def has_subroutines(self) -> bool:
        return any(isinstance(n.gate, SubroutineRef) for n in self.nodes)

    def is_unitary_only(self) -> bool:
        return all(n.kind == "unitary" for n in self.nodes)


def _check_structure(c: Circuit) -> set[int]:
    if c.n_wires_in < 0:
        raise ValidationError("n_wires_in must be non-negative")
    ids = [n.id for n in c.nodes]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate node ids")
    if not c.blank_inputs <= set(range(c.n_wires_in)):
        raise ValidationError("blank inputs must be input wires")
    produced = set(range(c.n_wires_in))
    for n in c.nodes:
        if n.kind not in KINDS:
            raise ValidationError(f"node {n.id!r}: unknown kind {n.kind!r}")
        k, l = n.order
        if (len(n.in_wires), len(n.out_wires)) != (k, l):
            raise ValidationError(
                f"node {n.id!r}: gate of order ({k},{l}) has {len(n.in_wires)} in / {len(n.out_wires)} out wires"
            )
        for w in n.out_wires:
            if w in produced:
                raise ValidationError(f"wire {w} has more than one producer")
            produced.add(w)
    consumed = set()
    for n in c.nodes:
        for w in n.in_wires:
            if w not in produced:
                raise ValidationError(f"node {n.id!r} consumes unknown wire {w}")
            if w in consumed:
                raise ValidationError(f"wire {w} has more than one consumer")
            consumed.add(w)
    topo_sort(c)
    return produced - consumed


def _check_subroutine_blanks(c: Circuit) -> None:
    for n in c.nodes:
        if isinstance(n.gate, SubroutineRef):
            m = n.gate.f.m
            bad = [w for w in n.in_wires[m:] if w not in c.blank_inputs]
            if bad:
                raise ValidationError(
                    f"subroutine node {n.id!r}: output-register wires {bad} must be blank circuit inputs"
                )


def topo_sort(c: Circuit, rng: np.random.Generator | None = None) -> list[Node]:
    """Kahn's algorithm; among ready nodes the smallest id goes first.

    With ``rng`` the next node is instead drawn uniformly from the ready set,
    giving a random (still valid) order.

    Raises:
        ValidationError: if the graph has a cycle.
    """
    preds = c.predecessors()
    succs: dict[Any, list] = {n.id: [] for n in c.nodes}
    for nid, ps in preds.items():
        for p in ps:
            succs[p].append(nid)
    indeg = {nid: len(ps) for nid, ps in preds.items()}
    heap = [(id_key(nid), nid) for nid, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    nm = c.node_map
    order = []
    while heap:
        if rng is None:
            _, nid = heapq.heappop(heap)
        else:
            _, nid = heap.pop(int(rng.integers(len(heap))))
            heapq.heapify(heap)
        order.append(nm[nid])
        for s in succs[nid]:
            indeg[s] -= 1
            if indeg[s] == 0:
                heapq.heappush(heap, (id_key(s), s))
    if len(order) != len(c.nodes):
        raise ValidationError("circuit graph has a cycle")
    return order


def is_topological(c: Circuit, order: Sequence[Node]) -> bool:
    pos = {n.id: k for k, n in enumerate(order)}
    if len(pos) != len(c.nodes):
        return False
    return all(pos[p] < pos[nid] for nid, ps in c.predecessors().items() for p in ps)


def _apply_local(x: np.ndarray, t: SuperOperator, targets: Sequence[int], n: int) -> np.ndarray:
    """Apply ``t`` to qubits ``targets`` of a batch ``x`` of shape ``(B, 2^n, 2^n)``.

    The ``t.n_out`` output qubits come first in the result, followed by the
    untouched qubits in their previous order.
    """
    b = x.shape[0]
    k = len(targets)
    ts = set(targets)
    rest = [q for q in range(n) if q not in ts]
    r = 2 ** (n - k)
    perm = [0] + [1 + q for q in list(targets) + rest] + [1 + n + q for q in list(targets) + rest]
    x = x.reshape((b,) + (2,) * (2 * n)).transpose(perm).reshape(b, 2**k, r, 2**k, r)
    if t.n_out == 0:
        # every trace preserving map onto zero qubits is the trace
        out = np.einsum("zixiy->zxy", x)[:, None, :, None, :]
    elif t.kraus is not None:
        ks = np.stack(t.kraus)
        out = np.einsum("kai,zixjy,kbj->zaxby", ks, x, ks.conj(), optimize=True)
    else:
        out = np.einsum("aibj,zixjy->zaxby", t.choi4, x, optimize=True)
    d = t.d_out * r
    return out.reshape(b, d, d)


def _run(c: Circuit, x: np.ndarray, order: Sequence[Node] | None = None, max_qubits: int = linalg.MAX_QUBITS) -> np.ndarray:
    """Push a batch of operators on the data inputs through ``c``.

    Returns the batch on ``c.outputs`` (in that order).
    """
    order = topo_sort(c) if order is None else list(order)
    blanks = sorted(c.blank_inputs)
    live = list(c.data_inputs) + blanks
    linalg.check_qubit_cap(len(live), max_qubits)
    if blanks:
        zero = np.zeros((2 ** len(blanks),) * 2)
        zero[0, 0] = 1.0
        x = np.einsum("zij,kl->zikjl", x, zero).reshape(x.shape[0], *(x.shape[1] * zero.shape[0],) * 2)
    for node in order:
        targets = [live.index(w) for w in node.in_wires]
        rest = [w for w in live if w not in set(node.in_wires)]
        new_live = list(node.out_wires) + rest
        linalg.check_qubit_cap(len(new_live), max_qubits)
        x = _apply_local(x, node.channel, targets, len(live))
        live = new_live
    if not live:
        return x
    perm = [live.index(w) for w in c.outputs]
    n = len(live)
    b = x.shape[0]
    axes = [0] + [1 + q for q in perm] + [1 + n + q for q in perm]
    return x.reshape((b,) + (2,) * (2 * n)).transpose(axes).reshape(x.shape)


def evaluate(
    c: Circuit,
    rho_in: DensityMatrix | None = None,
    order: Sequence[Node] | None = None,
    max_qubits: int = linalg.MAX_QUBITS,
) -> DensityMatrix:
    """Final density matrix ``g_t o ... o g_1 o rho`` on ``c.outputs``.

    ``rho_in`` covers the non-blank inputs in wire order (``None`` is allowed
    when every input is blank); blank inputs start in ``|0>``. A custom
    ``order`` must be a topological sort of ``c``.
    """
    n_data = len(c.data_inputs)
    if rho_in is None:
        if n_data:
            raise DimensionError(f"circuit has {n_data} data inputs; an input state is required")
        x = np.ones((1, 1, 1), dtype=np.complex128)
    else:
        if rho_in.n_qubits != n_data:
            raise DimensionError(f"circuit has {n_data} data inputs, state has {rho_in.n_qubits} qubits")
        x = np.asarray(rho_in.mat)[None]
    if order is not None and not is_topological(c, order):
        raise ValidationError("supplied order is not a topological sort of the circuit")
    return validate(_run(c, x, order, max_qubits)[0], repair=True)


def _basis_ops(n: int, pairs: Iterable[tuple[int, int]]) -> np.ndarray:
    pairs = list(pairs)
    x = np.zeros((len(pairs), 2**n, 2**n), dtype=np.complex128)
    for k, (i, j) in enumerate(pairs):
        x[k, i, j] = 1.0
    return x


def _run_chunked(c: Circuit, n_in: int, pairs: list[tuple[int, int]], max_qubits: int) -> np.ndarray:
    width = max(len(c.data_inputs) + len(c.blank_inputs), 1)
    chunk = max(1, _BATCH_ENTRIES // (4**width))
    outs = [_run(c, _basis_ops(n_in, pairs[s : s + chunk]), None, max_qubits) for s in range(0, len(pairs), chunk)]
    return np.concatenate(outs)


def computed_function(c: Circuit, max_qubits: int = linalg.MAX_QUBITS) -> ProbFunction:
    """``f[i, j] = <j| (Q o |i><i|)|_A |j>`` with ``A`` the result outputs."""
    n_in = len(c.data_inputs)
    outs = _run_chunked(c, n_in, [(i, i) for i in range(2**n_in)], max_qubits)
    res_pos = [c.outputs.index(w) for w in c.result_outputs]
    table = np.empty((2**n_in, 2 ** len(res_pos)))
    for i, m in enumerate(outs):
        table[i] = np.real(np.diag(linalg.partial_trace(m, res_pos))) if c.outputs else np.real(m.ravel())
    return ProbFunction(n_in, len(res_pos), np.clip(table, 0.0, 1.0))


def circuit_channel(c: Circuit, max_qubits: int = linalg.MAX_QUBITS) -> SuperOperator:
    """The whole circuit as one channel from its data inputs to ``c.outputs``."""
    n_in, n_out = len(c.data_inputs), len(c.outputs)
    d_in, d_out = 2**n_in, 2**n_out
    pairs = [(i, j) for i in range(d_in) for j in range(d_in)]
    outs = _run_chunked(c, n_in, pairs, max_qubits).reshape(d_in, d_in, d_out, d_out)
    choi = outs.transpose(2, 0, 3, 1).reshape(d_out * d_in, d_out * d_in)
    return channels.from_choi(choi, n_in, n_out)


def depth(c: Circuit) -> int:
    """Gate layers along the longest path; trace-out nodes count as depth 0."""
    level: dict[Any, int] = {}
    preds = c.predecessors()
    for n in topo_sort(c):
        base = max((level[p] for p in preds[n.id]), default=0)
        level[n.id] = base + (0 if n.kind == "traceout" else 1)
    return max(level.values(), default=0)


def max_fanin(c: Circuit) -> int:
    return max((len(n.in_wires) for n in c.nodes if n.kind != "traceout"), default=0)


def ancestors_of_output(c: Circuit, wire: int) -> set:
    """Every node with a directed path to output ``wire``."""
    prod = c.producers()
    preds = c.predecessors()
    seen: set = set()
    stack = [prod[wire]] if wire in prod else []
    while stack:
        nid = stack.pop()
        if nid in seen:
            continue
        seen.add(nid)
        stack.extend(preds[nid])
    return seen


class CircuitBuilder:
    """Incremental construction with automatic wire and node numbering.

    Wires handed out by the builder are provisional; :meth:`build` renumbers
    them so inputs (including blanks added later) are ``0..n-1``.
    """

    def __init__(self, n_inputs: int = 0, blank: Iterable[int] = ()):
        self._inputs: list[int] = []
        self._blank: set[int] = set()
        self._next_wire = 0
        self._next_id = 0
        self.nodes: list[Node] = []
        blank = set(blank)
        self.input_wires = [self.add_input(blank=k in blank) for k in range(n_inputs)]

    def _fresh(self) -> int:
        self._next_wire += 1
        return self._next_wire - 1

    def add_input(self, blank: bool = False) -> int:
        w = self._fresh()
        self._inputs.append(w)
        if blank:
            self._blank.add(w)
        return w

    def add(self, gate, wires: Sequence[int], kind: str | None = None, node_id=None, params: dict | None = None) -> list[int]:
        """Append a node on ``wires`` and return its freshly allocated output wires."""
        if node_id is None:
            while any(n.id == self._next_id for n in self.nodes):
                self._next_id += 1
            node_id = self._next_id
            self._next_id += 1
        if kind is None:
            if isinstance(gate, SubroutineRef):
                kind = "subroutine"
            elif gate.kraus is not None and len(gate.kraus) == 1 and gate.n_in == gate.n_out:
                kind = "unitary"
            else:
                kind = "channel"
        n_out = gate.width if isinstance(gate, SubroutineRef) else gate.n_out
        outs = [self._fresh() for _ in range(n_out)]
        self.nodes.append(Node(node_id, gate, tuple(wires), tuple(outs), kind, dict(params or {})))
        return outs

    def unitary(self, u, wires: Sequence[int], node_id=None, params: dict | None = None) -> list[int]:
        return self.add(channels.from_unitary(u), wires, "unitary", node_id, params)

    def named(self, name: str, wires: Sequence[int], theta: float | None = None, node_id=None) -> list[int]:
        from .gates import named

        params = {"name": name.upper()} | ({"theta": float(theta)} if theta is not None else {})
        return self.unitary(named(name, theta), wires, node_id, params)

    def traceout(self, wires: Sequence[int], node_id=None) -> None:
        self.add(channels.trace_out(len(wires), []), wires, "traceout", node_id)

    def measure(self, wires: Sequence[int], record: bool = True, node_id=None) -> list[int]:
        t = channels.basic_measurement(len(wires), record_outcome=record)
        return self.add(t, wires, "measure", node_id, {"record": record})

    def build(self, outputs: Sequence[int] | None = None, result_outputs: Sequence[int] = ()) -> Circuit:
        consumed = {w for n in self.nodes for w in n.in_wires}
        produced = list(self._inputs) + [w for n in self.nodes for w in n.out_wires]
        if outputs is None:
            outputs = [w for w in produced if w not in consumed]
        remap = {w: k for k, w in enumerate(self._inputs)}
        for n in self.nodes:
            for w in n.out_wires:
                remap[w] = len(remap)
        nodes = tuple(
            Node(n.id, n.gate, tuple(remap[w] for w in n.in_wires), tuple(remap[w] for w in n.out_wires), n.kind, n.params)
            for n in self.nodes
        )
        return Circuit(
            len(self._inputs),
            nodes,
            frozenset(remap[w] for w in self._blank),
            tuple(remap[w] for w in result_outputs),
            tuple(remap[w] for w in outputs),
        )


def random_circuit(
    n_qubits: int,
    n_gates: int,
    seed: int | np.random.Generator,
    max_arity: int = 2,
    p_channel: float = 0.3,
    blank: Iterable[int] = (),
) -> Circuit:
    """Random circuit of unitary and CPTP gates on ``n_qubits`` lines.

    Each gate acts on 1..``max_arity`` random lines; with probability
    ``p_channel`` it is a random CPTP map, otherwise a Haar unitary. All lines
    are outputs (in line order) and all are results.
    """
    rng = np.random.default_rng(seed)
    b = CircuitBuilder(n_qubits, blank)
    lines = list(b.input_wires)
    for _ in range(n_gates):
        k = int(rng.integers(1, min(max_arity, n_qubits) + 1))
        which = sorted(rng.choice(n_qubits, size=k, replace=False).tolist())
        if rng.random() < p_channel:
            g = channels.random_cptp(k, k, rng, rank=int(rng.integers(1, 4**k + 1)))
            outs = b.add(g, [lines[q] for q in which], "channel")
        else:
            outs = b.unitary(channels.random_unitary(k, rng), [lines[q] for q in which])
        for q, w in zip(which, outs):
            lines[q] = w
    return b.build(lines, lines)
