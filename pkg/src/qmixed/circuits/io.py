"""JSON circuit files.

A circuit file is an object::

    {"format": "qmixed-circuit", "version": 1,
     "n_wires_in": 2, "blank_inputs": [1], "result_outputs": [3],
     "outputs": [2, 3],                      # optional
     "nodes": [{"id": 0, "kind": "unitary", "params": {"name": "H"},
                "in_wires": [1], "out_wires": [2]}, ...]}

Node ``params`` by kind:

* ``unitary``: ``{"name": "H"}``, ``{"name": "PHASE", "theta": 0.3}`` (also
  written ``"PHASE(0.3)"``), or ``{"matrix": <matrix record>}``.
* ``channel``: ``{"channel": <channel record>}``.
* ``measure``: ``{"record": true}`` (computational basis on every input wire).
* ``traceout``: ``{}``.
* ``subroutine``: ``{"function": {"m", "p", "table"}, "name": ...}`` plus an
  optional implementing circuit, either inline as ``"impl"`` or by reference
  as ``"impl_path"`` (relative to the referring file).
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Any

from .. import channels, linalg
from ..errors import ParseError, QMixedError
from . import gates
from .core import KINDS, Circuit, Node
from .functions import ProbFunction, SubroutineRef

FORMAT = "qmixed-circuit"
VERSION = 1
_NAME_WITH_ANGLE = re.compile(r"^\s*([A-Za-z]+)\s*\(\s*([^)]+)\)\s*$")


def _need(rec: Any, key: str, where: str):
    if not isinstance(rec, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in rec:
        raise ParseError(f"{where}: missing field '{key}'")
    return rec[key]


def _int_list(val, where: str) -> list[int]:
    if not isinstance(val, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in val):
        raise ParseError(f"{where}: expected a list of integers")
    return list(val)


def _unitary_gate(params: dict, where: str):
    if "matrix" in params:
        label = {"name": str(params["label"])} if "label" in params else {}
        return channels.from_unitary(linalg.matrix_from_record(params["matrix"])), label
    name = params.get("name")
    if not isinstance(name, str):
        raise ParseError(f"{where}: unitary needs 'name' or 'matrix'")
    theta = params.get("theta")
    hit = _NAME_WITH_ANGLE.match(name)
    if hit:
        name = hit.group(1)
        try:
            theta = float(hit.group(2))
        except ValueError:
            raise ParseError(f"{where}: bad angle in {params['name']!r}") from None
    try:
        u = gates.named(name, theta)
    except ParseError as exc:
        raise ParseError(f"{where}: {exc}") from None
    norm = {"name": name.upper()} | ({"theta": float(theta)} if theta is not None else {})
    return channels.from_unitary(u), norm


def _node_gate(kind: str, params: dict, n_in: int, where: str, base: Path | None):
    if kind == "unitary":
        return _unitary_gate(params, where)
    if kind == "channel":
        return channels.from_record(_need(params, "channel", where)), {}
    if kind == "measure":
        record = params.get("record", True)
        if not isinstance(record, bool):
            raise ParseError(f"{where}.record: expected true or false")
        return channels.basic_measurement(n_in, record_outcome=record), {"record": record}
    if kind == "traceout":
        return channels.trace_out(n_in, []), {}
    f = ProbFunction.from_record(_need(params, "function", where))
    impl = None
    if "impl" in params:
        impl = circuit_from_record(params["impl"], base)
    elif "impl_path" in params:
        path = Path(params["impl_path"])
        if base is not None and not path.is_absolute():
            path = base / path
        impl = load_circuit(path)
    return SubroutineRef(f, impl, str(params.get("name", ""))), {}


def circuit_from_record(rec: Any, base: Path | None = None) -> Circuit:
    """Build a validated circuit from a parsed JSON object.

    Raises:
        ParseError: malformed structure, with the offending field named.
        ValidationError: well-formed but inconsistent circuit.
    """
    if not isinstance(rec, dict):
        raise ParseError("circuit: expected an object")
    if rec.get("format", FORMAT) != FORMAT:
        raise ParseError(f"format: expected {FORMAT!r}, got {rec.get('format')!r}")
    if rec.get("version", VERSION) != VERSION:
        raise ParseError(f"version: unsupported version {rec.get('version')!r}")
    n = _need(rec, "n_wires_in", "circuit")
    if not isinstance(n, int) or isinstance(n, bool):
        raise ParseError("n_wires_in: expected an integer")
    blank = _int_list(rec.get("blank_inputs", []), "blank_inputs")
    results = _int_list(rec.get("result_outputs", []), "result_outputs")
    outputs = _int_list(rec["outputs"], "outputs") if "outputs" in rec else None
    raw = _need(rec, "nodes", "circuit")
    if not isinstance(raw, list):
        raise ParseError("nodes: expected a list")
    nodes = []
    for k, nd in enumerate(raw):
        where = f"nodes[{k}]"
        node_id = _need(nd, "id", where)
        if not isinstance(node_id, (int, str)) or isinstance(node_id, bool):
            raise ParseError(f"{where}.id: expected an integer or string")
        kind = _need(nd, "kind", where)
        if kind not in KINDS:
            raise ParseError(f"{where}.kind: unknown kind {kind!r}")
        ins = _int_list(_need(nd, "in_wires", where), f"{where}.in_wires")
        outs = _int_list(_need(nd, "out_wires", where), f"{where}.out_wires")
        params = nd.get("params", {})
        if not isinstance(params, dict):
            raise ParseError(f"{where}.params: expected an object")
        try:
            gate, params = _node_gate(kind, params, len(ins), f"{where}.params", base)
        except QMixedError as exc:
            if isinstance(exc, ParseError) and str(exc).startswith(where):
                raise
            raise type(exc)(f"{where}.params: {exc}") from None
        nodes.append(Node(node_id, gate, tuple(ins), tuple(outs), kind, params))
    return Circuit(n, tuple(nodes), frozenset(blank), tuple(results), outputs)


def load_circuit(path: str | Path) -> Circuit:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        rec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path.name}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return circuit_from_record(rec, path.parent)


def _is_standard(params: dict) -> bool:
    try:
        gates.named(params["name"], params.get("theta"))
    except (KeyError, ParseError):
        return False
    return True


def _node_record(node: Node) -> dict:
    params: dict
    if node.kind == "unitary":
        if _is_standard(node.params):
            params = {k: node.params[k] for k in ("name", "theta") if k in node.params}
        else:
            params = {"matrix": linalg.matrix_to_record(node.gate.kraus[0])}
            if "name" in node.params:
                params["label"] = str(node.params["name"])
    elif node.kind == "channel":
        params = {"channel": node.gate.to_record("kraus")}
    elif node.kind == "measure":
        params = {"record": bool(node.params.get("record", node.gate.n_out > node.gate.n_in))}
    elif node.kind == "traceout":
        params = {}
    else:
        s = node.gate
        params = {"function": s.f.to_record(), "name": s.name}
        if s.impl is not None:
            params["impl"] = circuit_to_record(s.impl)
    return {
        "id": node.id,
        "kind": node.kind,
        "params": params,
        "in_wires": list(node.in_wires),
        "out_wires": list(node.out_wires),
    }


def circuit_to_record(c: Circuit) -> dict:
    """Inverse of :func:`circuit_from_record`; nodes are written in id order."""
    from .core import id_key

    return {
        "format": FORMAT,
        "version": VERSION,
        "n_wires_in": c.n_wires_in,
        "blank_inputs": sorted(c.blank_inputs),
        "result_outputs": list(c.result_outputs),
        "outputs": list(c.outputs),
        "nodes": [_node_record(n) for n in sorted(c.nodes, key=lambda n: id_key(n.id))],
    }


def dumps(rec: Any) -> str:
    """Canonical JSON text (sorted keys, fixed separators) for byte-stable files."""
    return json.dumps(rec, sort_keys=True, indent=1, separators=(",", ": ")) + "\n"


def save_circuit(c: Circuit, path: str | Path) -> None:
    Path(path).write_text(dumps(circuit_to_record(c)))
