"""Command-line front end: ``qmixed run|analyze|dilate|compile|distance|verify``.

Every command writes one report, either as ``key: value`` text lines or as a
JSON record, headed by the report format version. Reports contain no timing
or other run-dependent data, so identical inputs and seed give identical
bytes. Exit codes: 0 ok, 2 parse error, 3 validation error, 4 size cap
exceeded, 5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import analysis, channels, linalg, metrics, states, verify
from .circuits import io as circuit_io
from .circuits import gates
from .circuits.compiler import compile_subroutine
from .circuits.core import circuit_channel, computed_function, evaluate
from .circuits.functions import ProbFunction, SubroutineRef, subroutine_gate
from .errors import ParseError, QMixedError, ResourceError, ValidationError

REPORT_FORMAT = "qmixed-report"
REPORT_VERSION = 1
DEFAULT_SEED = metrics.DEFAULT_SEED


# ---------------------------------------------------------------- loading


def _read_json(path: str) -> Any:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p.name}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _is_file(arg: str) -> bool:
    return Path(arg).is_file()


def _state_operand(arg: str) -> states.DensityMatrix:
    """A state file, or a computational basis bitstring such as ``01``."""
    if _is_file(arg):
        return states.DensityMatrix.from_record(_read_json(arg))
    if re.fullmatch(r"[01]+", arg):
        return states.basis_state(arg)
    raise ParseError(f"{arg!r} is neither a state file nor a bitstring")


def _unitary_operand(arg: str) -> np.ndarray:
    """A matrix-record file or a standard gate name like ``Z`` or ``PHASE(0.5)``."""
    if _is_file(arg):
        return linalg.matrix_from_record(_read_json(arg))
    hit = re.fullmatch(r"\s*([A-Za-z]+)\s*(?:\(\s*([^)]+)\))?\s*", arg)
    if not hit:
        raise ParseError(f"{arg!r} is neither a matrix file nor a gate name")
    try:
        theta = float(hit.group(2)) if hit.group(2) is not None else None
    except ValueError:
        raise ParseError(f"bad angle in {arg!r}") from None
    return gates.named(hit.group(1), theta)


def _channel_operand(arg: str) -> channels.SuperOperator:
    if _is_file(arg):
        rec = _read_json(arg)
        if isinstance(rec, dict) and "rows" in rec:
            return channels.from_unitary(linalg.matrix_from_record(rec))
        return channels.from_record(rec)
    return channels.from_unitary(_unitary_operand(arg))


def _function_operand(arg: str) -> ProbFunction:
    return ProbFunction.from_record(_read_json(arg))


def _distribution_operand(arg: str) -> np.ndarray:
    if _is_file(arg):
        val = _read_json(arg)
    else:
        try:
            val = json.loads(arg)
        except json.JSONDecodeError:
            raise ParseError(f"{arg!r} is neither a file nor a JSON list") from None
    try:
        return np.asarray(val, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise ParseError(f"{arg!r} is not a list of numbers") from None


def _input_state(args, n_data: int) -> states.DensityMatrix | None:
    if args.state is not None:
        rho = states.DensityMatrix.from_record(_read_json(args.state))
    elif args.input is not None:
        if not re.fullmatch(r"[01]*", args.input):
            raise ParseError(f"--input must be a bitstring, got {args.input!r}")
        rho = states.basis_state(args.input) if args.input else None
    else:
        rho = states.basis_state("0" * n_data) if n_data else None
    got = 0 if rho is None else rho.n_qubits
    if got != n_data:
        raise ValidationError(f"circuit has {n_data} data inputs, input has {got} qubits")
    return rho


# ---------------------------------------------------------------- commands


def cmd_run(args) -> tuple[dict, int]:
    c = circuit_io.load_circuit(args.circuit)
    rho = _input_state(args, len(c.data_inputs))
    final = evaluate(c, rho, max_qubits=args.max_qubits)
    res_pos = [c.outputs.index(w) for w in c.result_outputs]
    reduced = linalg.partial_trace(final.mat, res_pos)
    dist = np.clip(np.real(np.diag(reduced)), 0.0, None)
    report = {
        "final_state": final.to_record(),
        "result_outputs": list(c.result_outputs),
        "distribution": [float(x) for x in dist],
    }
    if rho is None or args.state is None:
        f = computed_function(c, max_qubits=args.max_qubits)
        report["function"] = f.to_record()
    return report, 0


def cmd_analyze(args) -> tuple[dict, int]:
    c = circuit_io.load_circuit(args.circuit)
    rho = _input_state(args, len(c.data_inputs))
    final = evaluate(c, rho, max_qubits=args.max_qubits)
    rep = analysis.depth_bound_check(c, final)
    return rep.to_record(), 0 if rep.satisfied else 5


def cmd_dilate(args) -> tuple[dict, int]:
    t = channels.from_record(_read_json(args.channel))
    linalg.check_qubit_cap(t.n_in + t.n_out + max(t.n_in, t.n_out), args.max_qubits)
    d = channels.dilate_to_unitary(t)
    tol = 1e-9 if args.tol is None else args.tol
    residual, unitarity = d.residual(), d.unitarity_residual()
    report = {
        "n_in": t.n_in,
        "n_out": t.n_out,
        "ancilla_qubits": d.ancilla_count,
        "discarded_qubits": d.env_count,
        "total_qubits": d.total_qubits,
        "unitary": linalg.matrix_to_record(d.u),
        "residual": residual,
        "unitarity_residual": unitarity,
        "tolerance": tol,
    }
    return report, 0 if max(residual, unitarity) <= tol else 5


def _load_subroutine(path: str) -> SubroutineRef:
    rec = _read_json(path)
    if not isinstance(rec, dict) or "function" not in rec:
        raise ParseError("subroutine file: missing field 'function'")
    f = ProbFunction.from_record(rec["function"])
    base = Path(path).parent
    if "impl" in rec:
        impl = circuit_io.circuit_from_record(rec["impl"], base)
    elif "impl_path" in rec:
        impl = circuit_io.load_circuit(base / rec["impl_path"])
    else:
        raise ParseError("subroutine file: needs 'impl' or 'impl_path'")
    return SubroutineRef(f, impl, str(rec.get("name", "")))


def cmd_compile(args) -> tuple[dict, int]:
    s = _load_subroutine(args.subroutine)
    m, p, w = s.f.m, s.f.p, len(s.impl.blank_inputs)
    linalg.check_qubit_cap(2 * m + p + w + 1, args.max_qubits)
    comp = compile_subroutine(s)
    residual = linalg.trace_norm(circuit_channel(comp, args.max_qubits).choi - subroutine_gate(s.f).choi)
    tol = 1e-9 if args.tol is None else args.tol
    report = {
        "circuit": circuit_io.circuit_to_record(comp),
        "gate_counts": comp.meta["gate_counts"],
        "residual": residual,
        "tolerance": tol,
    }
    return report, 0 if residual <= tol else 5


def cmd_distance(args) -> tuple[dict, int]:
    kind, ops = args.kind, args.operands
    allowed = (1, 2) if kind in ("diamond", "naive") else (2,)
    if len(ops) not in allowed:
        raise ParseError(f"distance {kind} takes {' or '.join(map(str, allowed))} operands, got {len(ops)}")
    tol = metrics.DEFAULT_TOL if args.tol is None else args.tol
    if kind == "tvd":
        return {"kind": kind, "value": metrics.tvd(*map(_distribution_operand, ops))}, 0
    if kind == "function":
        fd = metrics.function_distance(*map(_function_operand, ops))
        return {"kind": kind, "value": fd.max, "per_input": [float(x) for x in fd.per_input]}, 0
    if kind == "trace":
        r, s = map(_state_operand, ops)
        val, _ = metrics.max_measurement_tvd(r, s)
        return {"kind": kind, "value": metrics.trace_distance(r, s), "best_measurement_tvd": val}, 0
    if kind == "unitary-pair":
        return {"kind": kind, "value": metrics.unitary_pair_diamond(*map(_unitary_operand, ops))}, 0
    maps = [_channel_operand(o) for o in ops]
    t = maps[0] if len(maps) == 1 else maps[0] - maps[1]
    if kind == "naive":
        return {"kind": kind, "value": metrics.naive_norm(t, seed=args.seed, tol=tol), "tolerance": tol}, 0
    res = metrics.diamond_norm(t, seed=args.seed, tol=tol)
    return res.to_record(tol), 0


def cmd_verify(args) -> tuple[dict, int]:
    results = verify.run_suite(args.suite, seed=args.seed, tol=args.tol)
    failed = [r.name for r in results if not r.passed]
    report = {
        "suite": args.suite,
        "passed": not failed,
        "failed": failed,
        "properties": [r.to_record() for r in results],
    }
    return report, 0 if not failed else 5


COMMANDS = {
    "run": cmd_run,
    "analyze": cmd_analyze,
    "dilate": cmd_dilate,
    "compile": cmd_compile,
    "distance": cmd_distance,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------- output


def _text_lines(rec: Any, prefix: str = "") -> list[str]:
    if isinstance(rec, dict):
        out = []
        for k in sorted(rec):
            out.extend(_text_lines(rec[k], f"{prefix}{k}."))
        return out
    if isinstance(rec, list) and any(isinstance(x, dict) for x in rec):
        out = []
        for k, x in enumerate(rec):
            out.extend(_text_lines(x, f"{prefix}{k}."))
        return out
    return [f"{prefix[:-1]}: {json.dumps(rec)}"]


def render(command: str, report: dict, fmt: str) -> str:
    header = {"format": REPORT_FORMAT, "version": REPORT_VERSION, "command": command}
    if fmt == "record":
        return circuit_io.dumps(header | {"report": report})
    lines = [f"# {REPORT_FORMAT} v{REPORT_VERSION} {command}"] + _text_lines(report)
    return "\n".join(lines) + "\n"


def _max_qubits(text: str) -> int:
    n = int(text)
    if not 0 <= n <= linalg.MAX_QUBITS:
        raise argparse.ArgumentTypeError(f"must be between 0 and {linalg.MAX_QUBITS}")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--tol", type=float, default=None, help="override the pass/fail tolerance")
    common.add_argument("--format", choices=("text", "record"), default="text")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--max-qubits", type=_max_qubits, default=linalg.MAX_QUBITS, help="register size cap (<= 12)")

    parser = argparse.ArgumentParser(prog="qmixed", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("run", "analyze"):
        sp = sub.add_parser(name, parents=[common], help=f"{name} a circuit file")
        sp.add_argument("circuit")
        grp = sp.add_mutually_exclusive_group()
        grp.add_argument("--input", help="basis bitstring for the data inputs (default all zeros)")
        grp.add_argument("--state", help="density-matrix record file for the data inputs")

    sp = sub.add_parser("dilate", parents=[common], help="unitary dilation of a channel file")
    sp.add_argument("channel")

    sp = sub.add_parser("compile", parents=[common], help="compile a subroutine file to a unitary circuit")
    sp.add_argument("subroutine")

    sp = sub.add_parser("distance", parents=[common], help="distances and norms")
    sp.add_argument("kind", choices=("tvd", "function", "trace", "diamond", "naive", "unitary-pair"))
    sp.add_argument("operands", nargs="+")

    sp = sub.add_parser("verify", parents=[common], help="run a verification suite")
    sp.add_argument("suite", choices=verify.SUITES + ("all",))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code = COMMANDS[args.command](args)
    except QMixedError as exc:
        print(f"error[{exc.exit_code}] {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return exc.exit_code
    except MemoryError:
        print(f"error[{ResourceError.exit_code}] ResourceError: out of memory", file=sys.stderr)
        return ResourceError.exit_code
    text = render(args.command, report, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def _one_line(exc: Exception) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
