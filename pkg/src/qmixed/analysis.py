"""Correlation graphs and the depth lower bounds they imply."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .circuits.core import Circuit, ancestors_of_output, depth, evaluate, id_key, max_fanin
from .circuits.functions import ProbFunction
from .errors import DimensionError, ValidationError
from .states import DensityMatrix

TOL_CORR = 1e-8


@dataclass(frozen=True)
class CorrelationGraph:
    n_nodes: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        edges = frozenset((min(a, b), max(a, b)) for a, b in self.edges)
        if any(a == b for a, b in edges):
            raise ValidationError("correlation graphs have no self-loops")
        if any(not 0 <= a < self.n_nodes or not 0 <= b < self.n_nodes for a, b in edges):
            raise ValidationError("edge endpoint outside the graph")
        object.__setattr__(self, "edges", edges)

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    @property
    def max_degree(self) -> int:
        return max((self.degree(v) for v in range(self.n_nodes)), default=0)

    def is_complete(self) -> bool:
        return len(self.edges) == self.n_nodes * (self.n_nodes - 1) // 2


def is_product(rho: DensityMatrix | np.ndarray, tol: float = TOL_CORR) -> bool:
    """Whether a two-qubit state equals the tensor product of its marginals."""
    m = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if m.shape != (4, 4):
        raise DimensionError(f"expected a two-qubit state, got shape {m.shape}")
    prod = np.kron(linalg.partial_trace(m, [0]), linalg.partial_trace(m, [1]))
    return bool(np.max(np.abs(m - prod)) <= tol)


def correlation_graph(rho: DensityMatrix, tol: float = TOL_CORR) -> CorrelationGraph:
    """Edge ``(a, b)`` whenever the reduced state on qubits ``a, b`` is not a product."""
    n = rho.n_qubits
    edges = {
        (a, b)
        for a, b in itertools.combinations(range(n), 2)
        if not is_product(linalg.partial_trace(rho.mat, [a, b]), tol)
    }
    return CorrelationGraph(n, frozenset(edges))


def distribution_correlation_graph(dist, tol: float = TOL_CORR) -> CorrelationGraph:
    """Edge ``(a, b)`` whenever output bits ``a`` and ``b`` are not independent."""
    dist = np.asarray(dist, dtype=float)
    r = linalg.num_qubits(dist.size, "distribution length")
    t = dist.reshape((2,) * r)
    edges = set()
    for a, b in itertools.combinations(range(r), 2):
        joint = t.sum(axis=tuple(k for k in range(r) if k not in (a, b)))
        if np.max(np.abs(joint - np.outer(joint.sum(axis=1), joint.sum(axis=0)))) > tol:
            edges.add((a, b))
    return CorrelationGraph(r, frozenset(edges))


def function_correlation_graph(f: ProbFunction, i: int, tol: float = TOL_CORR) -> CorrelationGraph:
    """Correlation graph of the output bits of ``f`` on input ``i``."""
    if not 0 <= i < 2**f.m:
        raise ValidationError(f"input {i} out of range for m={f.m}")
    return distribution_correlation_graph(f.table[i], tol)


def half_half_function(r: int) -> ProbFunction:
    """Zero-input function returning ``0^r`` or ``1^r`` with probability 1/2 each."""
    t = np.zeros((1, 2**r))
    t[0, 0] = t[0, -1] = 0.5
    return ProbFunction(0, r, t)


@dataclass(frozen=True)
class DepthReport:
    circuit_depth: int
    k: int
    c: int
    bound: float
    bound_function_form: float
    satisfied: bool
    edges: tuple[tuple[int, int], ...]

    def to_record(self) -> dict:
        return {
            "depth": self.circuit_depth,
            "k": self.k,
            "c": self.c,
            "bound_state_form": self.bound,
            "bound_function_form": self.bound_function_form,
            "satisfied": self.satisfied,
            "edges": [list(e) for e in self.edges],
        }


def _log(c: int, k: int) -> float:
    return 0.0 if c <= 0 else math.log(c) / math.log(max(k, 2))


def depth_bound_check(c: Circuit, rho_or_f=None, k: int | None = None) -> DepthReport:
    """Compare the circuit depth with the correlation lower bound.

    ``rho_or_f`` is the circuit's final state (its correlation graph is used)
    or the function it computes (the largest degree over all inputs is used).
    ``None`` evaluates ``c`` itself, which then must have only blank inputs.
    Both ``log_k c / 2`` and ``log_k c`` are reported; ``satisfied`` tests the
    first. ``k`` defaults to the circuit's largest fan-in; ``c = 0`` gives 0.
    """
    if rho_or_f is None:
        rho_or_f = evaluate(c)
    if isinstance(rho_or_f, ProbFunction):
        graphs = [function_correlation_graph(rho_or_f, i) for i in range(2**rho_or_f.m)]
        g = max(graphs, key=lambda gr: gr.max_degree)
    elif isinstance(rho_or_f, DensityMatrix):
        g = correlation_graph(rho_or_f)
    else:
        raise ValidationError("expected a DensityMatrix or a ProbFunction")
    k = max_fanin(c) if k is None else int(k)
    deg = g.max_degree
    d = depth(c)
    bound = 0.5 * _log(deg, k)
    return DepthReport(d, k, deg, bound, _log(deg, k), d >= bound - 1e-12, tuple(sorted(g.edges)))


def causality_witness(c: Circuit, a: int, b: int):
    """A gate with directed paths to both outputs ``a`` and ``b``, or ``None``.

    ``a`` and ``b`` are positions in ``c.outputs`` (the qubit order of
    :func:`evaluate`). The returned id is the smallest common ancestor.
    """
    n = len(c.outputs)
    if not (0 <= a < n and 0 <= b < n):
        raise ValidationError(f"output positions must lie in 0..{n - 1}")
    common = ancestors_of_output(c, c.outputs[a]) & ancestors_of_output(c, c.outputs[b])
    return min(common, key=id_key) if common else None


def analyze(c: Circuit, rho_in: DensityMatrix | None = None) -> dict:
    """Depth report of ``c`` evaluated on ``rho_in`` as a plain record."""
    return depth_bound_check(c, evaluate(c, rho_in)).to_record()
