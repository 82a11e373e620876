"""Distances between probabilistic functions, states and channels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import channels, linalg
from .channels import SuperOperator
from .circuits.functions import ProbFunction, restrict_to_blank_outputs, subroutine_gate
from .errors import DimensionError, ResourceError, ValidationError
from .states import DensityMatrix

DEFAULT_RESTARTS = 32
DEFAULT_TOL = 1e-4
DEFAULT_SEED = 20240611
MAX_NORM_QUBITS = 4
_MAX_SWEEPS = 1000


def tvd(p, q) -> float:
    """Total variation distance ``sum_j |p_j - q_j|`` (no factor 1/2, range [0, 2])."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimensionError(f"distributions have different lengths {p.shape} and {q.shape}")
    return float(np.sum(np.abs(p - q)))


@dataclass(frozen=True)
class FunctionDistance:
    per_input: np.ndarray
    max: float


def function_distance(f: ProbFunction, g: ProbFunction) -> FunctionDistance:
    """Worst-case row distance ``max_i tvd(f_i, g_i)``."""
    if (f.m, f.p) != (g.m, g.p):
        raise DimensionError(f"functions have shapes ({f.m},{f.p}) and ({g.m},{g.p})")
    rows = np.sum(np.abs(f.table - g.table), axis=1)
    return FunctionDistance(rows, float(rows.max()))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    if rho.n_qubits != sigma.n_qubits:
        raise DimensionError("states act on different numbers of qubits")
    return linalg.trace_norm(rho.mat - sigma.mat)


def max_measurement_tvd(rho: DensityMatrix, sigma: DensityMatrix) -> tuple[float, list[np.ndarray]]:
    """Measurement maximizing the outcome t.v.d. between two states.

    Measuring in an eigenbasis of ``rho - sigma`` gives outcome differences
    equal to the eigenvalues, so the t.v.d. is the trace norm. Returns the
    t.v.d. and the rank-one projectors of that measurement.
    """
    _, v = linalg.herm_eig(rho.mat - sigma.mat)
    projs = [np.outer(v[:, k], v[:, k].conj()) for k in range(v.shape[1])]
    return measurement_tvd(rho, sigma, projs), projs


def measurement_tvd(rho: DensityMatrix, sigma: DensityMatrix, projectors: Sequence[np.ndarray]) -> float:
    p = [np.real(np.trace(P @ rho.mat)) for P in projectors]
    q = [np.real(np.trace(P @ sigma.mat)) for P in projectors]
    return tvd(p, q)


# ---------------------------------------------------------------- diamond norm


@dataclass(frozen=True)
class DiamondResult:
    """Outcome of the restart search for ``||T||_diamond``.

    ``value`` is exactly ``witness_value(t, witness)``, so it is a certified
    lower bound on the norm and the search's estimate of it. ``spread`` is
    ``max - min`` of the per-restart optima.
    """

    value: float
    witness: np.ndarray
    restarts_used: int
    spread: float
    restart_values: np.ndarray = field(repr=False)

    @property
    def lower_bound(self) -> float:
        return self.value

    def to_record(self, tolerance: float, include_witness: bool = True) -> dict:
        rec = {
            "kind": "diamond",
            "value": float(self.value),
            "tolerance": float(tolerance),
            "restarts": int(self.restarts_used),
            "spread": float(self.spread),
        }
        if include_witness:
            rec["witness"] = [[float(z.real), float(z.imag)] for z in self.witness]
        return rec


def _check_norm_input(t: SuperOperator) -> None:
    if t.n_in > MAX_NORM_QUBITS:
        raise ResourceError(f"norms are limited to {MAX_NORM_QUBITS} input qubits, map has {t.n_in}")
    if not t.is_hermitian_preserving():
        raise ValidationError("diamond norm needs a Hermitian-preserving map")


def extended_output(t: SuperOperator, xi) -> np.ndarray:
    """``(T (x) I)(|xi><xi|)`` with a reference system as large as the input.

    ``xi`` has length ``d_in**2`` (or a stack of such vectors) and is indexed
    ``(input, reference)``; the result is indexed ``(output, reference)``.
    """
    d = t.d_in
    xi = np.asarray(xi, dtype=np.complex128)
    m = xi.reshape(xi.shape[:-1] + (d, d))
    out = np.einsum("aibj,...ir,...js->...arbs", t.choi4, m, m.conj(), optimize=True)
    return out.reshape(xi.shape[:-1] + (t.d_out * d, t.d_out * d))


def _trace_norms(m: np.ndarray) -> np.ndarray:
    return np.abs(np.linalg.eigvalsh((m + linalg.dagger(m)) / 2)).sum(axis=-1)


def witness_value(t: SuperOperator, xi) -> float:
    """``||(T (x) I)(|xi><xi|)||_1`` for a unit vector ``xi``."""
    return linalg.trace_norm(extended_output(t, xi))


def _sign(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + linalg.dagger(m)) / 2)
    return (v * np.where(w >= 0, 1.0, -1.0)[..., None, :]) @ linalg.dagger(v)


def _seesaw(t: SuperOperator, xi: np.ndarray, tol: float) -> np.ndarray:
    """Alternating ascent on ``Tr(S (T (x) I)(|xi><xi|))`` for a stack of start vectors.

    For fixed ``xi`` the best ``S`` (Hermitian with ``S^2 = I``) is the sign of
    the output; for fixed ``S`` the objective is a quadratic form
    ``xi^dagger B xi`` maximized by the top eigenvector of ``B``. Neither
    half-step lowers the trace norm. Rows stop once their gain per sweep
    drops below ``tol / 1000``. Returns the final vectors.
    """
    d, do = t.d_in, t.d_out
    c4 = t.choi4
    xi = xi.copy()
    value = _trace_norms(extended_output(t, xi))
    active = np.ones(len(xi), dtype=bool)
    for _ in range(_MAX_SWEEPS):
        if not active.any():
            break
        cur = xi[active]
        s4 = _sign(extended_output(t, cur)).reshape(-1, do, d, do, d)
        b = np.einsum("zbsar,aibj->zjsir", s4, c4, optimize=True).reshape(-1, d * d, d * d)
        _, vecs = np.linalg.eigh((b + linalg.dagger(b)) / 2)
        nxt = vecs[:, :, -1]
        new = _trace_norms(extended_output(t, nxt))
        idx = np.flatnonzero(active)
        gain = new - value[idx]
        better = gain > 0
        xi[idx[better]] = nxt[better]
        value[idx[better]] = new[better]
        active[idx[gain <= tol * 1e-3]] = False
    return xi


def diamond_norm(
    t: SuperOperator,
    restarts: int = DEFAULT_RESTARTS,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
) -> DiamondResult:
    """Estimate ``||T||_diamond = max ||(T (x) I)(|xi><xi|)||_1`` over unit ``xi``.

    For Hermitian-preserving ``T`` the maximum over the trace-norm unit ball
    is attained at rank-one inputs, so the search runs over unit vectors on
    the input times a reference copy. Each restart starts from a random
    vector (seeded per restart from ``seed``) and runs :func:`_seesaw`. The
    best restart wins, ties going to the lowest restart index.

    Raises:
        ValidationError: the map is not Hermitian-preserving.
        ResourceError: more than four input qubits.
    """
    _check_norm_input(t)
    if restarts < 1:
        raise ValidationError("restarts must be at least 1")
    d2 = t.d_in**2
    starts = []
    for ss in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(ss)
        xi = rng.normal(size=d2) + 1j * rng.normal(size=d2)
        starts.append(xi / np.linalg.norm(xi))
    wits = _seesaw(t, np.array(starts), tol)
    vals = np.array([witness_value(t, w) for w in wits])
    best = int(np.argmax(vals))
    return DiamondResult(float(vals[best]), wits[best], restarts, float(vals.max() - vals.min()), vals)


def diamond_distance(t1: SuperOperator, t2: SuperOperator, **opts) -> DiamondResult:
    return diamond_norm(t1 - t2, **opts)


def naive_norm(t: SuperOperator, restarts: int = DEFAULT_RESTARTS, seed: int = DEFAULT_SEED, tol: float = DEFAULT_TOL) -> float:
    """Estimate the unstabilized norm ``max ||T(X)||_1`` over ``||X||_1 <= 1``.

    The maximum sits at a rank-one ``X = u v^dagger``. Alternates between the
    polar unitary ``S`` of ``T(u v^dagger)`` and the top singular pair of the
    adjoint image ``T*(S)``.
    """
    if t.n_in > MAX_NORM_QUBITS:
        raise ResourceError(f"norms are limited to {MAX_NORM_QUBITS} input qubits, map has {t.n_in}")
    d = t.d_in
    best = 0.0
    for ss in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(ss)
        u = rng.normal(size=d) + 1j * rng.normal(size=d)
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
        value = linalg.trace_norm(t.act(np.outer(u, v.conj())))
        for _ in range(_MAX_SWEEPS):
            a, _, bh = np.linalg.svd(t.act(np.outer(u, v.conj())))
            y = t.adjoint_act(a @ bh)
            uu, _, vh = np.linalg.svd(y)
            u, v = uu[:, 0], vh[0].conj()
            new = linalg.trace_norm(t.act(np.outer(u, v.conj())))
            if new - value <= tol * 1e-3:
                value = max(value, new)
                break
            value = new
        best = max(best, value)
    return best


def transpose_map() -> SuperOperator:
    """The one-qubit transpose ``|i><j| -> |j><i|``: positive, trace preserving, not CP."""
    choi = np.zeros((4, 4), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            choi[j * 2 + i, i * 2 + j] = 1.0
    return SuperOperator(1, 1, choi)


# ------------------------------------------------------------ closed forms


def _hull_distance(points: np.ndarray, tol: float = 1e-12) -> float:
    """Distance from 0 to the convex hull of points on the unit circle."""
    ang = np.sort(np.mod(np.angle(points), 2 * np.pi))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    if len(ang) > 1 and gaps.max() <= np.pi + tol:
        return 0.0
    pts = np.exp(1j * ang)
    best = float(np.min(np.abs(pts)))
    for a in range(len(pts)):
        for b in range(a + 1, len(pts)):
            p, q = pts[a], pts[b]
            seg = q - p
            if abs(seg) < tol:
                continue
            s = np.clip(-np.real(np.conj(seg) * p) / abs(seg) ** 2, 0.0, 1.0)
            best = min(best, float(abs(p + s * seg)))
    return best


def unitary_pair_diamond(v, w) -> float:
    """``||V.V^dagger - W.W^dagger||_diamond = 2 sqrt(1 - d^2)``.

    ``d`` is the distance from the origin to the convex hull of the
    eigenvalues of ``V W^dagger``.
    """
    v, w = linalg.as_cmatrix(v, "V"), linalg.as_cmatrix(w, "W")
    if v.shape != w.shape:
        raise DimensionError("unitaries have different shapes")
    if not (linalg.is_unitary(v) and linalg.is_unitary(w)):
        raise ValidationError("inputs must be unitary")
    d = _hull_distance(np.linalg.eigvals(v @ linalg.dagger(w)))
    return 2.0 * float(np.sqrt(max(0.0, 1.0 - d * d)))


# ------------------------------------------------------- error accumulation


@dataclass
class ErrorAccumulationReport:
    eps: list[float]
    prefix_errors: list[float]
    prefix_bounds: list[float]
    function_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        ok = all(e <= b + self.tolerance for e, b in zip(self.prefix_errors, self.prefix_bounds))
        return ok and self.function_error <= self.prefix_bounds[-1] + self.tolerance

    @property
    def worst_slack(self) -> float:
        """Smallest ``bound - error`` over all checks (negative means violated)."""
        slacks = [b - e for e, b in zip(self.prefix_errors, self.prefix_bounds)]
        slacks.append(self.prefix_bounds[-1] - self.function_error)
        return float(min(slacks))


def _basis_distribution(t: SuperOperator) -> np.ndarray:
    """Output distributions of ``t`` on computational basis inputs (one row each)."""
    d = t.d_in
    basis = np.zeros((d, d, d), dtype=np.complex128)
    basis[np.arange(d), np.arange(d), np.arange(d)] = 1.0
    out = t.act(basis)
    return np.clip(np.real(np.einsum("kaa->ka", out)), 0.0, None)


def verify_error_accumulation(
    pairs: Sequence[tuple[SuperOperator, SuperOperator]],
    eps: Sequence[float] | None = None,
    tol: float = 1e-3,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = DEFAULT_SEED,
) -> ErrorAccumulationReport:
    """Check that a chain's error is at most the sum of its per-gate errors.

    ``pairs`` lists ``(T_j, T_j')`` in application order. Per-gate errors
    ``eps`` default to diamond-norm estimates of ``T_j' - T_j``. For each
    prefix the composite ``||T'_k...T'_1 - T_k...T_1||_diamond`` is compared
    with the running sum, and the end-to-end probabilistic-function distance
    on basis inputs with the full sum.
    """
    if not pairs:
        raise ValidationError("need at least one gate pair")
    if eps is None:
        eps = [diamond_distance(b, a, restarts=restarts, seed=seed).value for a, b in pairs]
    eps = [float(e) for e in eps]
    if len(eps) != len(pairs):
        raise ValidationError("one error bound per gate pair is required")
    ideal, noisy = pairs[0]
    errors = [diamond_distance(noisy, ideal, restarts=restarts, seed=seed).value]
    for a, b in pairs[1:]:
        ideal, noisy = channels.compose(a, ideal), channels.compose(b, noisy)
        errors.append(diamond_distance(noisy, ideal, restarts=restarts, seed=seed).value)
    bounds = list(np.cumsum(eps))
    fdist = float(np.max(np.sum(np.abs(_basis_distribution(noisy) - _basis_distribution(ideal)), axis=1)))
    return ErrorAccumulationReport(eps, errors, [float(b) for b in bounds], fdist, tol)


@dataclass(frozen=True)
class SubroutineErrorReport:
    lhs: float
    rhs: float
    function_distance: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + self.tolerance


def verify_subroutine_error(
    f: ProbFunction,
    f2: ProbFunction,
    tol: float = 1e-3,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = DEFAULT_SEED,
) -> SubroutineErrorReport:
    """Compare ``||g_f2 - g_f||_diamond`` with ``5 ||f - f2||``.

    The gates are taken on their defined domain: the input register plus
    blank output wires, i.e. as maps from ``m`` to ``m + p`` qubits.
    """
    g1 = restrict_to_blank_outputs(subroutine_gate(f), f)
    g2 = restrict_to_blank_outputs(subroutine_gate(f2), f2)
    dist = function_distance(f, f2).max
    lhs = diamond_distance(g2, g1, restarts=restarts, seed=seed).value
    return SubroutineErrorReport(lhs, 5.0 * dist, dist, tol)
