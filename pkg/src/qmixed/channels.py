"""Quantum gates as linear maps on operators, stored as Choi matrices.

Choi convention (output system first, input system second)::

    choi = sum_{i,j} T(|i><j|) (x) |i><j|

so ``choi[a*d_in + i, b*d_in + j] = <a| T(|i><j|) |b>``. A Kraus operator
``K`` contributes ``vec(K) vec(K)^dagger`` with ``vec(K) = K.reshape(-1)``
(row-major). Worked one-qubit example: the identity channel has
``choi = |00>+|11>`` outer itself, i.e. ones at the four corners
``(0,0), (0,3), (3,0), (3,3)``; the bit flip ``X`` has ones at ``(1,1),
(1,2), (2,1), (2,2)``.

The map is completely positive iff ``choi`` is PSD, and trace preserving iff
tracing ``choi`` over the output leaves the identity on the input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .errors import DimensionError, ParseError, ValidationError
from .linalg import dagger
from .states import TOL_PSD, DensityMatrix, validate

TOL_TP = 1e-9
GRAM_SCHMIDT_SKIP = 1e-6


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SuperOperator:
    """Linear map ``L(C^{2^n_in}) -> L(C^{2^n_out})``.

    Instances built by the public constructors are validated CPTP and carry a
    Kraus decomposition in ``kraus``. Linear combinations (``a - b``,
    ``0.5 * a``) produce unvalidated maps with ``cptp=False`` and no Kraus
    cache; those exist for norm computations only.
    """

    n_in: int
    n_out: int
    _choi: np.ndarray | None
    kraus: tuple[np.ndarray, ...] | None = None
    cptp: bool = False

    @property
    def choi(self) -> np.ndarray:
        """Choi matrix; built from the Kraus operators on first access when absent."""
        if self._choi is None:
            object.__setattr__(self, "_choi", _frozen(_choi_from_kraus(self.kraus)))
        return self._choi

    @property
    def d_in(self) -> int:
        return 2**self.n_in

    @property
    def d_out(self) -> int:
        return 2**self.n_out

    @property
    def choi4(self) -> np.ndarray:
        """Choi as a rank-4 tensor indexed ``[a, i, b, j]``."""
        return self.choi.reshape(self.d_out, self.d_in, self.d_out, self.d_in)

    def act(self, x) -> np.ndarray:
        """Apply to an arbitrary operator (or a stack of them, leading axes)."""
        x = np.asarray(x, dtype=np.complex128)
        if x.shape[-2:] != (self.d_in, self.d_in):
            raise DimensionError(f"map expects {self.d_in}x{self.d_in} input, got {x.shape[-2:]}")
        if self.kraus is not None:
            ks = np.stack(self.kraus)
            return np.einsum("kai,...ij,kbj->...ab", ks, x, ks.conj(), optimize=True)
        return np.einsum("aibj,...ij->...ab", self.choi4, x, optimize=True)

    def adjoint_act(self, y) -> np.ndarray:
        """Apply the Hilbert-Schmidt adjoint: ``Tr(Y^dagger T(X)) = Tr(T*(Y)^dagger X)``."""
        y = np.asarray(y, dtype=np.complex128)
        return np.einsum("aibj,...ab->...ij", self.choi4.conj(), y, optimize=True)

    def allclose(self, other: "SuperOperator", atol: float = 1e-10) -> bool:
        return (self.n_in, self.n_out) == (other.n_in, other.n_out) and np.allclose(
            self.choi, other.choi, atol=atol, rtol=0
        )

    def _combine(self, other: "SuperOperator", sign: float) -> "SuperOperator":
        if (self.n_in, self.n_out) != (other.n_in, other.n_out):
            raise DimensionError("maps have different shapes")
        return SuperOperator(self.n_in, self.n_out, _frozen(self.choi + sign * other.choi))

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, c):
        return SuperOperator(self.n_in, self.n_out, _frozen(complex(c) * self.choi))

    __rmul__ = __mul__

    def is_hermitian_preserving(self, tol: float = linalg.TOL_HERM) -> bool:
        return linalg.is_hermitian(self.choi, tol)

    def to_record(self, repr: str = "choi") -> dict:
        rec = {"n_in": self.n_in, "n_out": self.n_out, "repr": repr}
        if repr == "choi":
            rec["data"] = linalg.matrix_to_record(self.choi)
        elif repr == "kraus":
            ks = self.kraus if self.kraus is not None else kraus_decompose(self)
            rec["data"] = [linalg.matrix_to_record(k) for k in ks]
        else:
            raise ValueError(f"cannot serialize as {repr!r}")
        return rec


def cptp_violations(choi: np.ndarray, n_in: int, n_out: int) -> list[str]:
    """Describe every way ``choi`` fails to be a CPTP Choi matrix (empty if none)."""
    d_in, d_out = 2**n_in, 2**n_out
    problems = []
    if choi.shape != (d_in * d_out, d_in * d_out):
        return [f"Choi shape {choi.shape} does not match {n_in}->{n_out} qubits"]
    if not linalg.is_hermitian(choi):
        return ["Choi matrix is not Hermitian (map is not Hermitian-preserving)"]
    w = np.linalg.eigvalsh((choi + dagger(choi)) / 2)
    if w[0] < -TOL_PSD:
        problems.append(f"not completely positive: Choi eigenvalue {w[0]:.3e}")
    tp = np.einsum("aiaj->ij", choi.reshape(d_out, d_in, d_out, d_in))
    err = np.max(np.abs(tp - np.eye(d_in)))
    if err > TOL_TP:
        problems.append(f"not trace preserving: |Tr_out(choi) - I| = {err:.3e}")
    return problems


def _kraus_from_choi(choi: np.ndarray, d_in: int, d_out: int) -> tuple[np.ndarray, ...]:
    w, v = np.linalg.eigh((choi + dagger(choi)) / 2)
    order = np.argsort(w)[::-1]
    ks = [
        np.sqrt(w[k]) * v[:, k].reshape(d_out, d_in)
        for k in order
        if w[k] > TOL_PSD
    ]
    return tuple(_frozen(k) for k in ks)


def from_choi(choi, n_in: int, n_out: int) -> SuperOperator:
    """Validate ``choi`` as a CPTP map and build the channel.

    Raises:
        ValidationError: when the map is not completely positive or not trace
            preserving.
    """
    choi = linalg.as_cmatrix(choi, "Choi matrix")
    linalg.check_qubit_cap(n_in + n_out)
    problems = cptp_violations(choi, n_in, n_out)
    if problems:
        raise ValidationError("; ".join(problems))
    choi = (choi + dagger(choi)) / 2
    return SuperOperator(n_in, n_out, _frozen(choi), _kraus_from_choi(choi, 2**n_in, 2**n_out), True)


def _choi_from_kraus(ks: Sequence[np.ndarray]) -> np.ndarray:
    vecs = np.stack([k.reshape(-1) for k in ks])
    return vecs.T @ vecs.conj()


def from_kraus(ks: Iterable) -> SuperOperator:
    """Channel ``rho -> sum_k K_k rho K_k^dagger``; requires ``sum K^dagger K = I``."""
    ks = [linalg.as_cmatrix(k, "Kraus operator") for k in ks]
    if not ks:
        raise ValidationError("empty Kraus list")
    shape = ks[0].shape
    if any(k.shape != shape for k in ks):
        raise DimensionError("Kraus operators have differing shapes")
    n_out = linalg.num_qubits(shape[0], "Kraus row count")
    n_in = linalg.num_qubits(shape[1], "Kraus column count")
    s = sum(dagger(k) @ k for k in ks)
    err = np.max(np.abs(s - np.eye(shape[1])))
    if err > TOL_TP:
        raise ValidationError(f"Kraus operators are not trace preserving: |sum K^dag K - I| = {err:.3e}")
    ks = [k for k in ks if np.any(k)]
    return SuperOperator(n_in, n_out, None, tuple(_frozen(k) for k in ks), True)


def from_isometry(v) -> SuperOperator:
    """Channel ``rho -> V rho V^dagger`` for an isometry ``V`` (``V^dagger V = I``)."""
    v = linalg.as_cmatrix(v, "isometry")
    if np.max(np.abs(dagger(v) @ v - np.eye(v.shape[1]))) > linalg.TOL_EIG:
        raise ValidationError("matrix is not an isometry")
    return from_kraus([v])


def from_unitary(u) -> SuperOperator:
    """Channel ``rho -> U rho U^dagger``."""
    u = linalg.as_cmatrix(u, "unitary")
    if u.shape[0] != u.shape[1]:
        raise DimensionError(f"unitary must be square, got {u.shape}")
    linalg.num_qubits(u.shape[0])
    if not linalg.is_unitary(u):
        raise ValidationError("matrix is not unitary")
    return from_kraus([u])


def identity(n: int) -> SuperOperator:
    return from_kraus([np.eye(2**n)])


def append_blank(n: int, k: int) -> SuperOperator:
    """``|xi> -> |xi> (x) |0^k>``: the embedding that adds ``k`` blank qubits."""
    v = np.zeros((2 ** (n + k), 2**n), dtype=np.complex128)
    v[np.arange(2**n) * 2**k, np.arange(2**n)] = 1.0
    return from_isometry(v)


def trace_out(n: int, keep: Sequence[int]) -> SuperOperator:
    """Channel that discards every qubit of an ``n``-qubit register not in ``keep``."""
    keep = linalg.QubitIndexSet.of(n, keep)
    linalg.check_qubit_cap(n)
    kept, traced = list(keep.kept), list(keep.traced)
    # Rows of the permutation that moves kept qubits first, grouped by the traced bits.
    perm = np.eye(2**n, dtype=np.complex128).reshape((2,) * n + (2**n,))
    perm = perm.transpose(kept + traced + [n]).reshape(2 ** len(kept), 2 ** len(traced), 2**n)
    ks = tuple(_frozen(perm[:, e, :]) for e in range(2 ** len(traced)))
    return SuperOperator(n, len(kept), None, ks, True)


def apply(t: SuperOperator, rho: DensityMatrix) -> DensityMatrix:
    """``g o rho``: apply a channel to a state."""
    if rho.n_qubits != t.n_in:
        raise DimensionError(f"channel takes {t.n_in} qubits, state has {rho.n_qubits}")
    return validate(t.act(rho.mat), repair=True)


def tensor(t: SuperOperator, r: SuperOperator) -> SuperOperator:
    """``T (x) R`` acting on ``(T's qubits, R's qubits)``."""
    j = np.einsum("aibj,ckdl->acikbdjl", t.choi4, r.choi4)
    d = t.d_out * r.d_out * t.d_in * r.d_in
    choi = _frozen(j.reshape(d, d))
    n_in, n_out = t.n_in + r.n_in, t.n_out + r.n_out
    linalg.check_qubit_cap(n_in + n_out)
    if t.cptp and r.cptp:
        kraus = tuple(_frozen(np.kron(a, b)) for a in t.kraus for b in r.kraus)
        return SuperOperator(n_in, n_out, choi, kraus, True)
    return SuperOperator(n_in, n_out, choi)


def extend(t: SuperOperator, extra_qubits: int, position: str = "after") -> SuperOperator:
    """Tensor with the identity on ``extra_qubits`` placed ``before`` or ``after``."""
    if extra_qubits < 0:
        raise ValidationError("extra_qubits must be non-negative")
    ident = identity(extra_qubits)
    if position == "after":
        return tensor(t, ident)
    if position == "before":
        return tensor(ident, t)
    raise ValidationError(f"position must be 'before' or 'after', not {position!r}")


def compose(t2: SuperOperator, t1: SuperOperator) -> SuperOperator:
    """``t2 o t1`` (apply ``t1`` first), via contraction of the Choi matrices."""
    if t1.n_out != t2.n_in:
        raise DimensionError(f"cannot compose {t1.n_in}->{t1.n_out} with {t2.n_in}->{t2.n_out}")
    j = np.einsum("cadb,aibj->cidj", t2.choi4, t1.choi4)
    d = t2.d_out * t1.d_in
    choi = j.reshape(d, d)
    if t1.cptp and t2.cptp:
        choi = (choi + dagger(choi)) / 2
        return SuperOperator(t1.n_in, t2.n_out, _frozen(choi), _kraus_from_choi(choi, t1.d_in, t2.d_out), True)
    return SuperOperator(t1.n_in, t2.n_out, _frozen(choi))


def kraus_decompose(t: SuperOperator) -> list[np.ndarray]:
    """Kraus operators from the spectral decomposition of the Choi matrix.

    One operator per Choi eigenvalue above ``TOL_PSD``, largest first.
    """
    if not t.is_hermitian_preserving():
        raise ValidationError("map is not Hermitian-preserving; no Kraus form")
    w = np.linalg.eigvalsh(t.choi)
    if w[0] < -TOL_PSD:
        raise ValidationError("map is not completely positive; no Kraus form")
    return [np.array(k) for k in _kraus_from_choi(t.choi, t.d_in, t.d_out)]


def measurement_channel(projectors: Sequence, record_outcome: bool = True) -> SuperOperator:
    """Projective measurement ``sum_m (P_m rho P_m) (x) |m><m|``.

    With ``record_outcome`` the output gains ``ceil(log2 M)`` qubits (after the
    measured system) holding the classical outcome diagonally; otherwise the
    map is ``sum_m P_m rho P_m``.
    """
    ps = [linalg.as_cmatrix(p, "projector") for p in projectors]
    if not ps:
        raise ValidationError("empty projector family")
    d = ps[0].shape[0]
    for p in ps:
        if p.shape != (d, d):
            raise DimensionError("projectors must be square and of equal size")
        if not linalg.is_hermitian(p) or np.max(np.abs(p @ p - p)) > TOL_TP:
            raise ValidationError("measurement operator is not an orthogonal projector")
    if np.max(np.abs(sum(ps) - np.eye(d))) > TOL_TP:
        raise ValidationError("projectors do not sum to the identity")
    for a in range(len(ps)):
        for b in range(a + 1, len(ps)):
            if np.max(np.abs(ps[a] @ ps[b])) > TOL_TP:
                raise ValidationError("projectors are not mutually orthogonal")
    if not record_outcome:
        return from_kraus([p for p in ps if np.any(np.abs(p) > TOL_TP)])
    q = max(len(ps) - 1, 0).bit_length()
    ks = []
    for m, p in enumerate(ps):
        ket = np.zeros((2**q, 1))
        ket[m, 0] = 1.0
        ks.append(np.kron(p, ket))
    return from_kraus(ks)


def basic_measurement(n: int, qubits: Sequence[int] | None = None, record_outcome: bool = True) -> SuperOperator:
    """Measure ``qubits`` (default: all) of an ``n``-qubit register in the computational basis."""
    qubits = list(range(n)) if qubits is None else list(qubits)
    ps = []
    for m in range(2 ** len(qubits)):
        bits = format(m, f"0{len(qubits)}b")
        diag = np.array(
            [all(format(x, f"0{n}b")[q] == b for q, b in zip(qubits, bits)) for x in range(2**n)],
            dtype=float,
        )
        ps.append(np.diag(diag))
    return measurement_channel(ps, record_outcome)


@dataclass(frozen=True, eq=False)
class UnitaryDilation:
    """Unitary realisation of a gate of order ``(n, m)``.

    ``u`` acts on ``n + ancilla_count`` qubits (input first, blank ancillas
    after). After ``u`` the first ``m`` qubits carry ``g o rho`` and the last
    ``env_count`` qubits are discarded. ``ancilla_count = n + m`` and the
    total is ``2n + m`` whenever ``n >= m``; for ``m > n`` the ancilla grows to
    ``2m`` so the environment can still hold ``2^(n+m)`` Kraus branches.
    """

    gate: SuperOperator
    u: np.ndarray
    ancilla_count: int
    env_count: int

    @property
    def total_qubits(self) -> int:
        return self.gate.n_in + self.ancilla_count

    def reconstruct(self) -> SuperOperator:
        """``rho -> Tr_env(U (rho (x) |0..0><0..0|) U^dagger)`` as an unvalidated map."""
        n, m = self.gate.n_in, self.gate.n_out
        d_anc, d_env = 2**self.ancilla_count, 2**self.env_count
        v = self.u.reshape(2**m, d_env, 2**n, d_anc)[:, :, :, 0]
        ks = [v[:, k, :] for k in range(d_env)]
        return SuperOperator(n, m, _frozen(_choi_from_kraus(ks)))

    def residual(self) -> float:
        """Trace norm of the Choi difference between the dilation and the gate."""
        return linalg.trace_norm(self.reconstruct().choi - self.gate.choi)

    def unitarity_residual(self) -> float:
        return float(np.max(np.abs(dagger(self.u) @ self.u - np.eye(self.u.shape[0]))))


def _complete_to_unitary(cols: np.ndarray, positions: Sequence[int], dim: int) -> np.ndarray:
    """Place orthonormal ``cols`` at ``positions`` and fill the rest by Gram-Schmidt.

    Standard basis vectors are tried in index order; candidates whose residual
    norm after projection falls below ``GRAM_SCHMIDT_SKIP`` are skipped.
    """
    basis = [cols[:, k] for k in range(cols.shape[1])]
    extra = []
    for e in range(dim):
        if len(basis) + len(extra) == dim:
            break
        vec = np.zeros(dim, dtype=np.complex128)
        vec[e] = 1.0
        for _ in range(2):
            for b in basis + extra:
                vec = vec - np.vdot(b, vec) * b
        nrm = np.linalg.norm(vec)
        if nrm < GRAM_SCHMIDT_SKIP:
            continue
        extra.append(vec / nrm)
    if len(basis) + len(extra) != dim:
        raise ValidationError("could not complete isometry to a unitary")
    u = np.zeros((dim, dim), dtype=np.complex128)
    taken = set(positions)
    free = [c for c in range(dim) if c not in taken]
    for pos, k in zip(positions, range(cols.shape[1])):
        u[:, pos] = cols[:, k]
    for pos, vec in zip(free, extra):
        u[:, pos] = vec
    return u


def dilate_to_unitary(t: SuperOperator) -> UnitaryDilation:
    """Build a unitary that realises ``t`` on a larger blank-padded register.

    The isometry ``V|psi> = sum_k K_k|psi> (x) |k>`` (Kraus list zero-padded to
    the environment size) fills the columns ``|i, 0..0>`` of ``U``; the other
    columns are completed by Gram-Schmidt against the standard basis.
    """
    if not t.cptp or cptp_violations(np.asarray(t.choi), t.n_in, t.n_out):
        raise ValidationError("only CPTP maps can be dilated")
    n, m = t.n_in, t.n_out
    env = n + max(n, m)
    anc = m + max(n, m)
    linalg.check_qubit_cap(n + anc)
    ks = kraus_decompose(t)
    d_env = 2**env
    if len(ks) > d_env:
        raise ValidationError("Kraus rank exceeds environment dimension")
    v = np.zeros((2**m, d_env, 2**n), dtype=np.complex128)
    for k, op in enumerate(ks):
        v[:, k, :] = op
    v = v.reshape(2**m * d_env, 2**n)
    u = _complete_to_unitary(v, [i * 2**anc for i in range(2**n)], 2 ** (n + anc))
    return UnitaryDilation(t, _frozen(u), anc, env)


def random_cptp(n_in: int, n_out: int, seed: int | np.random.Generator, rank: int | None = None) -> SuperOperator:
    """Random channel: Gaussian Kraus stack normalised by ``(sum K^dag K)^(-1/2)``.

    Deterministic for an integer seed. ``rank`` defaults to ``2^(n_in+n_out)``.
    """
    rng = np.random.default_rng(seed)
    d_in, d_out = 2**n_in, 2**n_out
    rank = d_in * d_out if rank is None else rank
    g = rng.normal(size=(rank, d_out, d_in)) + 1j * rng.normal(size=(rank, d_out, d_in))
    s = np.einsum("kai,kaj->ij", g.conj(), g)
    w, v = np.linalg.eigh(s)
    s_inv_half = (v / np.sqrt(w)) @ dagger(v)
    return from_kraus([k @ s_inv_half for k in g])


def random_unitary(n: int, seed: int | np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    rng = np.random.default_rng(seed)
    d = 2**n
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def from_record(rec: dict) -> SuperOperator:
    """Parse a channel file record ``{n_in, n_out, repr, data}``."""
    try:
        n_in, n_out, kind, data = int(rec["n_in"]), int(rec["n_out"]), rec["repr"], rec["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad channel record: missing or invalid field {exc}") from None
    if kind == "choi":
        return from_choi(linalg.matrix_from_record(data), n_in, n_out)
    if kind == "unitary":
        t = from_unitary(linalg.matrix_from_record(data))
    elif kind == "kraus":
        if not isinstance(data, list):
            raise ParseError("kraus data must be a list of matrix records")
        t = from_kraus([linalg.matrix_from_record(d) for d in data])
    else:
        raise ParseError(f"unknown channel repr {kind!r}")
    if (t.n_in, t.n_out) != (n_in, n_out):
        raise ParseError(f"channel record declares {n_in}->{n_out} but data is {t.n_in}->{t.n_out}")
    return t
