"""Density matrices, mixtures and pure states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .errors import DimensionError, ParseError, ValidationError
from .linalg import QubitIndexSet

TOL_PSD = 1e-8
TOL_TRACE = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix on ``n_qubits`` qubits.

    Construct through :func:`validate` (or the helpers below) rather than
    directly; the dataclass constructor does not check anything.
    """

    n_qubits: int
    mat: np.ndarray

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mat, dtype=dtype)

    def allclose(self, other: "DensityMatrix", atol: float = 1e-10) -> bool:
        return self.n_qubits == other.n_qubits and np.allclose(self.mat, other.mat, atol=atol, rtol=0)

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        return DensityMatrix(self.n_qubits + other.n_qubits, _readonly(np.kron(self.mat, other.mat)))

    def probabilities(self) -> np.ndarray:
        """Computational-basis outcome distribution (the diagonal)."""
        return np.clip(np.real(np.diag(self.mat)), 0.0, None)

    def to_record(self) -> dict:
        return {"n_qubits": self.n_qubits, "mat": linalg.matrix_to_record(self.mat)}

    @classmethod
    def from_record(cls, rec: dict, repair: bool = False) -> "DensityMatrix":
        try:
            n = int(rec["n_qubits"])
            m = linalg.matrix_from_record(rec["mat"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad state record: {exc!r}") from None
        rho = validate(m, repair=repair)
        if rho.n_qubits != n:
            raise ParseError(f"state record says {n} qubits but matrix is {m.shape}")
        return rho


def validate(m, repair: bool = False) -> DensityMatrix:
    """Check Hermiticity, positivity and unit trace and wrap as a DensityMatrix.

    In strict mode (default) any eigenvalue below ``-TOL_PSD`` or a trace off by
    more than ``TOL_TRACE`` is rejected. With ``repair=True`` eigenvalues in
    ``[-TOL_PSD, 0)`` are clamped to zero and the trace renormalised; larger
    violations are still rejected.
    """
    m = linalg.as_cmatrix(m, "density matrix")
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"density matrix must be square, got {m.shape}")
    n = linalg.num_qubits(m.shape[0])
    if not linalg.is_hermitian(m):
        raise ValidationError("density matrix is not Hermitian")
    m = (m + linalg.dagger(m)) / 2
    w, v = np.linalg.eigh(m)
    if w[0] < -TOL_PSD:
        raise ValidationError(f"density matrix has negative eigenvalue {w[0]:.3e}")
    tr = float(np.sum(w))
    if repair:
        if w[0] < 0:
            w = np.clip(w, 0.0, None)
            m = (v * w) @ linalg.dagger(v)
            tr = float(np.sum(w))
        if abs(tr - 1) > 10 * TOL_PSD * m.shape[0]:
            raise ValidationError(f"density matrix trace {tr!r} is not 1")
        m = m / tr
    elif abs(tr - 1) > TOL_TRACE:
        raise ValidationError(f"density matrix trace {tr!r} is not 1")
    return DensityMatrix(n, _readonly(m))


def _unit_vector(v, tol: float = linalg.TOL_HERM) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).ravel()
    if v.size == 0:
        raise DimensionError("empty state vector")
    linalg.num_qubits(v.size, "state vector length")
    if abs(np.linalg.norm(v) - 1) > tol:
        raise ValidationError(f"state vector has norm {np.linalg.norm(v)!r}, expected 1")
    return v


def pure(v) -> DensityMatrix:
    """Rank-one projector ``|v><v|`` with entries ``c_i c_j^*``."""
    v = _unit_vector(v)
    return DensityMatrix(v.size.bit_length() - 1, _readonly(np.outer(v, v.conj())))


@dataclass(frozen=True)
class Mixture:
    """A finite ensemble ``{(p_k, |alpha_k>)}`` of pure states."""

    items: tuple[tuple[float, np.ndarray], ...]

    def __post_init__(self):
        items = tuple((float(p), _unit_vector(v)) for p, v in self.items)
        if not items:
            raise ValidationError("empty mixture")
        dims = {v.size for _, v in items}
        if len(dims) != 1:
            raise DimensionError(f"mixture states have differing dimensions {sorted(dims)}")
        if any(p < 0 for p, _ in items):
            raise ValidationError("mixture probabilities must be non-negative")
        if abs(sum(p for p, _ in items) - 1) > TOL_TRACE:
            raise ValidationError("mixture probabilities do not sum to 1")
        object.__setattr__(self, "items", items)

    def __len__(self):
        return len(self.items)


def from_mixture(mix: Mixture | Iterable[tuple[float, Sequence[complex]]]) -> DensityMatrix:
    """``sum_l p_l |alpha_l><alpha_l|``."""
    if not isinstance(mix, Mixture):
        mix = Mixture(tuple(mix))
    d = mix.items[0][1].size
    m = np.zeros((d, d), dtype=np.complex128)
    for p, v in mix.items:
        m += p * np.outer(v, v.conj())
    return validate(m)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def eigen_mixture(rho: DensityMatrix, cutoff: float = TOL_PSD) -> Mixture:
    """Decompose ``rho`` into its eigenvectors weighted by eigenvalues.

    Each vector's largest-magnitude component is made real and positive.
    Eigenvalues at or below ``cutoff`` are dropped. Under degeneracy only the
    reconstructed matrix is unique, not the vectors.
    """
    w, v = linalg.herm_eig(rho.mat)
    keep = w > cutoff
    w = w[keep] / np.sum(w[keep])
    return Mixture(tuple((float(p), _fix_phase(v[:, k])) for k, p in zip(np.flatnonzero(keep), w)))


def reduce(rho: DensityMatrix, keep: QubitIndexSet | Sequence[int]) -> DensityMatrix:
    """Reduced state on ``keep``; everything else is traced out."""
    m = linalg.partial_trace(rho.mat, keep)
    return validate(m, repair=True)


def basis_state(bits: str | Sequence[int]) -> DensityMatrix:
    """Projector onto the computational basis state named by ``bits``."""
    if isinstance(bits, str):
        if not bits or set(bits) - {"0", "1"}:
            raise ValidationError(f"not a bitstring: {bits!r}")
        bits = [int(b) for b in bits]
    bits = list(bits)
    n = len(bits)
    linalg.check_qubit_cap(n)
    idx = int("".join(map(str, bits)), 2) if bits else 0
    m = np.zeros((2**n, 2**n), dtype=np.complex128)
    m[idx, idx] = 1.0
    return DensityMatrix(n, _readonly(m))


def basis_index_state(index: int, n_qubits: int) -> DensityMatrix:
    return basis_state(format(index, f"0{n_qubits}b") if n_qubits else [])


def maximally_mixed(n_qubits: int) -> DensityMatrix:
    d = 2**n_qubits
    return DensityMatrix(n_qubits, _readonly(np.eye(d) / d))


def random_state(n_qubits: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random density matrix ``G G^dagger / Tr`` with Gaussian ``G`` (d x rank)."""
    d = 2**n_qubits
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ linalg.dagger(g)
    return validate(m / np.trace(m).real)


def random_pure_vector(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    d = 2**n_qubits
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)
