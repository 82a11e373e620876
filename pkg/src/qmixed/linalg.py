"""Dense complex matrix kernel.

Qubit ordering convention used throughout the package: qubit 0 is the
most-significant bit of a basis index, so ``|i_0 i_1 ... i_{n-1}>`` has index
``sum_k i_k 2**(n-1-k)``. This is numpy's ``kron`` order: ``kron(a, b)`` puts
``a`` on qubit 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, ParseError, ResourceError, ValidationError

TOL_HERM = 1e-9
TOL_EIG = 1e-10
MAX_QUBITS = 12


def as_cmatrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D complex128 array, rejecting anything else."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D matrix, got shape {a.shape}")
    return a


def num_qubits(dim: int, name: str = "dimension") -> int:
    """Return log2(dim), raising if dim is not a power of two."""
    if dim < 1 or dim & (dim - 1):
        raise DimensionError(f"{name} {dim} is not a power of 2")
    n = dim.bit_length() - 1
    check_qubit_cap(n)
    return n


def check_qubit_cap(n: int, cap: int = MAX_QUBITS) -> None:
    if n > cap:
        raise ResourceError(f"register of {n} qubits exceeds the cap of {cap}")


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def is_hermitian(m: np.ndarray, tol: float = TOL_HERM) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= tol)


def is_unitary(m: np.ndarray, tol: float = TOL_EIG) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(dagger(m) @ m - np.eye(m.shape[0]))) <= tol)


def kron(a, b) -> np.ndarray:
    """Kronecker product; ``a`` occupies the leading (high-order) qubits."""
    return np.kron(as_cmatrix(a, "a"), as_cmatrix(b, "b"))


def kron_all(ms: Iterable) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for m in ms:
        out = np.kron(out, as_cmatrix(m))
    return out


@dataclass(frozen=True)
class QubitIndexSet:
    """An ordered subset ``kept`` of the qubits ``0..total-1``."""

    total: int
    kept: tuple[int, ...]

    def __post_init__(self):
        kept = tuple(int(k) for k in self.kept)
        object.__setattr__(self, "kept", kept)
        if self.total < 0:
            raise ValidationError("total must be non-negative")
        if any(b <= a for a, b in zip(kept, kept[1:])):
            raise ValidationError(f"kept indices must be strictly increasing: {kept}")
        if kept and (kept[0] < 0 or kept[-1] >= self.total):
            raise ValidationError(f"kept indices {kept} out of range for {self.total} qubits")

    @classmethod
    def of(cls, total: int, kept: Iterable[int]) -> "QubitIndexSet":
        return cls(total, tuple(sorted(kept)))

    @property
    def traced(self) -> tuple[int, ...]:
        s = set(self.kept)
        return tuple(q for q in range(self.total) if q not in s)


def partial_trace(m, keep: QubitIndexSet | Sequence[int]) -> np.ndarray:
    """Trace out every qubit not in ``keep``.

    ``rho|_A(i, j) = sum_k rho(ik, jk)`` generalised to arbitrary kept sets by
    axis bookkeeping on the rank-2n tensor view. Kept qubits stay in their
    original relative order.
    """
    m = as_cmatrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"partial_trace needs a square matrix, got {m.shape}")
    n = num_qubits(m.shape[0])
    if not isinstance(keep, QubitIndexSet):
        keep = QubitIndexSet.of(n, keep)
    if keep.total != n:
        raise DimensionError(f"index set is over {keep.total} qubits, matrix over {n}")
    kept, traced = keep.kept, keep.traced
    if not traced:
        return m.copy()
    t = m.reshape((2,) * (2 * n))
    perm = list(kept) + list(traced) + [n + q for q in kept] + [n + q for q in traced]
    dk, dt = 2 ** len(kept), 2 ** len(traced)
    t = t.transpose(perm).reshape(dk, dt, dk, dt)
    return np.einsum("aibi->ab", t)


def permute_qubits(m, order: Sequence[int]) -> np.ndarray:
    """Reorder the qubits of a square operator so new qubit k is old ``order[k]``."""
    m = as_cmatrix(m)
    n = num_qubits(m.shape[0])
    order = list(order)
    if sorted(order) != list(range(n)):
        raise DimensionError(f"{order} is not a permutation of {n} qubits")
    t = m.reshape((2,) * (2 * n)).transpose(order + [n + q for q in order])
    return t.reshape(m.shape)


def herm_eig(m, tol: float = TOL_HERM) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(w, v)`` with ``m = v @ diag(w) @ v^dagger``.

    Raises:
        ValidationError: if ``m`` is not Hermitian within ``tol``.
    """
    m = as_cmatrix(m)
    if not is_hermitian(m, tol):
        raise ValidationError("herm_eig: matrix is not Hermitian")
    w, v = np.linalg.eigh((m + dagger(m)) / 2)
    return w[::-1].copy(), v[:, ::-1].copy()


def trace_norm(m) -> float:
    """Sum of singular values, ``Tr sqrt(A^dagger A)``."""
    m = as_cmatrix(m)
    if m.shape[0] == m.shape[1] and is_hermitian(m, 1e-14):
        return float(np.sum(np.abs(np.linalg.eigvalsh(m))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def op_norm(m) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(as_cmatrix(m), 2))


# -- serialization ---------------------------------------------------------

def matrix_to_record(m) -> dict:
    m = as_cmatrix(m)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def matrix_from_record(rec) -> np.ndarray:
    try:
        rows, cols, entries = int(rec["rows"]), int(rec["cols"]), rec["entries"]
        vals = [complex(float(re), float(im)) for re, im in entries]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad matrix record: {exc!r}") from None
    if rows < 1 or cols < 1 or len(vals) != rows * cols:
        raise ParseError(f"matrix record has {len(vals)} entries, expected {rows}x{cols}")
    return np.array(vals, dtype=np.complex128).reshape(rows, cols)
