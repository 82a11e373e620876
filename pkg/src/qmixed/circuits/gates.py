"""Named standard unitaries and the composite gates used by the compiler."""

from __future__ import annotations

import numpy as np

from ..errors import ParseError

I = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)


def phase(theta: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * theta)]).astype(np.complex128)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def controlled(u: np.ndarray, n_controls: int = 1) -> np.ndarray:
    """``u`` applied to the trailing qubits iff every leading control qubit is 1."""
    d = u.shape[0]
    c = 2**n_controls
    out = np.eye(c * d, dtype=np.complex128)
    out[(c - 1) * d :, (c - 1) * d :] = u
    return out


CNOT = controlled(X)
TOFFOLI = controlled(X, 2)

_FIXED = {"I": I, "X": X, "Y": Y, "Z": Z, "H": H, "CNOT": CNOT, "TOFFOLI": TOFFOLI}
_PARAMETRIC = {"PHASE": phase, "RY": ry}


def named(name: str, theta: float | None = None) -> np.ndarray:
    """Look up a standard gate: I, X, Y, Z, H, CNOT, TOFFOLI, PHASE(theta), RY(theta)."""
    key = name.upper()
    if key in _FIXED:
        if theta is not None:
            raise ParseError(f"gate {name} takes no angle")
        return _FIXED[key].copy()
    if key in _PARAMETRIC:
        if theta is None:
            raise ParseError(f"gate {name} needs an angle 'theta'")
        return _PARAMETRIC[key](float(theta))
    raise ParseError(f"unknown gate name {name!r}")


def garbage_detect(w: int) -> np.ndarray:
    """Permutation on ``w + 1`` qubits: flip the last qubit iff the first ``w`` are not all 0."""
    d = 2 ** (w + 1)
    u = np.zeros((d, d), dtype=np.complex128)
    for x in range(2**w):
        for c in range(2):
            u[2 * x + (c ^ (x != 0)), 2 * x + c] = 1.0
    return u


def controlled_copy(m: int) -> np.ndarray:
    """Permutation on ``1 + 2m`` qubits ``|c, i, a> -> |c, i, a XOR (c * i)>``."""
    M = 2**m
    d = 2 * M * M
    u = np.zeros((d, d), dtype=np.complex128)
    for c in range(2):
        for i in range(M):
            for a in range(M):
                u[(c * M + i) * M + (a ^ (i if c else 0)), (c * M + i) * M + a] = 1.0
    return u


def mcx_cost(controls: int) -> int:
    """Toffoli-class gate count of an X with ``controls`` controls (V-chain, clean ancillas)."""
    if controls <= 2:
        return 1
    return 2 * controls - 3


def garbage_detect_cost(w: int) -> int:
    """Decomposed size of :func:`garbage_detect`: negate, AND-into-control, negate, flip."""
    return 2 * w + mcx_cost(w) + 1
