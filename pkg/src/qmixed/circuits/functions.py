"""Probabilistic functions and the subroutine gates that realise them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .. import channels
from ..channels import SuperOperator
from ..errors import ParseError, ResourceError, ValidationError

if TYPE_CHECKING:
    from .core import Circuit

TOL_ROW = 1e-9
MAX_ENUMERATION = 2**16


@dataclass(frozen=True, eq=False)
class ProbFunction:
    """Row-stochastic table ``f[i][j]``: probability of output ``j`` on input ``i``.

    Inputs are ``m``-bit and outputs ``p``-bit strings, indexed with bit 0 as
    the most significant bit.
    """

    m: int
    p: int
    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.shape != (2**self.m, 2**self.p):
            raise ValidationError(f"table shape {t.shape} does not match m={self.m}, p={self.p}")
        if np.any(t < -TOL_ROW) or np.any(t > 1 + TOL_ROW):
            raise ValidationError("probabilities must lie in [0, 1]")
        if np.any(np.abs(t.sum(axis=1) - 1) > TOL_ROW):
            raise ValidationError("each row of a probabilistic function must sum to 1")
        t = np.clip(t, 0.0, 1.0)
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    def __getitem__(self, i):
        return self.table[i]

    @classmethod
    def deterministic(cls, m: int, p: int, outputs) -> "ProbFunction":
        t = np.zeros((2**m, 2**p))
        t[np.arange(2**m), list(outputs)] = 1.0
        return cls(m, p, t)

    @classmethod
    def random(cls, m: int, p: int, rng: np.random.Generator, concentration: float = 1.0) -> "ProbFunction":
        return cls(m, p, rng.dirichlet(np.full(2**p, concentration), size=2**m))

    def to_record(self) -> dict:
        return {"m": self.m, "p": self.p, "table": self.table.tolist()}

    @classmethod
    def from_record(cls, rec: dict) -> "ProbFunction":
        try:
            return cls(int(rec["m"]), int(rec["p"]), np.asarray(rec["table"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ParseError(f"bad probabilistic function record: {exc!r}") from None


@dataclass(frozen=True, eq=False)
class SubroutineRef:
    """A call to a probabilistic subroutine, optionally with an implementing circuit."""

    f: ProbFunction
    impl: "Circuit | None" = None
    name: str = field(default="")

    @property
    def width(self) -> int:
        return self.f.m + self.f.p


def shift_unitary(m: int, p: int, outputs) -> np.ndarray:
    """``U_d|i, x> = |i, x XOR d(i)>`` for ``d`` given as the list ``outputs``."""
    P = 2**p
    d = 2 ** (m + p)
    u = np.zeros((d, d))
    for i, j in enumerate(outputs):
        for x in range(P):
            u[i * P + (x ^ j), i * P + x] = 1.0
    return u


def subroutine_gate_bruteforce(f: ProbFunction) -> SuperOperator:
    """``g_f = sum_d Pr(d) U_d . U_d^dagger`` by enumerating every deterministic ``d``.

    ``Pr(d) = prod_i f[i, d(i)]``. Refuses tables whose enumeration exceeds
    ``2^16`` functions.
    """
    count = 2 ** (f.p * 2**f.m)
    if count > MAX_ENUMERATION:
        raise ResourceError(f"enumerating {count} deterministic functions exceeds {MAX_ENUMERATION}")
    ks = []
    for d in itertools.product(range(2**f.p), repeat=2**f.m):
        pr = float(np.prod([f.table[i, j] for i, j in enumerate(d)]))
        if pr > 0:
            ks.append(np.sqrt(pr) * shift_unitary(f.m, f.p, d))
    return channels.from_kraus(ks)


def subroutine_gate(f: ProbFunction) -> SuperOperator:
    """``g_f`` assembled directly from its closed form.

    On the blank-output subspace::

        g_f(|i1,0><i2,0|) = sum_j f[i,j] |i,j><i,j|                 if i1 == i2 == i
                          = sum_{j1,j2} f[i1,j1] f[i2,j2] |i1,j1><i2,j2|  otherwise

    and off it the output register is XOR-shifted: ``|i,x>`` behaves like
    ``|i,0>`` followed by ``x`` added into the result bits.
    """
    M, P = 2**f.m, 2**f.p
    t = f.table
    coef = np.einsum("ij,kl->ikjl", t, t)
    idx = np.arange(M)
    coef[idx, idx] = 0.0
    for i in range(M):
        coef[i, i] = np.diag(t[i])
    j6 = np.zeros((M, P, M, P, M, P, M, P), dtype=np.complex128)
    a, b = idx[:, None], idx[None, :]
    for x1, x2, j1, j2 in itertools.product(range(P), repeat=4):
        j6[a, x1 ^ j1, a, x1, b, x2 ^ j2, b, x2] = coef[:, :, j1, j2]
    d = (M * P) ** 2
    return channels.from_choi(j6.reshape(d, d), f.m + f.p, f.m + f.p)


def restrict_to_blank_outputs(g: SuperOperator, f: ProbFunction) -> SuperOperator:
    """``g_f`` precomposed with the embedding ``|i> -> |i, 0^p>`` (m -> m+p qubits)."""
    return channels.compose(g, channels.append_blank(f.m, f.p))
