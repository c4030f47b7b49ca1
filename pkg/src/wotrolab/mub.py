"""Quadratic-phase mutually unbiased bases over F_{p^n}, p odd.

Basis ``a`` has vectors |u>_a with amplitude
p^{-n/2} exp(2 pi i / p * tr(a x^2 + u x)) at |x>. Phases are computed from
exact integer traces before conversion to floating point.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .gf import Field, FieldElem
from .qsim import StateVec


def _idx(x: FieldElem | int) -> int:
    return int(x)


def _phase_exponents(field: Field, a: int, u: np.ndarray | int) -> np.ndarray:
    """tr(a x^2 + u x) for every x, as integers mod p."""
    q = field.order
    xs = np.arange(q)
    mul, add, tr = field.mul_table, field.add_table, field.trace_table
    ax2 = mul[a, mul[xs, xs]]
    u = np.atleast_1d(u)
    return tr[add[ax2[None, :], mul[u[:, None], xs[None, :]]]]


def mub_vector(field: Field, a: FieldElem | int, u: FieldElem | int) -> StateVec:
    expo = _phase_exponents(field, _idx(a), _idx(u))[0]
    amps = np.exp(2j * np.pi * expo / field.p) / np.sqrt(field.order)
    return StateVec((field.order,), amps)


@dataclass(frozen=True, eq=False)
class MubBasis:
    """Basis ``a``; column ``u`` of ``matrix`` is |u>_a."""

    field: Field
    a: int
    matrix: np.ndarray

    @property
    def vectors(self) -> list[StateVec]:
        return [StateVec((self.field.order,), self.matrix[:, u]) for u in range(self.field.order)]

    def unitarity_gap(self) -> float:
        d = self.matrix.shape[0]
        return float(np.linalg.norm(self.matrix.conj().T @ self.matrix - np.eye(d), 2))


@lru_cache(maxsize=256)
def _basis_matrix(field: Field, a: int) -> np.ndarray:
    expo = _phase_exponents(field, a, np.arange(field.order))
    m = np.exp(2j * np.pi * expo.T / field.p) / np.sqrt(field.order)
    m.setflags(write=False)
    return m


def mub_basis(field: Field, a: FieldElem | int) -> MubBasis:
    return MubBasis(field, _idx(a), _basis_matrix(field, _idx(a)))


def mub_overlap_audit(
    field: Field,
    basis_pairs: Sequence[tuple[FieldElem | int, FieldElem | int]],
    sampling: str | int = "exhaustive",
    rng: np.random.Generator | None = None,
) -> float:
    """Largest deviation of |<u_a|v_b>|^2 from p^{-n} over the given pairs.

    ``sampling`` is ``"exhaustive"`` (all p^{2n} overlaps per pair) or a number
    of uniformly sampled (u, v) per pair.
    """
    target = 1.0 / field.order
    worst = 0.0
    for a, b in basis_pairs:
        a, b = _idx(a), _idx(b)
        if a == b:
            raise ValueError("pairs must use distinct basis indices")
        G = _basis_matrix(field, a).conj().T @ _basis_matrix(field, b)
        sq = np.abs(G) ** 2
        if sampling != "exhaustive":
            if rng is None:
                raise ValueError("sampled audit needs an rng")
            u = rng.integers(field.order, size=int(sampling))
            v = rng.integers(field.order, size=int(sampling))
            sq = sq[u, v]
        worst = max(worst, float(np.max(np.abs(sq - target))))
    return worst


def all_pairs(field: Field) -> list[tuple[int, int]]:
    q = field.order
    return [(a, b) for a in range(q) for b in range(a + 1, q)]


def conjugate_basis(field: Field, a: FieldElem | int) -> np.ndarray:
    """Entrywise conjugate of basis ``a``.

    Measuring one half of |Phi> in this basis and the other half in basis
    ``a`` yields equal outcomes.
    """
    return _basis_matrix(field, _idx(a)).conj()
