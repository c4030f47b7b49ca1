"""Dense simulation of qudit registers.

States are :class:`StateVec` objects carrying their local dimensions.
Operators are plain complex ``numpy`` arrays. Measurements come in two
shapes: :class:`Povm` (explicit list of effects) and
:class:`BasisMeasurement` (projective measurement given by the columns of a
unitary), which avoids materialising p^{3n} rank-one projectors.

A *register* is a sequence of subsystem indices; it need not be contiguous.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from . import config
from .errors import (
    DimensionMismatch,
    NoConvergence,
    NotHermitian,
    TooLarge,
    ZeroProbabilityBranch,
)

HERM_TOL = 1e-9
PSD_TOL = 1e-9
COMPLETENESS_TOL = 1e-8
ZERO_BRANCH = 1e-15
JACOBI_MAX_DIM = 64


def _check_vec_len(n: int) -> None:
    if n > config.MAX_VECTOR_LEN:
        raise TooLarge(f"vector length {n} exceeds cap {config.MAX_VECTOR_LEN}")


def _check_mat_dim(n: int) -> None:
    if n > config.MAX_MATRIX_DIM:
        raise TooLarge(f"matrix dimension {n} exceeds cap {config.MAX_MATRIX_DIM}")


@dataclass(frozen=True, eq=False)
class StateVec:
    """Pure state on a tensor product of qudits.

    Parameters
    ----------
    dims : tuple of int
        Local dimensions, most significant subsystem first.
    amps : ndarray
        Complex amplitudes of length ``prod(dims)``.
    subnormalized : bool
        Set for branches that deliberately carry norm below one.
    """

    dims: tuple[int, ...]
    amps: np.ndarray
    subnormalized: bool = False

    def __post_init__(self) -> None:
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        dims = tuple(int(d) for d in self.dims)
        if int(np.prod(dims)) != amps.size:
            raise DimensionMismatch(f"dims {dims} do not match {amps.size} amplitudes")
        _check_vec_len(amps.size)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "dims", dims)
        if not self.subnormalized and abs(np.linalg.norm(amps) - 1.0) > 1e-9:
            raise ValueError(f"state has norm {np.linalg.norm(amps):.12g}; flag subnormalized")

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def density(self) -> np.ndarray:
        _check_mat_dim(self.dim)
        return np.outer(self.amps, self.amps.conj())

    def to_json(self) -> dict:
        return {"dims": list(self.dims), "re": self.amps.real.tolist(), "im": self.amps.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "StateVec":
        amps = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        return cls(tuple(obj["dims"]), amps)


def basis_state(dims: Sequence[int] | int, index: int | Sequence[int]) -> StateVec:
    dims = (dims,) if isinstance(dims, int) else tuple(dims)
    if not isinstance(index, (int, np.integer)):
        index = int(np.ravel_multi_index(tuple(index), dims))
    amps = np.zeros(int(np.prod(dims)), dtype=complex)
    amps[index] = 1.0
    return StateVec(dims, amps)


def tensor(a, b):
    """Kronecker product of two states or two operators."""
    if isinstance(a, StateVec) and isinstance(b, StateVec):
        return StateVec(a.dims + b.dims, np.kron(a.amps, b.amps), a.subnormalized or b.subnormalized)
    a = np.asarray(a)
    b = np.asarray(b)
    _check_mat_dim(a.shape[0] * b.shape[0])
    return np.kron(a, b)


def epr_state(p: int, count: int = 1) -> StateVec:
    """|Phi>^{count} with all prover halves first, then all verifier halves.

    Subsystem ``i`` is paired with subsystem ``count + i``.
    """
    if p < 2 or count < 1:
        raise ValueError("need p >= 2 and count >= 1")
    d = p**count
    _check_vec_len(d * d)
    # Sum over j of |j>_P |j>_V, with j running over the whole P register.
    amps = np.zeros(d * d, dtype=complex)
    amps[np.arange(d) * d + np.arange(d)] = 1.0 / np.sqrt(d)
    return StateVec((p,) * (2 * count), amps)


# ---------------------------------------------------------------- registers


def _register(reg: Sequence[int] | range | slice | None, dims: Sequence[int]) -> tuple[int, ...]:
    if reg is None:
        return tuple(range(len(dims)))
    if isinstance(reg, slice):
        return tuple(range(len(dims)))[reg]
    reg = tuple(int(i) for i in reg)
    if len(set(reg)) != len(reg) or any(not 0 <= i < len(dims) for i in reg):
        raise DimensionMismatch(f"bad register {reg} for {len(dims)} subsystems")
    return reg


def _to_matrix(amps: np.ndarray, dims: Sequence[int], reg: tuple[int, ...]) -> np.ndarray:
    """Reshape amplitudes into a (register, rest) matrix."""
    rest = [i for i in range(len(dims)) if i not in reg]
    t = amps.reshape(dims).transpose(list(reg) + rest)
    d_reg = int(np.prod([dims[i] for i in reg]))
    return t.reshape(d_reg, -1)


def _from_matrix(mat: np.ndarray, dims: Sequence[int], reg: tuple[int, ...]) -> np.ndarray:
    rest = [i for i in range(len(dims)) if i not in reg]
    order = list(reg) + rest
    t = mat.reshape([dims[i] for i in order])
    return t.transpose(np.argsort(order)).reshape(-1)


def apply_local(state: StateVec, op: np.ndarray, register: Sequence[int], *, subnormalized: bool = False) -> StateVec:
    """Apply ``op`` to the given subsystems and return the new state."""
    reg = _register(register, state.dims)
    mat = _to_matrix(state.amps, state.dims, reg)
    if op.shape != (mat.shape[0], mat.shape[0]):
        raise DimensionMismatch(f"operator {op.shape} vs register dim {mat.shape[0]}")
    amps = _from_matrix(op @ mat, state.dims, reg)
    return StateVec(state.dims, amps, subnormalized or state.subnormalized)


def reduced_density(state: StateVec, register: Sequence[int]) -> np.ndarray:
    reg = _register(register, state.dims)
    mat = _to_matrix(state.amps, state.dims, reg)
    _check_mat_dim(mat.shape[0])
    return mat @ mat.conj().T


# -------------------------------------------------------------- eigensolver


def is_hermitian(M: np.ndarray, tol: float = HERM_TOL) -> bool:
    M = np.asarray(M)
    return M.ndim == 2 and M.shape[0] == M.shape[1] and float(np.max(np.abs(M - M.conj().T), initial=0.0)) <= tol


def jacobi_eigh(M: np.ndarray, rel_tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    Each rotation first removes the phase of the pivot, then applies the real
    symmetric Jacobi rotation. Iterates until the off-diagonal Frobenius mass
    drops below ``rel_tol * ||M||_F``.
    """
    A = np.array(M, dtype=complex)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    scale = np.linalg.norm(A)
    if n < 2 or scale == 0.0:
        w = A.diagonal().real.copy()
        order = np.argsort(w)
        return w[order], V[:, order]
    thresh = rel_tol * scale
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(A.diagonal()))
        if off < thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = A[p, q]
                mag = abs(g)
                if mag < 1e-300 or mag < 1e-18 * scale:
                    continue
                phase = g / mag
                theta = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                R = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ R
                A[idx, :] = R.conj().T @ A[idx, :]
                V[:, idx] = V[:, idx] @ R
    else:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = A.diagonal().real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def herm_eig(M: np.ndarray, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    dimension 64, LAPACK beyond).
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {M.shape}")
    _check_mat_dim(M.shape[0])
    scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
    if not is_hermitian(M, HERM_TOL * scale):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    if method == "auto":
        method = "jacobi" if M.shape[0] <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        return jacobi_eigh(M)
    if method == "lapack":
        w, U = np.linalg.eigh((M + M.conj().T) / 2)
        return w, U
    raise ValueError(f"unknown method {method!r}")


def eigvalsh(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    return np.linalg.eigvalsh((M + M.conj().T) / 2)


def psd_sqrt(E: np.ndarray) -> np.ndarray:
    w, U = herm_eig(E)
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.conj().T


def psd_part(E: np.ndarray) -> np.ndarray:
    w, U = herm_eig(E)
    return (U * np.clip(w, 0.0, None)) @ U.conj().T


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of ``rho - sigma``."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"{rho.shape} vs {sigma.shape}")
    w = eigvalsh(rho - sigma)
    return 0.5 * float(np.sum(np.abs(w)))


# ------------------------------------------------------------- measurements


@dataclass(frozen=True)
class ValidationReport:
    is_povm: bool
    min_eig: float
    completeness_gap: float
    max_eig: float
    min_eig_sum: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def povm_validate(ops: Sequence[np.ndarray], tol: float = COMPLETENESS_TOL, psd_tol: float = PSD_TOL) -> ValidationReport:
    """Check that ``ops`` are PSD and sum to the identity.

    ``max_eig`` and ``min_eig_sum`` are the extreme eigenvalues of the sum.
    """
    ops = [np.asarray(E, dtype=complex) for E in ops]
    if not ops:
        raise DimensionMismatch("empty operator list")
    d = ops[0].shape[0]
    if any(E.shape != (d, d) for E in ops):
        raise DimensionMismatch("operators have different dimensions")
    min_eig = min(float(eigvalsh(E)[0]) for E in ops)
    total = np.sum(ops, axis=0)
    w_sum = eigvalsh(total)
    gap = float(np.max(np.abs(w_sum - 1.0)))
    ok = min_eig >= -psd_tol and gap <= tol
    return ValidationReport(ok, min_eig, gap, float(w_sum[-1]), float(w_sum[0]))


class Measurement:
    """Common interface of :class:`Povm` and :class:`BasisMeasurement`."""

    labels: list[Hashable]

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def probabilities(self, mat: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def branch(self, mat: np.ndarray, i: int) -> np.ndarray:
        raise NotImplementedError

    def effects(self) -> list[np.ndarray]:
        raise NotImplementedError

    def effect(self, label: Hashable) -> np.ndarray:
        return self.effects()[self.labels.index(label)]

    def validate(self) -> ValidationReport:
        return povm_validate(self.effects())


class Povm(Measurement):
    """POVM given as an explicit list of (label, effect) pairs."""

    def __init__(self, outcomes: Sequence[tuple[Hashable, np.ndarray]]):
        if not outcomes:
            raise DimensionMismatch("empty POVM")
        self.labels = [lab for lab, _ in outcomes]
        self.ops = [np.asarray(E, dtype=complex) for _, E in outcomes]
        d = self.ops[0].shape[0]
        if any(E.shape != (d, d) for E in self.ops):
            raise DimensionMismatch("POVM elements have different dimensions")

    @property
    def outcomes(self) -> list[tuple[Hashable, np.ndarray]]:
        return list(zip(self.labels, self.ops))

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    @cached_property
    def _kraus(self) -> list[np.ndarray]:
        out = []
        for E in self.ops:
            if np.allclose(E @ E, E, atol=1e-10):
                out.append(E)
            else:
                out.append(psd_sqrt(E))
        return out

    def probabilities(self, mat: np.ndarray) -> np.ndarray:
        # tr(E rho_reg) with rho_reg = mat mat^dagger
        rho = mat @ mat.conj().T
        return np.array([np.real(np.vdot(E.conj().T, rho)) for E in self.ops]).clip(0.0)

    def branch(self, mat: np.ndarray, i: int) -> np.ndarray:
        return self._kraus[i] @ mat

    def effects(self) -> list[np.ndarray]:
        return list(self.ops)


class BasisMeasurement(Measurement):
    """Projective measurement onto the orthonormal columns of ``basis``."""

    def __init__(self, basis: np.ndarray, labels: Sequence[Hashable] | None = None):
        self.basis = np.asarray(basis, dtype=complex)
        d = self.basis.shape[0]
        if self.basis.shape != (d, d):
            raise DimensionMismatch("basis must be square")
        _check_mat_dim(d)
        self.labels = list(range(d)) if labels is None else list(labels)
        if len(self.labels) != d:
            raise DimensionMismatch("one label per basis vector required")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def probabilities(self, mat: np.ndarray) -> np.ndarray:
        coeffs = self.basis.conj().T @ mat
        return np.sum(np.abs(coeffs) ** 2, axis=1)

    def branch(self, mat: np.ndarray, i: int) -> np.ndarray:
        b = self.basis[:, i]
        return np.outer(b, b.conj() @ mat)

    def effects(self) -> list[np.ndarray]:
        return [np.outer(self.basis[:, i], self.basis[:, i].conj()) for i in range(self.dim)]

    def effect(self, label: Hashable) -> np.ndarray:
        b = self.basis[:, self.labels.index(label)]
        return np.outer(b, b.conj())

    def validate(self) -> ValidationReport:
        gap = float(np.linalg.norm(self.basis.conj().T @ self.basis - np.eye(self.dim), 2))
        return ValidationReport(gap <= COMPLETENESS_TOL, 0.0, gap, 1.0 + gap, 1.0 - gap)


def born_probabilities(state: StateVec, povm: Measurement, register: Sequence[int] | None = None) -> np.ndarray:
    reg = _register(register, state.dims)
    mat = _to_matrix(state.amps, state.dims, reg)
    if povm.dim != mat.shape[0]:
        raise DimensionMismatch(f"POVM dim {povm.dim} vs register dim {mat.shape[0]}")
    return povm.probabilities(mat)


def measure_sample(
    state: StateVec,
    povm: Measurement,
    register: Sequence[int] | None,
    rng: np.random.Generator,
) -> tuple[Hashable, StateVec]:
    """Sample a measurement outcome and return it with the normalised post-state."""
    reg = _register(register, state.dims)
    mat = _to_matrix(state.amps, state.dims, reg)
    if povm.dim != mat.shape[0]:
        raise DimensionMismatch(f"POVM dim {povm.dim} vs register dim {mat.shape[0]}")
    probs = povm.probabilities(mat)
    total = probs.sum()
    i = int(rng.choice(len(probs), p=probs / total))
    if probs[i] < ZERO_BRANCH:
        raise ZeroProbabilityBranch(f"outcome {povm.labels[i]!r} has probability {probs[i]:.3g}")
    post = povm.branch(mat, i) / np.sqrt(probs[i])
    return povm.labels[i], StateVec(state.dims, _from_matrix(post, state.dims, reg))


def project(state: StateVec, effect: np.ndarray, register: Sequence[int] | None) -> float:
    """Probability ``tr((E (x) I) rho)`` without sampling."""
    reg = _register(register, state.dims)
    mat = _to_matrix(state.amps, state.dims, reg)
    return float(np.real(np.vdot(mat, effect @ mat)))


# -------------------------------------------------------------- teleportation


def shift_op(d: int, j: int = 1) -> np.ndarray:
    """Generalised Pauli X^j: |x> -> |x + j mod d>."""
    return np.roll(np.eye(d, dtype=complex), j % d, axis=0)


def clock_op(d: int, k: int = 1) -> np.ndarray:
    """Generalised Pauli Z^k: |x> -> omega^{kx} |x>."""
    return np.diag(np.exp(2j * np.pi * k * np.arange(d) / d))


def bell_basis(d: int) -> np.ndarray:
    """Columns (X^j Z^l (x) I)|Phi>, ordered by index j*d + l."""
    phi = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    cols = [np.kron(shift_op(d, j) @ clock_op(d, l), np.eye(d)) @ phi for j in range(d) for l in range(d)]
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class TeleportRecord:
    corrections: tuple[tuple[int, int], ...]
    applied: tuple[tuple[int, int], ...]


def teleport(
    payload: StateVec,
    epr: StateVec,
    rng: np.random.Generator,
    tamper: Callable[[int, int, int], tuple[int, int]] | None = None,
) -> tuple[StateVec, TeleportRecord]:
    """Teleport ``payload`` through EPR pairs laid out as by :func:`epr_state`.

    Each payload qudit undergoes a generalised Bell measurement with its
    prover half; the verifier half receives the correction X^j Z^l.
    ``tamper(i, j, l)`` may alter the correction that is actually applied.
    """
    count = len(payload.dims)
    if len(epr.dims) != 2 * count or any(d != epr.dims[0] for d in payload.dims + epr.dims):
        raise DimensionMismatch("payload qudits must match the EPR pair dimension and count")
    d = epr.dims[0]
    state = tensor(payload, epr)
    bell = BasisMeasurement(bell_basis(d), labels=[(j, l) for j in range(d) for l in range(d)])
    corrections: list[tuple[int, int]] = []
    for i in range(count):
        label, state = measure_sample(state, bell, [i, count + i], rng)
        corrections.append(label)
    # every measured pair is now in a known Bell state, so the verifier
    # register factors out: contract with the conjugate Bell vectors
    ket = np.ones(1, dtype=complex)
    bcols = bell_basis(d)
    pair_order = [k for i in range(count) for k in (i, count + i)]
    mat = _to_matrix(state.amps, state.dims, pair_order)
    for j, l in corrections:
        ket = np.kron(ket, bcols[:, j * d + l])
    out = ket.conj() @ mat
    applied = []
    for i, (j, l) in enumerate(corrections):
        jj, ll = tamper(i, j, l) if tamper else (j, l)
        applied.append((jj, ll))
        op = shift_op(d, jj) @ clock_op(d, ll)
        single = _to_matrix(out, (d,) * count, (i,))
        out = _from_matrix(op @ single, (d,) * count, (i,))
    out = out / np.linalg.norm(out)
    return StateVec((d,) * count, out), TeleportRecord(tuple(corrections), tuple(applied))


def fidelity(a: StateVec, b: StateVec) -> float:
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)


def random_state(dims: Sequence[int] | int, rng: np.random.Generator) -> StateVec:
    dims = (dims,) if isinstance(dims, int) else tuple(dims)
    n = int(np.prod(dims))
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return StateVec(dims, v / np.linalg.norm(v))


def op_to_json(M: np.ndarray) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"dims": list(M.shape), "re": M.real.reshape(-1).tolist(), "im": M.imag.reshape(-1).tolist()}


class ProjectorTest(Measurement):
    """Binary test {I - W W^dagger, W W^dagger} for orthonormal columns ``W``.

    Outcome 1 is the projector onto the span of ``W``. An empty ``W`` gives a
    test that never accepts.
    """

    def __init__(self, vectors: np.ndarray, dim: int | None = None):
        W = np.asarray(vectors, dtype=complex)
        if W.ndim == 1:
            W = W[:, None]
        if W.size == 0:
            if dim is None:
                raise DimensionMismatch("empty projector needs an explicit dimension")
            W = np.zeros((dim, 0), dtype=complex)
        self.W = W
        self.labels = [0, 1]

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    def probabilities(self, mat: np.ndarray) -> np.ndarray:
        total = float(np.sum(np.abs(mat) ** 2))
        p1 = float(np.sum(np.abs(self.W.conj().T @ mat) ** 2))
        return np.array([max(total - p1, 0.0), p1])

    def branch(self, mat: np.ndarray, i: int) -> np.ndarray:
        proj = self.W @ (self.W.conj().T @ mat)
        return proj if i == 1 else mat - proj

    def effects(self) -> list[np.ndarray]:
        P = self.W @ self.W.conj().T
        return [np.eye(self.dim) - P, P]
