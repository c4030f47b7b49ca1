"""Spectral certificate for the 3/4 cheating bound and character-sum audits.

The bad-outcome operator S sums the MUB projectors |x>_a<x| over inputs a and
triples x with x3 = c(a)(x1 + x2). Z = (alpha + 1) S (alpha + S)^{-1} is a
dual-feasible point of the cheating SDP, so Tr Z / p^{3n} bounds the cheating
probability from above.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InfeasibleCertificate, NotDistinct, RankDeficient, TooLarge
from .gf import Field
from .mub import _basis_matrix
from .qsim import eigvalsh, herm_eig

Target = Callable[[int], int]
FEAS_TOL = 1e-7


def _target_fn(target: Target | Sequence[int]) -> Target:
    if callable(target):
        return target
    table = list(target)
    return table.__getitem__


def bad_set(field: Field, target: Target, a: int, convention: str = "linear") -> list[tuple[int, int, int]]:
    """Triples x that make the challenge equal target(a).

    ``linear``: x3 = c(a)(x1 + x2), which always has p^{2n} elements.
    ``protocol``: the challenge rule itself, where x1 + x2 = 0 forces challenge 0.
    """
    q = field.order
    add, mul = field.add_table, field.mul_table
    ca = int(target(a))
    out = []
    for x1 in range(q):
        for x2 in range(q):
            s = int(add[x1, x2])
            if convention == "linear":
                out.append((x1, x2, int(mul[ca, s])))
            elif convention == "protocol":
                if s == 0:
                    if ca == 0:
                        out.extend((x1, x2, x3) for x3 in range(q))
                else:
                    # x3 / s = ca  <=>  x3 = ca * s
                    out.append((x1, x2, int(mul[ca, s])))
            else:
                raise ValueError(f"unknown convention {convention!r}")
    return out


@dataclass(eq=False)
class SOperator:
    field: Field
    target: Target
    matrix: np.ndarray
    bad_sets: dict[int, list[tuple[int, int, int]]]
    vectors: dict[int, np.ndarray]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _triple_basis(field: Field, a: int) -> np.ndarray:
    B = _basis_matrix(field, a)
    return np.kron(np.kron(B, B), B)


def build_S(field: Field, target: Target | Sequence[int], convention: str = "linear") -> SOperator:
    q = field.order
    if q**3 > 4096:
        raise TooLarge(f"S would have dimension {q**3}")
    target = _target_fn(target)
    S = np.zeros((q**3, q**3), dtype=complex)
    bad: dict[int, list] = {}
    vecs: dict[int, np.ndarray] = {}
    for a in range(q):
        xs = bad_set(field, target, a, convention)
        bad[a] = xs
        cols = _triple_basis(field, a)[:, [(x1 * q + x2) * q + x3 for x1, x2, x3 in xs]]
        vecs[a] = cols
        S += cols @ cols.conj().T
    return SOperator(field, target, S, bad, vecs)


@dataclass(frozen=True)
class TraceMoments:
    tr1: float
    tr2: float
    tr3: float
    expected1: int
    expected2: int
    bound3: int

    @property
    def ok(self) -> bool:
        tol = 1e-6 * self.expected1
        return (
            abs(self.tr1 - self.expected1) <= tol
            and abs(self.tr2 - self.expected2) <= tol
            and self.tr3 <= self.bound3 + tol
        )

    def to_json(self) -> dict:
        return {**self.__dict__, "ok": self.ok}


def trace_moments(S: SOperator) -> TraceMoments:
    p, n = S.field.p, S.field.n
    M = S.matrix
    M2 = M @ M
    tr1 = float(np.real(np.trace(M)))
    tr2 = float(np.real(np.trace(M2)))
    tr3 = float(np.real(np.sum(M2 * M.T)))
    return TraceMoments(tr1, tr2, tr3, p ** (3 * n), 2 * p ** (3 * n) - p ** (2 * n), 4 * p ** (3 * n) + p ** (2 * n))


def taylor_dual_value(p: int, n: int, alpha: float) -> float:
    """Cubic Taylor bound at lambda = 1 with the trace identities substituted."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    r = float(p) ** (-n)
    return 1 - alpha * (1 - r) / (alpha + 1) ** 2 + 4 * alpha * r / (alpha + 1) ** 3


def taylor_from_traces(tr1: float, tr2: float, tr3: float, dim: int, alpha: float, lam: float = 1.0) -> float:
    """Same Taylor bound, fed with measured traces instead of the closed forms."""
    t1 = tr1 - lam * dim
    t2 = tr2 - 2 * lam * tr1 + lam**2 * dim
    t3 = tr3 - 3 * lam * tr2 + 3 * lam**2 * tr1 - lam**3 * dim
    al = alpha + lam
    val = lam / al * dim + alpha / al**2 * t1 - alpha / al**3 * t2 + alpha / al**4 * t3
    return (alpha + 1) * val / dim


@dataclass
class DualCertificate:
    alpha: float
    Z: np.ndarray
    dual_value: float
    feasibility_min_eig: float
    taylor_value: float
    checked_pairs: int
    max_inverse_form: float
    support_residual: float
    sample_seed: int | None = None

    @property
    def feasible(self) -> bool:
        return self.feasibility_min_eig >= -FEAS_TOL

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "dual_value": self.dual_value,
            "feasibility_min_eig": self.feasibility_min_eig,
            "taylor_value": self.taylor_value,
            "checked_pairs": self.checked_pairs,
            "max_inverse_form": self.max_inverse_form,
            "support_residual": self.support_residual,
            "sample_seed": self.sample_seed,
        }


def dual_certificate(
    S: SOperator,
    alpha: float,
    rng: np.random.Generator | None = None,
    samples: int = 200,
    top: int = 10,
    exhaustive: bool | None = None,
    sample_seed: int | None = None,
    strict: bool = True,
) -> DualCertificate:
    """Build Z = (alpha + 1) f_alpha(S) and check Z >= |x>_a<x| for x in B(a).

    The min-eigenvalue check runs on every pair when the field has order at
    most 3 (or ``exhaustive``), otherwise on ``samples`` random pairs plus
    the ``top`` pairs with the largest v^dagger Z^+ v. That inverse form is
    also evaluated on every pair; Z >= v v^dagger holds exactly when v lies
    in the support of Z and v^dagger Z^+ v <= 1.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    p, n = S.field.p, S.field.n
    dim = S.dim
    w, U = herm_eig(S.matrix)
    w = np.clip(w, 0.0, None)
    fz = (alpha + 1) * w / (alpha + w)
    Z = (U * fz) @ U.conj().T
    dual_value = float(np.sum(fz)) / dim

    support = fz > 1e-10
    Us = U[:, support]
    inv_diag = 1.0 / fz[support]
    pairs = [(a, j) for a in sorted(S.vectors) for j in range(S.vectors[a].shape[1])]
    all_v = np.concatenate([S.vectors[a] for a in sorted(S.vectors)], axis=1)
    coeff = Us.conj().T @ all_v
    inv_form = np.sum(inv_diag[:, None] * np.abs(coeff) ** 2, axis=0)
    residual = float(np.max(np.linalg.norm(all_v - Us @ coeff, axis=0)))

    if exhaustive is None:
        exhaustive = S.field.order <= 3
    if exhaustive:
        chosen = list(range(len(pairs)))
    else:
        if rng is None:
            raise ValueError("sampled feasibility needs an rng")
        chosen = list(rng.choice(len(pairs), size=min(samples, len(pairs)), replace=False))
        chosen += list(np.argsort(inv_form)[-top:])
        chosen = sorted(set(int(i) for i in chosen))
    min_eig = np.inf
    for i in chosen:
        v = all_v[:, i]
        min_eig = min(min_eig, float(eigvalsh(Z - np.outer(v, v.conj()))[0]))
    cert = DualCertificate(
        alpha=alpha,
        Z=Z,
        dual_value=dual_value,
        feasibility_min_eig=float(min_eig),
        taylor_value=taylor_dual_value(p, n, alpha),
        checked_pairs=len(chosen),
        max_inverse_form=float(np.max(inv_form)),
        support_residual=residual,
        sample_seed=sample_seed,
    )
    if strict and not cert.feasible:
        raise InfeasibleCertificate(f"min eigenvalue {cert.feasibility_min_eig:.3g}")
    return cert


def primal_lower_bound(S: SOperator) -> float:
    """Cheating probability of the pretty-good measurement built from S.

    M_{a,x} = S^{-1/2} |x>_a<x| S^{-1/2} is a valid strategy, so this value is
    a lower bound on the SDP optimum.
    """
    w, U = herm_eig(S.matrix)
    keep = w > 1e-10
    Us = U[:, keep]
    root_inv = 1.0 / np.sqrt(w[keep])
    all_v = np.concatenate([S.vectors[a] for a in sorted(S.vectors)], axis=1)
    coeff = Us.conj().T @ all_v
    forms = np.sum(root_inv[:, None] * np.abs(coeff) ** 2, axis=0)
    return float(np.sum(forms**2)) / S.dim


def alpha_sweep(p: int, n: int, alphas: Sequence[float] | None = None) -> dict[float, float]:
    alphas = np.linspace(0.05, 1.0, 20) if alphas is None else alphas
    return {float(a): taylor_dual_value(p, n, float(a)) for a in alphas}


def asymptotic_taylor(alpha: float) -> float:
    """Limit of the Taylor bound as p^{-n} -> 0."""
    return 1 - alpha / (alpha + 1) ** 2


# ----------------------------------------------------------- linear algebra


def rank_mod_p(M: np.ndarray, p: int) -> int:
    return len(_row_reduce(M, p)[1])


def _row_reduce(M: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    A = np.array(M, dtype=np.int64) % p
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        nz = [i for i in range(r, rows) if A[i, c]]
        if not nz:
            continue
        A[[r, nz[0]]] = A[[nz[0], r]]
        A[r] = A[r] * pow(int(A[r, c]), p - 2, p) % p
        for i in range(rows):
            if i != r and A[i, c]:
                A[i] = (A[i] - A[i, c] * A[r]) % p
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return A[:r], pivots


def nullspace_mod_p(M: np.ndarray, p: int) -> np.ndarray:
    """Basis of {x : M x = 0} over F_p as rows."""
    R, piv = _row_reduce(M, p)
    cols = M.shape[1]
    free = [c for c in range(cols) if c not in piv]
    basis = []
    for f in free:
        v = np.zeros(cols, dtype=np.int64)
        v[f] = 1
        for i, c in enumerate(piv):
            v[c] = (-R[i, f]) % p
        basis.append(v)
    return np.array(basis, dtype=np.int64).reshape(len(basis), cols)


# ------------------------------------------------------------- Weil sums


@dataclass(frozen=True)
class FullQuadratic:
    Q: np.ndarray
    degree: int = 2

    @property
    def n_vars(self) -> int:
        return self.Q.shape[0]


@dataclass(frozen=True)
class Constrained:
    B: np.ndarray
    C: np.ndarray


@dataclass
class WeilResult:
    abs_sum: float
    bound: float
    holds: bool
    domain: int
    kernel_dim: int | None = None
    rank_B: int | None = None
    radical_dim: int | None = None
    corrected_bound: float | None = None
    row_rank_deficient: bool = False

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _character_sum(values: np.ndarray, p: int) -> complex:
    counts = np.bincount(values % p, minlength=p).astype(float)
    return complex(np.sum(counts * np.exp(2j * np.pi * np.arange(p) / p)))


def _points(basis: np.ndarray, p: int, chunk: int = 1 << 18):
    """Yield all F_p combinations of the rows of ``basis`` in chunks."""
    k = basis.shape[0]
    total = p**k
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        coeffs = (idx[:, None] // p ** np.arange(k)[None, :]) % p
        yield coeffs @ basis % p if k else np.zeros((len(idx), basis.shape[1]), dtype=np.int64)


def weil_sum_audit(p: int, spec: FullQuadratic | Constrained, max_domain: int = 10**7, strict: bool = False) -> WeilResult:
    """Exhaustive |sum psi(Q(x))| with psi(t) = exp(2 pi i t / p).

    Full mode sums over F_p^{n_vars} and compares with (d-1)^{n_vars} p^{n_vars/2}.
    Constrained mode sums xi^T C xi over ker B and compares with p^{m/2},
    m = k - rank(B). It also reports the radical of the form restricted to
    ker B; with radical dimension r the exact magnitude is p^{(m+r)/2}.
    ``strict`` rejects a B that is not of full row rank.
    """
    if isinstance(spec, FullQuadratic):
        k = spec.n_vars
        if p**k > max_domain:
            raise TooLarge(f"domain {p**k} exceeds {max_domain}")
        Q = np.asarray(spec.Q, dtype=np.int64) % p
        total = 0j
        for pts in _points(np.eye(k, dtype=np.int64), p):
            vals = np.einsum("ij,jk,ik->i", pts, Q, pts)
            total += _character_sum(vals, p)
        bound = (spec.degree - 1) ** k * p ** (k / 2)
        return WeilResult(abs(total), bound, abs(total) <= bound + 1e-6, p**k)

    B = np.asarray(spec.B, dtype=np.int64) % p
    C = np.asarray(spec.C, dtype=np.int64) % p
    k = B.shape[1]
    rB = rank_mod_p(B, p)
    if rank_mod_p(C, p) != k:
        raise RankDeficient("C must have full rank")
    deficient = rB < B.shape[0]
    if strict and deficient:
        raise RankDeficient(f"B has rank {rB} < {B.shape[0]} rows")
    if p**k > max_domain:
        raise TooLarge(f"domain {p**k} exceeds {max_domain}")
    K = nullspace_mod_p(B, p)
    m = K.shape[0]
    total = 0j
    for pts in _points(K, p):
        vals = np.einsum("ij,jk,ik->i", pts, C, pts)
        total += _character_sum(vals, p)
    Csym = (C + C.T) % p
    G = (K @ Csym @ K.T) % p if m else np.zeros((0, 0), dtype=np.int64)
    radical = m - (rank_mod_p(G, p) if m else 0)
    bound = p ** (m / 2)
    return WeilResult(
        abs(total),
        bound,
        abs(total) <= bound + 1e-6,
        p**m,
        kernel_dim=m,
        rank_B=rB,
        radical_dim=radical,
        corrected_bound=p ** ((m + radical) / 2),
        row_rank_deficient=deficient,
    )


@dataclass(frozen=True)
class WeilMatrices:
    B_a: np.ndarray
    B_abc: np.ndarray
    C_abc: np.ndarray
    rank_B_a: int
    rank_B_abc: int
    rank_C: int


def build_weil_matrices(field: Field, a: int, b: int, c: int, target: Target | Sequence[int]) -> WeilMatrices:
    """Constraint and form matrices for three distinct inputs over a prime field."""
    if len({int(a), int(b), int(c)}) != 3:
        raise NotDistinct("a, b, c must be pairwise distinct")
    if field.n != 1:
        raise ValueError("integer matrices are built over prime fields only")
    p = field.p
    target = _target_fn(target)

    def Bx(v: int) -> np.ndarray:
        t = int(target(v)) % p
        return np.array([[1, 0, t], [0, 1, t]], dtype=np.int64)

    Ba, Bb, Bc = Bx(a), Bx(b), Bx(c)
    Z = np.zeros((2, 3), dtype=np.int64)
    B = np.block([[-Ba, Z, Ba], [Z, Bb, -Bb], [Bc, -Bc, Z]]) % p
    I3 = np.eye(3, dtype=np.int64)
    C = np.block(
        [
            [(c - a) * I3, np.zeros((3, 6), dtype=np.int64)],
            [np.zeros((3, 3), dtype=np.int64), (b - c) * I3, np.zeros((3, 3), dtype=np.int64)],
            [np.zeros((3, 6), dtype=np.int64), (a - b) * I3],
        ]
    ) % p
    return WeilMatrices(Ba, B, C, rank_mod_p(Ba, p), rank_mod_p(B, p), rank_mod_p(C, p))


def constrained_cases(field: Field) -> list[tuple[tuple[int, ...], tuple[int, int, int]]]:
    """Every target table and every ordered distinct triple of inputs."""
    q = field.order
    tables = list(itertools.product(range(q), repeat=q))
    triples = [t for t in itertools.permutations(range(q), 3)]
    return [(tab, tr) for tab in tables for tr in triples]
