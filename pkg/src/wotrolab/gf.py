"""Exact arithmetic in prime fields and their extensions F_{p^n}.

Elements are polynomials over F_p of degree < n, stored as coefficient tuples
with the constant term first and always fully reduced modulo a monic
irreducible polynomial. No floating point is used anywhere in this module.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterator, Sequence

import numpy as np

from . import config
from .errors import (
    EvenCharacteristic,
    FieldMismatch,
    NonPrime,
    ReducibleModulus,
    TooLarge,
    ZeroInverse,
)

Poly = list[int]


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


# polynomial helpers over F_p, coefficient lists with constant term first


def _trim(a: Poly) -> Poly:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_sub(a: Poly, b: Poly, p: int) -> Poly:
    out = [0] * max(len(a), len(b))
    for i, c in enumerate(a):
        out[i] = c
    for i, c in enumerate(b):
        out[i] = (out[i] - c) % p
    return _trim(out)


def _poly_mul(a: Poly, b: Poly, p: int) -> Poly:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def _poly_divmod(a: Poly, b: Poly, p: int) -> tuple[Poly, Poly]:
    a = _trim(list(a))
    b = _trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = pow(b[-1], p - 2, p)
    q = [0] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b):
        shift = len(a) - len(b)
        coef = a[-1] * inv_lead % p
        q[shift] = coef
        for i, c in enumerate(b):
            a[shift + i] = (a[shift + i] - coef * c) % p
        _trim(a)
    return _trim(q), a


def _poly_mod(a: Poly, b: Poly, p: int) -> Poly:
    return _poly_divmod(a, b, p)[1]


def _poly_gcd(a: Poly, b: Poly, p: int) -> Poly:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _poly_mod(a, b, p)
    if a:
        inv = pow(a[-1], p - 2, p)
        a = [c * inv % p for c in a]
    return a


def _poly_powmod(base: Poly, e: int, mod: Poly, p: int) -> Poly:
    result: Poly = [1]
    base = _poly_mod(base, mod, p)
    while e:
        if e & 1:
            result = _poly_mod(_poly_mul(result, base, p), mod, p)
        base = _poly_mod(_poly_mul(base, base, p), mod, p)
        e >>= 1
    return result


def is_irreducible(modulus: Sequence[int], p: int) -> bool:
    """Irreducibility of a monic polynomial via gcd(x^{p^k} - x, f) = 1 for k <= n/2."""
    f = _trim([c % p for c in modulus])
    n = len(f) - 1
    if n < 1:
        return False
    if n == 1:
        return True
    xpk: Poly = [0, 1]
    for _ in range(1, n // 2 + 1):
        xpk = _poly_powmod(xpk, p, f, p)
        g = _poly_gcd(f, _poly_sub(xpk, [0, 1], p), p)
        if len(g) > 1:
            return False
    return True


def _smallest_irreducible(p: int, n: int) -> tuple[int, ...]:
    for idx in range(p**n):
        low = [(idx // p**j) % p for j in range(n)]
        cand = low + [1]
        if is_irreducible(cand, p):
            return tuple(cand)
    raise ReducibleModulus(f"no irreducible polynomial of degree {n} over F_{p}")  # pragma: no cover


@dataclass(frozen=True)
class Field:
    """The finite field F_{p^n} = F_p[t] / (modulus).

    ``modulus`` is the full monic coefficient list (length n + 1, constant
    term first). Construct through :func:`field_new`.
    """

    p: int
    n: int
    modulus: tuple[int, ...]

    @property
    def order(self) -> int:
        return self.p**self.n

    def __len__(self) -> int:
        return self.order

    def elem(self, coeffs: Sequence[int] | int) -> "FieldElem":
        if isinstance(coeffs, (int, np.integer)):
            return self.from_int(int(coeffs))
        c = [int(x) % self.p for x in coeffs]
        if len(c) > self.n:
            c = _poly_mod(c, list(self.modulus), self.p)
        c = c + [0] * (self.n - len(c))
        return FieldElem(tuple(c), self)

    def from_int(self, i: int) -> "FieldElem":
        """Element at position ``i`` of the lexicographic enumeration."""
        if not 0 <= i < self.order:
            raise ValueError(f"index {i} outside F_{self.p}^{self.n}")
        return FieldElem(tuple((i // self.p**j) % self.p for j in range(self.n)), self)

    @property
    def zero(self) -> "FieldElem":
        return FieldElem((0,) * self.n, self)

    @property
    def one(self) -> "FieldElem":
        return FieldElem((1,) + (0,) * (self.n - 1), self)

    def elements(self) -> list["FieldElem"]:
        return field_enumerate(self)

    @cached_property
    def trace_table(self) -> np.ndarray:
        """Trace of every element, indexed by lexicographic position."""
        return np.array([field_trace(x) for x in field_enumerate(self)], dtype=np.int64)

    @cached_property
    def mul_table(self) -> np.ndarray:
        """Multiplication table indexed by lexicographic positions."""
        els = field_enumerate(self)
        q = self.order
        tab = np.empty((q, q), dtype=np.int64)
        for i, x in enumerate(els):
            for j in range(i, q):
                tab[i, j] = tab[j, i] = int(x * els[j])
        return tab

    @cached_property
    def add_table(self) -> np.ndarray:
        els = field_enumerate(self)
        q = self.order
        tab = np.empty((q, q), dtype=np.int64)
        for i, x in enumerate(els):
            for j in range(q):
                tab[i, j] = int(x + els[j])
        return tab

    def to_json(self) -> dict:
        return {"p": self.p, "n": self.n, "modulus": list(self.modulus)}

    def __repr__(self) -> str:
        return f"Field(p={self.p}, n={self.n}, modulus={list(self.modulus)})"


@dataclass(frozen=True)
class FieldElem:
    coeffs: tuple[int, ...]
    field: Field

    def _check(self, other: "FieldElem") -> None:
        if not isinstance(other, FieldElem) or other.field != self.field:
            raise FieldMismatch("operands belong to different fields")

    def _coerce(self, other) -> "FieldElem":
        if isinstance(other, (int, np.integer)):
            return self.field.elem([int(other)])
        self._check(other)
        return other

    def __add__(self, other) -> "FieldElem":
        other = self._coerce(other)
        p = self.field.p
        return FieldElem(tuple((x + y) % p for x, y in zip(self.coeffs, other.coeffs)), self.field)

    __radd__ = __add__

    def __neg__(self) -> "FieldElem":
        p = self.field.p
        return FieldElem(tuple((-x) % p for x in self.coeffs), self.field)

    def __sub__(self, other) -> "FieldElem":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "FieldElem":
        return self._coerce(other) - self

    def __mul__(self, other) -> "FieldElem":
        other = self._coerce(other)
        f = self.field
        prod = _poly_mul(list(self.coeffs), list(other.coeffs), f.p)
        return f.elem(_poly_mod(prod, list(f.modulus), f.p))

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "FieldElem":
        if e < 0:
            return self.inverse() ** (-e)
        result = self.field.one
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> "FieldElem":
        if self.is_zero():
            raise ZeroInverse("zero has no multiplicative inverse")
        f = self.field
        p = f.p
        # extended Euclid on (a, modulus)
        r0, r1 = list(f.modulus), _trim(list(self.coeffs))
        s0, s1 = [], [1]
        while r1:
            q, r = _poly_divmod(r0, r1, p)
            r0, r1 = r1, r
            s0, s1 = s1, _poly_sub(s0, _poly_mul(q, s1, p), p)
        inv_lead = pow(r0[0], p - 2, p)
        return f.elem([c * inv_lead % p for c in s0])

    def __truediv__(self, other) -> "FieldElem":
        return self * self._coerce(other).inverse()

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def trace(self) -> int:
        return field_trace(self)

    def __int__(self) -> int:
        p = self.field.p
        return sum(c * p**j for j, c in enumerate(self.coeffs))

    __index__ = __int__

    def __repr__(self) -> str:
        terms = []
        for j, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if j == 0 else ("t" if j == 1 else f"t^{j}")
            coef = str(c) if (c != 1 or j == 0) else ""
            terms.append(coef + mono)
        return " + ".join(reversed(terms)) if terms else "0"


def field_new(p: int, n: int = 1, modulus: Sequence[int] | None = None) -> Field:
    """Build F_{p^n}.

    Without ``modulus`` the lexicographically smallest monic irreducible
    polynomial of degree ``n`` is used (lower coefficients read as base-p
    digits, constant term least significant).
    """
    if not is_prime(p):
        raise NonPrime(f"{p} is not prime")
    if p == 2:
        raise EvenCharacteristic("characteristic 2 is not supported")
    if n < 1:
        raise ValueError("extension degree must be >= 1")
    if modulus is None:
        mod = _smallest_irreducible(p, n)
    else:
        mod = tuple(int(c) % p for c in modulus)
        if len(mod) != n + 1 or mod[-1] != 1:
            raise ReducibleModulus(f"modulus must be monic of degree {n}")
        if not is_irreducible(mod, p):
            raise ReducibleModulus(f"{list(mod)} is reducible over F_{p}")
    return Field(p, n, mod)


def binary_field(m: int) -> Field:
    """F_{2^m}, used only by the t-wise independent hash family."""
    if m < 1:
        raise ValueError("degree must be >= 1")
    return Field(2, m, _smallest_irreducible(2, m))


def field_arith(op: str, x: FieldElem, y: FieldElem | int | None = None) -> FieldElem:
    if op == "add":
        x._check(y)
        return x + y
    if op == "mul":
        x._check(y)
        return x * y
    if op == "inv":
        return x.inverse()
    if op == "pow":
        if not isinstance(y, (int, np.integer)) or y < 0:
            raise ValueError("pow expects a natural exponent")
        return x ** int(y)
    raise ValueError(f"unknown op {op!r}")


def field_trace(x: FieldElem) -> int:
    """x + x^p + ... + x^{p^{n-1}}, returned as an integer in [0, p)."""
    f = x.field
    acc = x
    y = x
    for _ in range(f.n - 1):
        y = y ** f.p
        acc = acc + y
    if any(acc.coeffs[1:]):
        raise ArithmeticError("trace left the prime subfield")  # pragma: no cover
    return acc.coeffs[0]


def field_enumerate(field: Field) -> list[FieldElem]:
    if field.order > config.MAX_FIELD_SIZE:
        raise TooLarge(f"field of order {field.order} exceeds cap {config.MAX_FIELD_SIZE}")
    return _enumerate_cached(field)


_ENUM_CACHE: dict[Field, list[FieldElem]] = {}


def _enumerate_cached(field: Field) -> list[FieldElem]:
    els = _ENUM_CACHE.get(field)
    if els is None:
        els = [FieldElem(tuple(reversed(c)), field) for c in product(range(field.p), repeat=field.n)]
        _ENUM_CACHE[field] = els
    return list(els)


def iter_field(field: Field) -> Iterator[FieldElem]:
    yield from field_enumerate(field)
