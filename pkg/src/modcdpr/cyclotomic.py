"""Exact arithmetic in R = Z[x]/(x^n + 1) and K = Q(zeta_{2^k}).

Elements are stored as an integer numerator vector over a single positive
denominator, so ring multiplication is an integer negacyclic convolution.
Complex embeddings are evaluated either with numpy (53-bit) or mpmath at a
caller-chosen precision.

Embedding index order is fixed: position f holds sigma_{2f+1}, i.e. the odd
residues 1, 3, ..., 2n-1 in ascending order.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath
import numpy as np

DEFAULT_PRECISION = int(os.environ.get("MODCDPR_PRECISION", "128"))


class ParameterMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class RingParams:
    k: int

    def __post_init__(self):
        if self.k < 3:
            raise ValueError(f"k must be >= 3, got {self.k}")

    @property
    def n(self) -> int:
        return 2 ** (self.k - 1)

    @property
    def conductor(self) -> int:
        return 2 ** self.k


def _normalize(num: Sequence[int], den: int) -> tuple[tuple[int, ...], int]:
    if den == 0:
        raise ZeroDivisionError("zero denominator")
    if den < 0:
        num = [-c for c in num]
        den = -den
    g = den
    for c in num:
        if g == 1:
            break
        g = math.gcd(g, c)
    if g > 1:
        num = [c // g for c in num]
        den //= g
    return tuple(int(c) for c in num), int(den)


def _negacyclic(a: Sequence[int], b: Sequence[int]) -> list[int]:
    n = len(a)
    full = np.convolve(np.array(a, dtype=object), np.array(b, dtype=object))
    out = list(full[:n])
    for i, c in enumerate(full[n:]):
        out[i] -= c
    return [int(c) for c in out]


@dataclass(frozen=True)
class RingElement:
    """Element of K in the power basis: coefficients num[m] / den."""

    num: tuple[int, ...]
    den: int
    params: RingParams

    # construction ---------------------------------------------------------

    @classmethod
    def from_coeffs(cls, coeffs: Iterable, k: int | RingParams) -> "RingElement":
        params = k if isinstance(k, RingParams) else RingParams(k)
        fr = [Fraction(c) for c in coeffs]
        if len(fr) != params.n:
            raise ValueError(f"expected {params.n} coefficients, got {len(fr)}")
        den = 1
        for c in fr:
            den = den * c.denominator // math.gcd(den, c.denominator)
        num, den = _normalize([c.numerator * (den // c.denominator) for c in fr], den)
        return cls(num, den, params)

    @classmethod
    def from_int_array(cls, coeffs, k: int | RingParams, den: int = 1) -> "RingElement":
        params = k if isinstance(k, RingParams) else RingParams(k)
        num, den = _normalize([int(c) for c in coeffs], den)
        if len(num) != params.n:
            raise ValueError(f"expected {params.n} coefficients, got {len(num)}")
        return cls(num, den, params)

    @classmethod
    def scalar(cls, c, k: int | RingParams) -> "RingElement":
        params = k if isinstance(k, RingParams) else RingParams(k)
        c = Fraction(c)
        return cls.from_coeffs([c] + [0] * (params.n - 1), params)

    @classmethod
    def zero(cls, k) -> "RingElement":
        return cls.scalar(0, k)

    @classmethod
    def one(cls, k) -> "RingElement":
        return cls.scalar(1, k)

    @classmethod
    def zeta(cls, m: int, k: int | RingParams) -> "RingElement":
        """zeta^m for any integer m (reduced with zeta^n = -1)."""
        params = k if isinstance(k, RingParams) else RingParams(k)
        n = params.n
        m %= 2 * n
        coeffs = [0] * n
        if m < n:
            coeffs[m] = 1
        else:
            coeffs[m - n] = -1
        return cls(tuple(coeffs), 1, params)

    # accessors ------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(c, self.den) for c in self.num)

    def float_coeffs(self) -> np.ndarray:
        if self.den == 1:
            return np.array([float(c) for c in self.num])
        return np.array([c / self.den for c in self.num], dtype=float)

    def is_zero(self) -> bool:
        return not any(self.num)

    def is_integral(self) -> bool:
        return self.den == 1

    # arithmetic -----------------------------------------------------------

    def _check(self, other: "RingElement"):
        if not isinstance(other, RingElement):
            raise TypeError(f"expected RingElement, got {type(other).__name__}")
        if other.params != self.params:
            raise ParameterMismatchError(f"k={self.k} vs k={other.k}")

    def _coerce(self, other) -> "RingElement":
        if isinstance(other, RingElement):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return RingElement.scalar(other, self.params)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        den = self.den * other.den // math.gcd(self.den, other.den)
        a, b = den // self.den, den // other.den
        num, den = _normalize([x * a + y * b for x, y in zip(self.num, other.num)], den)
        return RingElement(num, den, self.params)

    __radd__ = __add__

    def __neg__(self):
        return RingElement(tuple(-c for c in self.num), self.den, self.params)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            num, den = _normalize([c * other.numerator for c in self.num], self.den * other.denominator)
            return RingElement(num, den, self.params)
        if not isinstance(other, RingElement):
            return NotImplemented
        return ring_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        if isinstance(other, RingElement):
            return ring_mul(self, other.inverse())
        return NotImplemented

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = RingElement.one(self.params)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def galois(self, a: int) -> "RingElement":
        """Automorphism zeta -> zeta^a for odd a."""
        if a % 2 == 0:
            raise ValueError("Galois automorphisms are indexed by odd residues")
        n = self.n
        out = [0] * n
        for m, c in enumerate(self.num):
            if c == 0:
                continue
            e = (a * m) % (2 * n)
            if e < n:
                out[e] += c
            else:
                out[e - n] -= c
        return RingElement(tuple(out), self.den, self.params)

    def conj(self) -> "RingElement":
        return self.galois(-1)

    def inverse(self) -> "RingElement":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        num, den = _tower_inverse(list(self.num))
        num, den = _normalize([c * self.den for c in num], den)
        return RingElement(num, den, self.params)

    # serialization --------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {"k": self.k, "coeffs": [f"{c.numerator}/{c.denominator}" for c in self.coeffs]}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "RingElement":
        return cls.from_coeffs([Fraction(s) for s in obj["coeffs"]], int(obj["k"]))

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json(cls, text: str) -> "RingElement":
        return cls.from_json_obj(json.loads(text))

    def __repr__(self):
        body = ", ".join(str(c) for c in self.coeffs)
        return f"RingElement(k={self.k}, [{body}])"


def ring_mul(a: RingElement, b: RingElement) -> RingElement:
    """Exact product in K with zeta^n = -1."""
    a._check(b)
    num, den = _normalize(_negacyclic(a.num, b.num), a.den * b.den)
    return RingElement(num, den, a.params)


def _tower_inverse(num: list[int]) -> tuple[list[int], int]:
    """Invert an integer polynomial modulo x^n + 1.

    Uses the Galois tower: a(x) * a(-x) only has even powers, so it lives in
    the half-size ring; recurse there and multiply back by a(-x).
    """
    n = len(num)
    if n == 1:
        c = num[0]
        return ([1], c) if c > 0 else ([-1], -c)
    flipped = [c if m % 2 == 0 else -c for m, c in enumerate(num)]
    prod = _negacyclic(num, flipped)
    half_num, half_den = _tower_inverse(prod[0::2])
    lifted = [0] * n
    lifted[0::2] = half_num
    return _negacyclic(flipped, lifted), half_den


def _tower_norm(num: list[int]) -> int:
    n = len(num)
    if n == 1:
        return num[0]
    flipped = [c if m % 2 == 0 else -c for m, c in enumerate(num)]
    return _tower_norm(_negacyclic(num, flipped)[0::2])


# embeddings ---------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingVector:
    """sigma(a) as n complex values; position f holds sigma_{2f+1}(a).

    ``values`` is complex128 at precision 53 and an object array of
    ``mpmath.mpc`` above it.
    """

    values: np.ndarray
    precision: int

    @property
    def residues(self) -> np.ndarray:
        return 2 * np.arange(len(self.values)) + 1

    def abs(self) -> np.ndarray:
        if self.values.dtype == object:
            return np.array([float(abs(v)) for v in self.values])
        return np.abs(self.values)

    def norm2(self) -> float:
        return float(np.sqrt(np.sum(self.abs() ** 2)))

    def norm_inf(self) -> float:
        return float(np.max(self.abs()))

    def to_complex(self) -> np.ndarray:
        if self.values.dtype == object:
            return np.array([complex(v) for v in self.values])
        return self.values


def embed_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Float embedding of coefficient arrays along the last axis."""
    coeffs = np.asarray(coeffs, dtype=float)
    n = coeffs.shape[-1]
    twist = np.exp(1j * np.pi * np.arange(n) / n)
    return np.fft.ifft(coeffs * twist, axis=-1) * n


@lru_cache(maxsize=64)
def _mp_roots(two_n: int, precision: int):
    with mpmath.workprec(precision):
        return tuple(mpmath.expjpi(mpmath.mpf(2 * r) / two_n) for r in range(two_n))


def galois_embed(a: RingElement, precision: int = DEFAULT_PRECISION) -> EmbeddingVector:
    if precision < 53:
        raise ValueError("precision must be at least 53 bits")
    n = a.n
    if precision == 53:
        return EmbeddingVector(embed_coeffs(a.float_coeffs()), 53)
    roots = _mp_roots(2 * n, precision)
    values = np.empty(n, dtype=object)
    with mpmath.workprec(precision):
        coeffs = [mpmath.mpf(c) / a.den for c in a.num]
        nz = [(m, c) for m, c in enumerate(coeffs) if c != 0]
        for f in range(n):
            ell = 2 * f + 1
            acc = mpmath.mpc(0)
            for m, c in nz:
                acc += c * roots[(ell * m) % (2 * n)]
            values[f] = acc
    return EmbeddingVector(values, precision)


def trace(a: RingElement) -> Fraction:
    """Tr_{K/Q}(a) = n * x_0, since Tr(zeta^m) = 0 for 0 < m < n."""
    return Fraction(a.n * a.num[0], a.den)


def field_norm_exact(a: RingElement) -> Fraction:
    return Fraction(_tower_norm(list(a.num)), a.den ** a.n)


def field_norm(a: RingElement, precision: int = DEFAULT_PRECISION) -> float:
    """Nm(a) as the product of the n embeddings (numerically)."""
    emb = galois_embed(a, precision)
    if emb.values.dtype == object:
        with mpmath.workprec(precision):
            prod = mpmath.mpf(1)
            for v in emb.values:
                prod *= v
            return float(mpmath.re(prod))
    return float(np.real(np.prod(emb.values)))


def log_abs_norm(a: RingElement) -> float:
    """log |Nm(a)| computed exactly then logged (safe for huge norms)."""
    nm = field_norm_exact(a)
    if nm == 0:
        raise ValueError("log of the norm of zero")
    return math.log(abs(nm.numerator)) - math.log(nm.denominator)


def log_embedding(a: RingElement, precision: int = 53) -> np.ndarray:
    if a.is_zero():
        raise ValueError("log embedding of zero")
    return np.log(galois_embed(a, precision).abs())


def real_embedding(a: RingElement) -> np.ndarray:
    """sigma(a) viewed in R^{2n} as (Re, Im) blocks."""
    v = embed_coeffs(a.float_coeffs())
    return np.concatenate([v.real, v.imag])
