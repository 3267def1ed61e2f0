"""Totally split primes, negacyclic NTT over F_p, CRT, and the two rounders.

For p = 1 (mod 2n) the map a(x) -> (a(z^1), a(z^3), ..., a(z^{2n-1})) with
z a primitive 2n-th root of unity in F_p is a ring isomorphism
F_p[x]/(x^n+1) -> F_p^n. Output position f holds the evaluation at z^{2f+1},
the same order as the complex embedding.

Rounding ties go half away from zero. Any fixed tie rule keeps the
coefficientwise residual within 1/2 (resp. 1/(2P)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np
from sympy import isprime, primitive_root

from .cyclotomic import RingElement

PAPER_COMPAT_MIN_PRIME = 12289


class RangeOverflowError(ValueError):
    pass


def round_half_away(x: Fraction | float | int) -> int:
    if isinstance(x, int):
        return x
    x = Fraction(x)
    q, r = divmod(abs(x.numerator), x.denominator)
    if 2 * r >= x.denominator:
        q += 1
    return q if x >= 0 else -q


def symmetric_mod(x: int, m: int) -> int:
    """Representative of x mod m in [-(m-1)//2, m//2]."""
    r = x % m
    return r - m if r > m // 2 else r


def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@dataclass(frozen=True)
class SplitPrimeContext:
    p: int
    n: int
    zeta_p: int = field(default=0)

    def __post_init__(self):
        if self.n < 1 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two")
        if (self.p - 1) % (2 * self.n) or not isprime(self.p):
            raise ValueError(f"{self.p} is not a prime = 1 mod {2 * self.n}")
        if self.zeta_p == 0:
            g = primitive_root(self.p)
            object.__setattr__(self, "zeta_p", pow(g, (self.p - 1) // (2 * self.n), self.p))
        z = self.zeta_p
        if pow(z, 2 * self.n, self.p) != 1 or pow(z, self.n, self.p) != self.p - 1:
            raise ValueError("zeta_p is not a primitive 2n-th root of unity")

    @property
    def _dtype(self):
        # products of two residues must fit in int64
        return np.int64 if self.p < 2**31 else object

    def _powers(self, base: int) -> np.ndarray:
        out = [1] * self.n
        for i in range(1, self.n):
            out[i] = out[i - 1] * base % self.p
        return np.array(out, dtype=self._dtype)

    @cached_property
    def twist(self) -> np.ndarray:
        return self._powers(self.zeta_p)

    @cached_property
    def untwist(self) -> np.ndarray:
        inv = pow(self.zeta_p, -1, self.p)
        n_inv = pow(self.n, -1, self.p)
        return self._powers(inv) * n_inv % self.p

    @cached_property
    def omega_pows(self) -> np.ndarray:
        return self._powers(self.zeta_p * self.zeta_p % self.p)

    @cached_property
    def omega_inv_pows(self) -> np.ndarray:
        return self._powers(pow(self.zeta_p * self.zeta_p, -1, self.p))

    @cached_property
    def _rev(self) -> np.ndarray:
        return _bit_reverse(self.n)

    def _cyclic(self, a: np.ndarray, pows: np.ndarray) -> np.ndarray:
        p, n = self.p, self.n
        a = a[..., self._rev]
        lead = a.shape[:-1]
        size = 2
        while size <= n:
            half = size // 2
            w = pows[:: n // size][:half]
            blocks = a.reshape(lead + (n // size, size))
            u = blocks[..., :half]
            v = blocks[..., half:] * w % p
            a = np.concatenate([(u + v) % p, (u - v) % p], axis=-1).reshape(lead + (n,))
            size *= 2
        return a

    def ntt(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=self._dtype) % self.p
        return self._cyclic(a * self.twist % self.p, self.omega_pows)

    def intt(self, a_hat) -> np.ndarray:
        a_hat = np.asarray(a_hat, dtype=self._dtype) % self.p
        return self._cyclic(a_hat, self.omega_inv_pows) * self.untwist % self.p

    def negacyclic_mul(self, a, b) -> np.ndarray:
        return self.intt(self.ntt(a) * self.ntt(b) % self.p)


@dataclass(frozen=True)
class CrtBasis:
    contexts: tuple[SplitPrimeContext, ...]

    def __post_init__(self):
        ps = [c.p for c in self.contexts]
        if len(set(ps)) != len(ps):
            raise ValueError("primes must be distinct")
        if len({c.n for c in self.contexts}) > 1:
            raise ValueError("all contexts must share n")

    @classmethod
    def from_primes(cls, primes: Sequence[int], n: int) -> "CrtBasis":
        return cls(tuple(SplitPrimeContext(p, n) for p in primes))

    @property
    def primes(self) -> list[int]:
        return [c.p for c in self.contexts]

    @property
    def P(self) -> int:
        return math.prod(self.primes)

    @property
    def n(self) -> int:
        return self.contexts[0].n

    def combine(self, residues: Sequence[Sequence[int]]) -> list[int]:
        """CRT-combine per-prime residue vectors into symmetric ints mod P."""
        P = self.P
        out = [0] * self.n
        for ctx, res in zip(self.contexts, residues):
            Ps = P // ctx.p
            coef = Ps * pow(Ps, -1, ctx.p)
            for m, r in enumerate(res):
                out[m] += int(r) * coef
        return [symmetric_mod(x, P) for x in out]


def find_split_primes(n: int, target: int = 1, min_prime: int = 2) -> CrtBasis:
    """Smallest primes p = 1 (mod 2n), p >= min_prime, ascending until prod >= target."""
    if n < 1 or n & (n - 1):
        raise ValueError("n must be a power of two")
    if target < 1:
        raise ValueError("target must be >= 1")
    primes: list[int] = []
    prod = 1
    p = 2 * n + 1
    if min_prime > p:
        p += -(-(min_prime - p) // (2 * n)) * 2 * n
    while prod < target or not primes:
        if isprime(p):
            primes.append(p)
            prod *= p
        p += 2 * n
    return CrtBasis.from_primes(primes, n)


def coordinate_round(t: RingElement) -> RingElement:
    """Nearest element of R, coefficientwise."""
    return RingElement.from_int_array([round_half_away(c) for c in t.coeffs], t.params)


def crt_scaled_round(t: RingElement, basis: CrtBasis, coeff_bound: int = 2**62) -> RingElement:
    """Round t into P^{-1} R through the per-prime NTT path.

    P*t is rounded coefficientwise to integers a_m with |a_m| <= coeff_bound
    (else RangeOverflowError). Each a_m is split as q_m*P + r_m with r_m the
    symmetric residue; the residues travel through reduce / NTT /
    symmetric-lift / INTT / CRT for every prime, and the integer parts are
    carried exactly. The result is sum (q_m + r_m/P) zeta^m.
    """
    if basis.n != t.n:
        raise ValueError(f"CRT basis has n={basis.n}, element has n={t.n}")
    P = basis.P
    if P < 1 or P % 2 == 0:
        raise ValueError("P must be a positive odd integer")
    scaled = [round_half_away(c * P) for c in t.coeffs]
    worst = max(abs(a) for a in scaled)
    if worst > coeff_bound:
        raise RangeOverflowError(f"|P*t| coefficient {worst} exceeds bound {coeff_bound}")
    residues = [symmetric_mod(a, P) for a in scaled]
    quotients = [(a - r) // P for a, r in zip(scaled, residues)]
    per_prime = []
    for ctx in basis.contexts:
        hat = ctx.ntt([r % ctx.p for r in residues])
        lifted = [symmetric_mod(int(v), ctx.p) for v in hat]
        per_prime.append(ctx.intt([v % ctx.p for v in lifted]))
    recombined = basis.combine(per_prime)
    num = [q * P + r for q, r in zip(quotients, recombined)]
    return RingElement.from_int_array(num, t.params, den=P)
