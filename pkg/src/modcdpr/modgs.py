"""K-linear Gram-Schmidt on free modules in K^d.

All GS arithmetic is exact over Q(zeta). The embedding-domain helpers at the
bottom run the same orthogonalization independently at each complex
embedding (sigma is a ring homomorphism, so K-GS becomes n complex GS
problems on C^d); they are used for bulk statistics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import permutations
from typing import Sequence

import numpy as np

from .cyclotomic import (
    ParameterMismatchError,
    RingElement,
    RingParams,
    embed_coeffs,
    log_abs_norm,
    trace,
)
from .splitntt import CrtBasis, coordinate_round, crt_scaled_round


class RankDeficiencyError(ValueError):
    pass


@dataclass(frozen=True)
class ModuleVector:
    entries: tuple[RingElement, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("empty module vector")
        p = self.entries[0].params
        if any(e.params != p for e in self.entries):
            raise ParameterMismatchError("entries must share ring parameters")

    @classmethod
    def of(cls, entries: Sequence[RingElement]) -> "ModuleVector":
        return cls(tuple(entries))

    @classmethod
    def from_int_arrays(cls, rows, k: int) -> "ModuleVector":
        return cls(tuple(RingElement.from_int_array(r, k) for r in rows))

    @classmethod
    def unit(cls, i: int, d: int, k: int) -> "ModuleVector":
        return cls(tuple(RingElement.one(k) if j == i else RingElement.zero(k) for j in range(d)))

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def params(self) -> RingParams:
        return self.entries[0].params

    def __add__(self, other: "ModuleVector") -> "ModuleVector":
        _check_dims(self, other)
        return ModuleVector(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "ModuleVector") -> "ModuleVector":
        _check_dims(self, other)
        return ModuleVector(tuple(a - b for a, b in zip(self.entries, other.entries)))

    def scale(self, alpha) -> "ModuleVector":
        return ModuleVector(tuple(alpha * e for e in self.entries))

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries)

    def embedding(self) -> np.ndarray:
        """sigma(v) as a (d, n) complex array."""
        return embed_coeffs(np.array([e.float_coeffs() for e in self.entries]))

    def sigma_norm2(self) -> float:
        """||sigma(v)||_2, computed exactly as sqrt(Tr <v,v>_K)."""
        return math.sqrt(trace(k_inner(self, self)))

    def sigma_norm_inf(self) -> float:
        return float(np.max(np.abs(self.embedding())))

    def real_embedding(self) -> np.ndarray:
        emb = self.embedding().ravel()
        return np.concatenate([emb.real, emb.imag])

    def to_json_obj(self) -> list:
        return [[f"{c.numerator}/{c.denominator}" for c in e.coeffs] for e in self.entries]


def _check_dims(a: ModuleVector, b: ModuleVector):
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    if a.params != b.params:
        raise ParameterMismatchError(f"k={a.params.k} vs k={b.params.k}")


def k_inner(a: ModuleVector, b: ModuleVector) -> RingElement:
    """<a, b>_K = sum_k a_k * conj(b_k)."""
    _check_dims(a, b)
    acc = RingElement.zero(a.params)
    for x, y in zip(a.entries, b.entries):
        acc = acc + x * y.conj()
    return acc


@dataclass(frozen=True)
class GramSchmidtData:
    basis: tuple[ModuleVector, ...]
    gs: tuple[ModuleVector, ...]
    mu: tuple[tuple[RingElement | None, ...], ...]
    gram_diag: tuple[RingElement, ...]
    conditioning_only: bool = False

    @property
    def d(self) -> int:
        return len(self.basis)

    @property
    def params(self) -> RingParams:
        return self.basis[0].params

    @property
    def n(self) -> int:
        return self.params.n


def k_gram_schmidt(basis: Sequence[ModuleVector]) -> GramSchmidtData:
    basis = tuple(basis)
    d = len(basis)
    for b in basis:
        if b.d != d:
            raise ValueError(f"expected {d} vectors in K^{d}")
        _check_dims(basis[0], b)
    gs: list[ModuleVector] = []
    gram: list[RingElement] = []
    gram_inv: list[RingElement] = []
    mu = [[None] * d for _ in range(d)]
    for j, b in enumerate(basis):
        v = b
        for i in range(j):
            m = k_inner(b, gs[i]) * gram_inv[i]
            mu[j][i] = m
            v = v - gs[i].scale(m)
        B = k_inner(v, v)
        if B.is_zero():
            raise RankDeficiencyError(f"basis vector {j} is K-dependent on the previous ones")
        gs.append(v)
        gram.append(B)
        gram_inv.append(B.inverse())
    return GramSchmidtData(basis, tuple(gs), tuple(tuple(r) for r in mu), tuple(gram))


def _restrict_to_R(c: RingElement) -> RingElement:
    return coordinate_round(c)


def size_reduce(
    data: GramSchmidtData,
    rounder: str = "coordinate",
    crt_basis: CrtBasis | None = None,
    crt_mode: str = "conditioning",
) -> GramSchmidtData:
    """Size-reduce: for j = 2..d, i = j-1..1, b_j -= Round(mu_ji) * b_i.

    ``rounder`` is "coordinate" (c in R, preserves the module) or "crt"
    (c in P^{-1}R). In CRT mode the result is flagged ``conditioning_only``
    because b_j - c*b_i generally leaves M; ``crt_mode="restrict"`` instead
    post-rounds c into R, which keeps the module but loses the rho <= 1 bound.
    Downstream GS data is fully recomputed after every step.
    """
    if rounder not in ("coordinate", "crt"):
        raise ValueError(f"unknown rounder {rounder!r}")
    if rounder == "crt" and crt_basis is None:
        raise ValueError("crt rounding needs a CrtBasis")
    if crt_mode not in ("conditioning", "restrict"):
        raise ValueError(f"unknown crt_mode {crt_mode!r}")

    basis = list(data.basis)
    current = data
    for j in range(1, data.d):
        for i in range(j - 1, -1, -1):
            m = current.mu[j][i]
            if rounder == "coordinate":
                c = coordinate_round(m)
            else:
                c = crt_scaled_round(m, crt_basis)
                if crt_mode == "restrict":
                    c = _restrict_to_R(c)
            if c.is_zero():
                continue
            basis[j] = basis[j] - basis[i].scale(c)
            current = k_gram_schmidt(basis)
    conditioning = data.conditioning_only or (rounder == "crt" and crt_mode == "conditioning")
    return replace(current, conditioning_only=conditioning)


def k_det(matrix: Sequence[Sequence[RingElement]]) -> RingElement:
    """Leibniz determinant over K (intended for d <= 4)."""
    d = len(matrix)
    params = matrix[0][0].params
    total = RingElement.zero(params)
    for perm in permutations(range(d)):
        inversions = sum(1 for a in range(d) for b in range(a + 1, d) if perm[a] > perm[b])
        term = RingElement.one(params)
        for r, c in enumerate(perm):
            term = term * matrix[r][c]
        total = total - term if inversions % 2 else total + term
    return total


def k_gram_matrix(basis: Sequence[ModuleVector]) -> list[list[RingElement]]:
    return [[k_inner(a, b) for b in basis] for a in basis]


def log_covolume(data: GramSchmidtData) -> float:
    """log det(sigma(M)) = (dn/2) log n + 1/2 sum log|Nm(B_i)|."""
    n, d = data.n, data.d
    return 0.5 * d * n * math.log(n) + 0.5 * sum(log_abs_norm(B) for B in data.gram_diag)


def covolume(data: GramSchmidtData) -> float:
    return math.exp(log_covolume(data))


def log_line_covolume(log_J_norm: float, B: RingElement) -> float:
    n = B.n
    return log_J_norm + 0.5 * n * math.log(n) + 0.5 * log_abs_norm(B)


def line_covolume(J_norm: float, B: RingElement) -> float:
    """det(sigma(J * b~)) = |Nm J| * n^{n/2} * |Nm B|^{1/2}."""
    if B.is_zero():
        raise RankDeficiencyError("zero Gram value")
    return math.exp(log_line_covolume(math.log(J_norm), B))


def line_balance(B: RingElement) -> float:
    """Tr(B) / (n |Nm B|^{1/n}); >= 1 by AM-GM for totally positive B."""
    n = B.n
    return float(trace(B)) / (n * math.exp(log_abs_norm(B) / n))


def balance_constant(data: GramSchmidtData) -> float:
    return max(line_balance(B) for B in data.gram_diag)


# embedding-domain route -----------------------------------------------------


def embedded_gram_diag(coeffs: np.ndarray) -> np.ndarray:
    """sigma_l(B_i) for integer bases given as a (d, d, n) coefficient array.

    Returns a (d, n) array. Row i of the input is basis vector b_i.
    """
    emb = embed_coeffs(coeffs)  # (d, d, n)
    vecs = np.moveaxis(emb, -1, 0)  # (n, d, d)
    d = vecs.shape[1]
    gs = []
    out = np.empty((d, vecs.shape[0]))
    for i in range(d):
        v = vecs[:, i, :].copy()
        for g, gn in gs:
            mu = np.sum(v * np.conj(g), axis=-1) / gn
            v -= mu[:, None] * g
        gn = np.sum(np.abs(v) ** 2, axis=-1)
        gs.append((v, gn))
        out[i] = gn
    return out


def balance_constant_embedded(coeffs: np.ndarray) -> float:
    gd = embedded_gram_diag(coeffs)
    n = gd.shape[1]
    ratios = gd.sum(axis=1) / (n * np.exp(np.mean(np.log(gd), axis=1)))
    return float(ratios.max())


# basis I/O ---------------------------------------------------------------------


def basis_to_json(basis: Sequence[ModuleVector]) -> str:
    return json.dumps({"k": basis[0].params.k, "d": len(basis), "vectors": [b.to_json_obj() for b in basis]})


def basis_from_json(text: str) -> list[ModuleVector]:
    obj = json.loads(text)
    k, d = int(obj["k"]), int(obj["d"])
    vectors = obj["vectors"]
    if len(vectors) != d:
        raise ValueError(f"expected {d} vectors, found {len(vectors)}")
    out = []
    for vec in vectors:
        if len(vec) != d:
            raise ValueError(f"each vector needs {d} entries")
        out.append(ModuleVector(tuple(RingElement.from_coeffs([Fraction(s) for s in e], k) for e in vec)))
    return out
