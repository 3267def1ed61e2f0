"""Orbit group, log-sine geometry, cyclotomic-unit log lattice and decode.

Orbit coordinates: position j stands for the conjugate pair of embeddings at
residues +-5^j mod 2^k. The real cyclotomic unit

    xi_a = zeta^{(1-a)/2} (1 - zeta^a) / (1 - zeta) = sum_{|i| <= (a-1)/2} zeta^i

has |sigma_b(xi_a)| = |sin(pi ab/2^k) / sin(pi b/2^k)|, so its folded log
vector at position i is z_{i+m} - z_i when a = orb(m). Half of that row is
exactly column G-m-1 of the error matrix (0-based), which is how sign vectors
attach to unit rows.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cyclotomic import (
    DEFAULT_PRECISION,
    RingElement,
    RingParams,
    galois_embed,
    log_abs_norm,
)


@dataclass(frozen=True)
class OrbitTable:
    k: int
    reps: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.reps)


def orbit_table(k: int) -> OrbitTable:
    if k < 3:
        raise ValueError("k must be >= 3")
    mod = 2**k
    reps, x = [], 1
    for _ in range(2 ** (k - 2)):
        reps.append(min(x, mod - x))
        x = x * 5 % mod
    return OrbitTable(k, tuple(reps))


def log_sine(k: int) -> np.ndarray:
    reps = np.array(orbit_table(k).reps, dtype=float)
    return np.log(2 * np.abs(np.sin(np.pi * reps / 2**k)))


@dataclass(frozen=True)
class ErrorMatrix:
    k: int
    M: np.ndarray
    offset: int = 1
    dft_convention: str = "forward unnormalized, inverse 1/|G|, cyclic group ordered by powers of 5"

    @property
    def G(self) -> int:
        return self.M.shape[0]

    @property
    def N_s(self) -> int:
        return self.M.shape[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "|G|", "N_s"])
        w.writerow([self.k, self.G, self.N_s])
        for row in self.M:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


@lru_cache(maxsize=None)
def _error_matrix(k: int, offset: int) -> np.ndarray:
    z = log_sine(k)
    G = z.size
    zf = np.fft.fft(z)
    cols = []
    for j in range(G - 1):
        e = np.zeros(G)
        e[(j + offset) % G] = 0.5
        cols.append(np.real(np.fft.ifft(zf * np.fft.fft(e))) - 0.5 * z)
    M = np.array(cols).T
    M.setflags(write=False)
    return M


def error_matrix(k: int, offset: int = 1) -> ErrorMatrix:
    """Offset 1 places the j-th column's half-weight at orbit position j+1.

    Offset 0 puts the first column at the identity position, where it is
    identically zero; it is kept only for comparison.
    """
    if k < 4:
        raise ValueError("k must be >= 4 for a nonempty sign problem")
    if offset not in (0, 1):
        raise ValueError("offset must be 0 or 1")
    return ErrorMatrix(k, _error_matrix(k, offset), offset)


def cyclotomic_unit(a: int, k: int | RingParams) -> RingElement:
    """xi_a = sum_{i=-(a-1)/2}^{(a-1)/2} zeta^i for odd a."""
    if a % 2 == 0:
        raise ValueError("a must be odd")
    h = (a - 1) // 2
    acc = RingElement.zero(k)
    for i in range(-h, h + 1):
        acc = acc + RingElement.zeta(i, k)
    return acc


@dataclass(frozen=True)
class UnitLogBasis:
    k: int
    rows: np.ndarray  # (G-1, G); row m-1 is the folded log of xi_{orb(m)}
    unit_indices: tuple[int, ...]  # the odd a with row m-1 <-> xi_a

    @property
    def G(self) -> int:
        return self.rows.shape[1]

    @property
    def rank(self) -> int:
        return self.rows.shape[0]

    def gram_det(self) -> float:
        return float(np.linalg.det(self.rows @ self.rows.T))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in self.rows:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


@lru_cache(maxsize=None)
def unit_log_basis(k: int) -> UnitLogBasis:
    z = log_sine(k)
    G = z.size
    rows = np.array([np.roll(z, -m) - z for m in range(1, G)]).reshape(G - 1, G)
    rows.setflags(write=False)
    return UnitLogBasis(k, rows, orbit_table(k).reps[1:])


def _pair_positions(k: int) -> np.ndarray:
    """Embedding index of residue orb(j) for each orbit position j."""
    return (np.array(orbit_table(k).reps) - 1) // 2


def fold(log_vec: np.ndarray, k: int) -> np.ndarray:
    """Average each conjugate pair of an n-long log vector into orbit coordinates."""
    log_vec = np.asarray(log_vec, dtype=float)
    n = 2 ** (k - 1)
    if log_vec.shape[-1] != n:
        raise ValueError(f"expected length {n}")
    pos = _pair_positions(k)
    partner = n - 1 - pos
    return 0.5 * (log_vec[..., pos] + log_vec[..., partner])


def unfold(folded: np.ndarray, k: int) -> np.ndarray:
    n = 2 ** (k - 1)
    out = np.empty(folded.shape[:-1] + (n,))
    pos = _pair_positions(k)
    out[..., pos] = folded
    out[..., n - 1 - pos] = folded
    return out


def project_h0(t: np.ndarray) -> np.ndarray:
    return t - t.mean(axis=-1, keepdims=True)


def unit_signs(signs, G: int) -> np.ndarray | None:
    """Reorder an error-matrix sign vector into unit-row order."""
    if signs is None:
        return None
    s = np.asarray(getattr(signs, "s", signs), dtype=int)
    if s.size != G - 1:
        raise ValueError(f"expected {G - 1} signs, got {s.size}")
    return s[::-1].copy()  # row m-1 pairs with column G-m-1


@dataclass(frozen=True)
class DecodeResult:
    exponents: np.ndarray
    residual: np.ndarray
    residual_inf: float
    coordinates: np.ndarray = field(repr=False)


def cdpr_decode(target, basis: UnitLogBasis, signs=None, tie_tol: float = 1e-9) -> DecodeResult:
    """Babai round-off of a folded log target against the unit rows.

    Without signs, half-integer ties round toward zero. With a sign vector
    (error-matrix column order), a coordinate whose fractional part is within
    ``tie_tol`` of 1/2 goes down when its sign is +1 and up when it is -1, so
    an all-ties target leaves the residual M s.
    """
    t = np.asarray(target, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("target has non-finite entries (zero embedding at this precision?)")
    t = project_h0(t)
    if t.shape != (basis.G,):
        raise ValueError(f"target must have length {basis.G}")
    B = basis.rows
    if np.linalg.matrix_rank(B) < basis.rank:
        raise np.linalg.LinAlgError("singular unit basis")
    coords = t @ np.linalg.pinv(B)
    fl = np.floor(coords)
    frac = coords - fl
    e = np.where(frac > 0.5, fl + 1, fl)
    tie = np.abs(frac - 0.5) <= tie_tol
    su = unit_signs(signs, basis.G)
    if su is None:
        toward_zero = np.where(coords > 0, fl, fl + 1)
        e = np.where(tie, toward_zero, e)
    else:
        e = np.where(tie, np.where(su > 0, fl, fl + 1), e)
    e = e.astype(np.int64)
    r = t - e @ B
    return DecodeResult(e, r, float(np.abs(r).max(initial=0.0)), coords)


def refine_exponents(target, basis: UnitLogBasis, e, max_rounds: int = 1000) -> np.ndarray:
    """Hill-climb on sum exp(2 (t - e B)) over moves e += +-1 on one or two coordinates.

    Round-off balances the log vector only to within the unit lattice's
    fundamental domain; this descent minimizes the Euclidean length it
    actually governs and never makes it worse.
    """
    t = np.asarray(target, dtype=float)
    B = basis.rows
    r = B.shape[0]
    moves = []
    for m in range(r):
        for a in (1, -1):
            v = np.zeros(r, dtype=np.int64)
            v[m] = a
            moves.append(v)
            for l in range(m + 1, r):
                for b in (1, -1):
                    w = v.copy()
                    w[l] = b
                    moves.append(w)
    moves = np.array(moves).reshape(-1, r)
    steps = moves @ B
    e = np.asarray(e, dtype=np.int64).copy()
    base = t - e @ B
    cur = np.log(np.sum(np.exp(2 * (base - base.max())))) + 2 * base.max()
    for _ in range(max_rounds):
        cand = base[None, :] - steps
        mx = cand.max(axis=1)
        vals = np.log(np.sum(np.exp(2 * (cand - mx[:, None])), axis=1)) + 2 * mx
        i = int(np.argmin(vals))
        if vals[i] >= cur - 1e-12:
            break
        cur = vals[i]
        e += moves[i]
        base = cand[i]
    return e


# generators ------------------------------------------------------------------


@lru_cache(maxsize=None)
def _units(k: int) -> tuple[tuple[RingElement, RingElement], ...]:
    out = []
    for a in orbit_table(k).reps[1:]:
        xi = cyclotomic_unit(a, k)
        out.append((xi, xi.inverse()))
    return tuple(out)


def unit_from_exponents(e, k: int) -> RingElement:
    """prod_m xi_{orb(m)}^{e_{m-1}}, exactly."""
    acc = RingElement.one(k)
    for (xi, xi_inv), em in zip(_units(k), e):
        em = int(em)
        if em:
            acc = acc * (xi if em > 0 else xi_inv) ** abs(em)
    return acc


def _times_zeta(num: tuple[int, ...]) -> tuple[int, ...]:
    return (-num[-1],) + num[:-1]


def canonical_torsion(a: RingElement) -> RingElement:
    """Representative of {+-zeta^m a} with the lexicographically largest coefficients."""
    best = None
    cur = a.num
    for _ in range(a.n):
        for cand in (cur, tuple(-c for c in cur)):
            if best is None or cand > best:
                best = cand
        cur = _times_zeta(cur)
    return RingElement(best, a.den, a.params)


def folded_log(a: RingElement, precision: int = DEFAULT_PRECISION) -> np.ndarray:
    if a.is_zero():
        raise ValueError("log of zero")
    return fold(np.log(galois_embed(a, precision).abs()), a.k)


@dataclass(frozen=True)
class ShortGeneratorResult:
    alpha: RingElement
    unit_exponents: np.ndarray
    improved: bool
    decode_failed: bool
    residual_inf: float


def short_generator(alpha0: RingElement, k: int | None = None, signs=None,
                    precision: int = DEFAULT_PRECISION, refine: bool = True) -> ShortGeneratorResult:
    """Strip a cyclotomic-unit factor from a generator.

    Returns alpha0 * u^{-1} with u = prod xi^{e} chosen by decoding the
    folded log embedding of alpha0. If the candidate is not shorter in
    sup-norm, alpha0 comes back unchanged with ``decode_failed`` set.
    """
    k = alpha0.k if k is None else k
    if alpha0.k != k:
        raise ValueError("k does not match the element")
    if alpha0.is_zero():
        raise ValueError("zero generator")
    basis = unit_log_basis(k)
    target = folded_log(alpha0, precision)
    dec = cdpr_decode(target, basis, signs)
    e = refine_exponents(target, basis, dec.exponents) if refine else dec.exponents
    u_inv = unit_from_exponents(-e, k)
    cand = canonical_torsion(alpha0 * u_inv)
    before = galois_embed(alpha0, 53).norm_inf()
    after = galois_embed(cand, 53).norm_inf()
    if after > before * (1 + 1e-12):
        return ShortGeneratorResult(alpha0, e, False, True, dec.residual_inf)
    return ShortGeneratorResult(cand, e, after < before * (1 - 1e-12), False, dec.residual_inf)


def balancing_unit(log_target: np.ndarray, k: int, signs=None, refine: bool = True
                   ) -> tuple[RingElement, np.ndarray, DecodeResult]:
    """Unit u whose folded log best matches an arbitrary n-long log target.

    Returns (u, exponents, round-off result); the exponents differ from the
    round-off ones only when ``refine`` moved them.
    """
    basis = unit_log_basis(k)
    target = fold(log_target, k)
    dec = cdpr_decode(target, basis, signs)
    e = refine_exponents(target, basis, dec.exponents) if refine else dec.exponents
    return unit_from_exponents(e, k), e, dec


def is_unit(q: RingElement) -> bool:
    return q.is_integral() and q.inverse().is_integral() and abs(log_abs_norm(q)) < 1e-9
