"""Diagonal module reduction: Gram-Schmidt, optional size reduction, one
short-generator step per GS line, shortest candidate out.

Line i uses the ideal J_i = R through the GS vector b~_i. The vector b~_i
itself is usually not in M; D_i, the least positive integer with
D_i b~_i in M, is folded into the generator so that the candidate
v_i = alpha'_i b~_i with alpha'_i = D_i u_i^{-1} is always a module element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .cyclotomic import DEFAULT_PRECISION, RingElement, galois_embed, trace
from .logunits import balancing_unit
from .modgs import (
    GramSchmidtData,
    ModuleVector,
    RankDeficiencyError,
    balance_constant,
    k_gram_schmidt,
    k_inner,
    log_covolume,
    size_reduce,
)
from .signopt import SignProblem, SignSolution, branch_and_bound, tower_greedy
from .splitntt import find_split_primes


@dataclass(frozen=True)
class LineReport:
    alpha_inf: float  # ||sigma(alpha'_i)||_inf
    J_norm_root: float  # |Nm J_i|^{1/n}
    v_norm: float  # ||sigma(v_i)||_2
    scale: int  # D_i
    unit_exponents: tuple[int, ...]
    decode_residual_inf: float
    decode_failed: bool

    def to_json_obj(self) -> dict:
        return {
            "alpha_inf": self.alpha_inf,
            "J_norm_root": self.J_norm_root,
            "v_norm": self.v_norm,
            "scale": self.scale,
            "unit_exponents": list(self.unit_exponents),
            "decode_residual_inf": self.decode_residual_inf,
            "decode_failed": self.decode_failed,
        }


@dataclass(frozen=True)
class ReductionReport:
    k: int
    d: int
    C: float
    per_line: tuple[LineReport, ...]
    output_index: int
    output_norm: float
    output: ModuleVector = field(repr=False)
    log_covolume: float
    gamma_line: float
    bound_rhs: float
    hermite_factor: float
    size_reduce_mode: str
    mu_sup_before: float
    mu_sup_after: float
    conditioning_only: bool
    member: bool

    @property
    def n(self) -> int:
        return 2 ** (self.k - 1)

    @property
    def covolume(self) -> float:
        return math.exp(self.log_covolume)

    @property
    def det_root(self) -> float:
        return math.exp(self.log_covolume / (self.d * self.n))

    def power_mean_holds(self, rel: float = 1e-9) -> bool:
        logs = [2 * math.log(L.v_norm) for L in self.per_line]
        return 2 * math.log(self.output_norm) <= sum(logs) / self.d + rel

    def bound_holds(self, rel: float = 1e-9) -> bool:
        return self.output_norm <= self.bound_rhs * (1 + rel)

    def checks_pass(self) -> bool:
        return self.member and not self.output.is_zero() and self.power_mean_holds() and self.bound_holds()

    def to_json_obj(self) -> dict:
        return {
            "k": self.k,
            "d": self.d,
            "C": self.C,
            "per_line": [L.to_json_obj() for L in self.per_line],
            "output_index": self.output_index,
            "output_norm": self.output_norm,
            "output": self.output.to_json_obj(),
            "log_covolume": self.log_covolume,
            "gamma_line": self.gamma_line,
            "bound_rhs": self.bound_rhs,
            "hermite_factor": self.hermite_factor,
            "size_reduce_mode": self.size_reduce_mode,
            "mu_sup_before": self.mu_sup_before,
            "mu_sup_after": self.mu_sup_after,
            "conditioning_only": self.conditioning_only,
            "member": self.member,
            "power_mean_holds": self.power_mean_holds(),
            "bound_holds": self.bound_holds(),
        }


def transition_matrix(data: GramSchmidtData) -> list[list[RingElement]]:
    """T with b~_i = sum_l T[i][l] b_l (lower unitriangular over K)."""
    d = data.d
    params = data.params
    zero, one = RingElement.zero(params), RingElement.one(params)
    T: list[list[RingElement]] = []
    for i in range(d):
        row = [one if l == i else zero for l in range(d)]
        for j in range(i):
            m = data.mu[i][j]
            row = [a - m * b for a, b in zip(row, T[j])]
        T.append(row)
    return T


def membership_scale(T_row: Sequence[RingElement]) -> int:
    return math.lcm(*(e.den for e in T_row))


def coefficients_in_basis(v: ModuleVector, data: GramSchmidtData) -> list[RingElement]:
    """The unique c in K^d with v = sum c_l b_l."""
    T = transition_matrix(data)
    a = [k_inner(v, g) * B.inverse() for g, B in zip(data.gs, data.gram_diag)]
    c = [RingElement.zero(data.params)] * data.d
    for i, ai in enumerate(a):
        c = [cl + ai * t for cl, t in zip(c, T[i])]
    return c


def verify_membership(v: ModuleVector, basis: Sequence[ModuleVector]) -> bool:
    data = k_gram_schmidt(basis)
    c = coefficients_in_basis(v, data)
    recon = basis[0].scale(c[0])
    for cl, b in zip(c[1:], basis[1:]):
        recon = recon + b.scale(cl)
    return recon == v and all(x.is_integral() for x in c)


def _mu_sup(data: GramSchmidtData) -> float:
    vals = [galois_embed(m, 53).norm_inf() for row in data.mu for m in row if m is not None]
    return max(vals, default=0.0)


@lru_cache(maxsize=None)
def sign_vector(k: int, method: str) -> SignSolution | None:
    if method == "none" or k < 4:
        return None
    prob = SignProblem.for_k(k)
    if method == "greedy":
        return tower_greedy(prob)
    if method == "milp":
        return branch_and_bound(prob)
    raise ValueError(f"unknown sign method {method!r}")


def _resolve_signs(k: int, signs) -> SignSolution | np.ndarray | None:
    if signs is None or isinstance(signs, str):
        return sign_vector(k, signs or "none")
    return signs


def reduce_module(
    basis: Sequence[ModuleVector],
    size_reduce_mode: str = "off",
    signs=None,
    precision: int = DEFAULT_PRECISION,
    crt_min_prime: int = 2,
    refine: bool = True,
) -> ReductionReport:
    basis = list(basis)
    d = len(basis)
    if d == 0:
        raise ValueError("empty basis")
    k = basis[0].params.k
    n = basis[0].params.n
    data = k_gram_schmidt(basis)
    mu_before = _mu_sup(data)
    mode = {"coordinate": "coord"}.get(size_reduce_mode, size_reduce_mode)
    if mode == "off":
        working, reduced = data, data
    elif mode == "coord":
        working = reduced = size_reduce(data, "coordinate")
    elif mode == "crt":
        primes = find_split_primes(n, max(1, n // 2), min_prime=crt_min_prime)
        reduced = size_reduce(data, "crt", primes)
        working = data  # conditioning-only output never feeds the lines
    else:
        raise ValueError(f"unknown size reduction mode {size_reduce_mode!r}")
    mu_after = _mu_sup(reduced)

    sv = _resolve_signs(k, signs)
    T = transition_matrix(working)
    lines: list[LineReport] = []
    candidates: list[ModuleVector] = []
    for i in range(d):
        B = working.gram_diag[i]
        D = membership_scale(T[i])
        sigma_B = galois_embed(B, precision).values
        log_target = 0.5 * np.log(np.array([float(abs(x)) for x in sigma_B]))
        u, e, dec = balancing_unit(log_target, k, sv, refine)
        trivial = RingElement.scalar(D, k)
        alpha = u.inverse() * D
        v_alpha = math.sqrt(trace(alpha * alpha.conj() * B))
        v_trivial = math.sqrt(trace(trivial * trivial * B))
        failed = v_alpha > v_trivial * (1 + 1e-12)
        if failed:
            alpha, v_norm = trivial, v_trivial
        else:
            v_norm = v_alpha
        candidates.append(working.gs[i].scale(alpha))
        lines.append(
            LineReport(
                alpha_inf=galois_embed(alpha, 53).norm_inf(),
                J_norm_root=1.0,
                v_norm=v_norm,
                scale=D,
                unit_exponents=tuple(int(x) for x in e),
                decode_residual_inf=dec.residual_inf,
                decode_failed=failed,
            )
        )

    idx = int(np.argmin([L.v_norm for L in lines]))
    out = candidates[idx]
    C = balance_constant(working)
    logcov = log_covolume(working)
    det_root = math.exp(logcov / (d * n))
    gamma = max(L.alpha_inf / L.J_norm_root for L in lines)
    out_norm = lines[idx].v_norm
    return ReductionReport(
        k=k,
        d=d,
        C=C,
        per_line=tuple(lines),
        output_index=idx,
        output_norm=out_norm,
        output=out,
        log_covolume=logcov,
        gamma_line=gamma,
        bound_rhs=math.sqrt(C) * gamma * det_root,
        hermite_factor=out_norm / (math.sqrt(d * n) * det_root),
        size_reduce_mode=mode,
        mu_sup_before=mu_before,
        mu_sup_after=mu_after,
        conditioning_only=reduced.conditioning_only,
        member=verify_membership(out, basis),
    )
