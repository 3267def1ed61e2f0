"""Experiment drivers: CBD sampling, balance statistics, discrepancy table,
covering-radius probes, a small SVP oracle and the ML-KEM bookkeeping."""

from __future__ import annotations

import csv
import io
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .cyclotomic import RingElement, RingParams, embed_coeffs
from .modgs import ModuleVector, balance_constant_embedded
from .signopt import (
    SignProblem,
    branch_and_bound,
    local_search,
    lp_lower_bound,
    philox,
    solve_exhaustive,
    tower_greedy,
)
from .splitntt import round_half_away

TABLE1_HEADER = ["k", "n", "mean_C", "p99_C", "min_C", "trials"]
TABLE2_HEADER = ["k", "|G|", "N_s", "LP bound", "MILP delta*", "Tower greedy", "Local search", "status"]


@dataclass
class ExperimentConfig:
    ks: list[int] = field(default_factory=lambda: [6, 7, 8, 9, 10])
    d: int = 4
    eta: int = 2
    trials: int = 1000
    seed: int = 0
    output: str | None = None
    paper_compat: bool = False
    jobs: int = 1
    timing: bool = False
    bnb_budget: int = 10_000

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.eta < 1:
            raise ValueError("eta must be >= 1")
        if self.paper_compat and self.trials < 10_000:
            self.trials = 10_000


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return philox(seed, trial)


def cbd_coeffs(shape, eta: int, rng: np.random.Generator) -> np.ndarray:
    bits = rng.integers(0, 2, size=(2, eta) + tuple(np.atleast_1d(shape)), dtype=np.int8)
    return (bits[0].sum(axis=0) - bits[1].sum(axis=0)).astype(np.int64)


def cbd_sample(params: RingParams | int, d: int, eta: int, rng: np.random.Generator) -> list[ModuleVector]:
    params = params if isinstance(params, RingParams) else RingParams(params)
    coeffs = cbd_coeffs((d, d, params.n), eta, rng)
    return [ModuleVector.from_int_arrays(row, params.k) for row in coeffs]


# balance statistics -----------------------------------------------------------------------


def _balance_trials(args) -> np.ndarray:
    k, d, eta, seed, start, stop = args
    n = 2 ** (k - 1)
    out = np.empty(stop - start)
    for i, t in enumerate(range(start, stop)):
        rng = trial_rng(seed * 1000 + k, t)
        out[i] = balance_constant_embedded(cbd_coeffs((d, d, n), eta, rng))
    return out


def balance_samples(k: int, d: int, eta: int, trials: int, seed: int, jobs: int = 1) -> np.ndarray:
    if jobs <= 1:
        return _balance_trials((k, d, eta, seed, 0, trials))
    edges = np.linspace(0, trials, jobs + 1).astype(int)
    chunks = [(k, d, eta, seed, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
    with ProcessPoolExecutor(jobs) as ex:
        return np.concatenate(list(ex.map(_balance_trials, chunks)))


def table1_experiment(config: ExperimentConfig) -> list[dict]:
    rows = []
    for k in config.ks:
        C = balance_samples(k, config.d, config.eta, config.trials, config.seed, config.jobs)
        rows.append(
            {
                "k": k,
                "n": 2 ** (k - 1),
                "mean_C": float(C.mean()),
                "p99_C": float(np.percentile(C, 99)),
                "min_C": float(C.min()),
                "trials": config.trials,
            }
        )
    return rows


# sign-selection table -----------------------------------------------------------------------


def table2_row(k: int, seed: int = 0, budget: int = 10_000, timing: bool = False) -> dict:
    t0 = time.perf_counter()
    prob = SignProblem.for_k(k)
    lb = lp_lower_bound(prob)
    greedy = tower_greedy(prob)
    local = local_search(prob, seed=seed)
    if prob.N_s <= 15:
        opt = solve_exhaustive(prob)
    else:
        opt = branch_and_bound(prob, budget=budget, incumbent=local)
    row = {
        "k": k,
        "|G|": prob.G,
        "N_s": prob.N_s,
        "LP bound": round(lb, 4),
        "MILP delta*": round(opt.discrepancy, 4),
        "Tower greedy": round(greedy.discrepancy, 4),
        "Local search": round(local.discrepancy, 4),
        "status": opt.status,
    }
    if timing:
        row["time_s"] = round(time.perf_counter() - t0, 2)
    return row


def _table2_job(args):
    return table2_row(*args)


def table2_experiment(config: ExperimentConfig) -> list[dict]:
    args = [(k, config.seed, config.bnb_budget, config.timing) for k in config.ks]
    if config.jobs <= 1:
        return [table2_row(*a) for a in args]
    with ProcessPoolExecutor(config.jobs) as ex:
        return list(ex.map(_table2_job, args))


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


# covering radius probes -------------------------------------------------------------


def worst_case_target(k: int) -> RingElement:
    n = 2 ** (k - 1)
    return RingElement.from_int_array([1] * n, k, den=2)


def _sup(coeffs) -> float:
    return float(np.abs(embed_coeffs(np.asarray(coeffs, dtype=float))).max())


def covering_probe(k: int, strategy: str = "coordinate", retries: int = 100, seed: int = 0) -> dict:
    """Round t = 1/2 sum zeta^m into R and report ||sigma(t - c)||_inf.

    ``coordinate`` rounds every coefficient (half away from zero);
    ``randomized`` rounds each 1/2 up or down by an independent fair coin
    and keeps the best of ``retries`` draws; ``exhaustive`` scans
    c in {-1, 0, 1, 2}^n (n <= 8).
    """
    n = 2 ** (k - 1)
    t = np.full(n, 0.5)
    if strategy == "coordinate":
        c = np.array([round_half_away(x) for x in (0.5,) * n], dtype=float)
        achieved = _sup(t - c)
        tries = 1
    elif strategy == "randomized":
        rng = philox(seed, k)
        achieved, tries = math.inf, 0
        limit = math.sqrt(n * math.log(8 * n))
        for tries in range(1, retries + 1):
            c = rng.integers(0, 2, n).astype(float)
            achieved = min(achieved, _sup(t - c))
            if achieved <= limit:
                break
    elif strategy == "exhaustive":
        if n > 8:
            raise ValueError("exhaustive probe is limited to n <= 8")
        C = np.array(list(itertools.product([-1, 0, 1, 2], repeat=n)), dtype=float)
        vals = np.abs(embed_coeffs(t[None, :] - C)).max(axis=1)
        achieved = float(vals.min())
        tries = len(C)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return {
        "k": k,
        "n": n,
        "strategy": strategy,
        "achieved_inf_norm": achieved,
        "lower_bound": math.sqrt(n) / 2,
        "upper_bound": math.sqrt(n * math.log(8 * n)),
        "tries": tries,
    }


# SVP oracle --------------------------------------------------------------------------


class DimensionBudgetError(ValueError):
    pass


def lll_reduce(B: np.ndarray, delta: float = 0.99) -> np.ndarray:
    """Textbook LLL on the rows of a real basis (float, small dimension)."""
    B = np.array(B, dtype=float)
    m = B.shape[0]

    def gso(B):
        Bs = np.zeros_like(B)
        mu = np.zeros((m, m))
        for i in range(m):
            v = B[i].copy()
            for j in range(i):
                mu[i, j] = B[i] @ Bs[j] / (Bs[j] @ Bs[j])
                v -= mu[i, j] * Bs[j]
            Bs[i] = v
        return Bs, mu

    Bs, mu = gso(B)
    i = 1
    while i < m:
        for j in range(i - 1, -1, -1):
            q = round(mu[i, j])
            if q:
                B[i] -= q * B[j]
                Bs, mu = gso(B)
        if Bs[i] @ Bs[i] >= (delta - mu[i, i - 1] ** 2) * (Bs[i - 1] @ Bs[i - 1]):
            i += 1
        else:
            B[[i - 1, i]] = B[[i, i - 1]]
            Bs, mu = gso(B)
            i = max(i - 1, 1)
    return B


def svp_enum(basis: np.ndarray, bound: float | None = None, max_dim: int = 20) -> tuple[float, np.ndarray]:
    """Shortest nonzero vector of the lattice spanned by the rows (Fincke-Pohst)."""
    B = np.atleast_2d(np.asarray(basis, dtype=float))
    m = B.shape[0]
    if m > max_dim:
        raise DimensionBudgetError(f"dimension {m} exceeds {max_dim}")
    B = lll_reduce(B)
    G = B @ B.T
    # G = R^T R with R upper triangular; q_ii = r_ii^2, q_ij = r_ij / r_ii
    R = np.linalg.cholesky(G).T
    q_diag = np.diag(R) ** 2
    Q = R / np.diag(R)[:, None]
    best = min(float(np.sqrt(G[i, i])) for i in range(m))
    best_x = np.eye(m)[int(np.argmin(np.diag(G)))]
    if bound is not None:
        best = min(best, bound)
    r2 = best**2 * (1 + 1e-12)
    x = np.zeros(m)

    def rec(i: int, partial: float):
        nonlocal r2, best_x
        center = -sum(Q[i, j] * x[j] for j in range(i + 1, m))
        radius = math.sqrt(max(r2 - partial, 0.0) / q_diag[i])
        for xi in range(math.ceil(center - radius - 1e-12), math.floor(center + radius + 1e-12) + 1):
            x[i] = xi
            val = partial + q_diag[i] * (xi - center) ** 2
            if val > r2:
                continue
            if i == 0:
                if val > 1e-9 and val < r2 * (1 - 1e-12):
                    r2 = val
                    best_x = x.copy()
            else:
                rec(i - 1, val)
        x[i] = 0

    rec(m - 1, 0.0)
    v = best_x @ B
    return float(np.linalg.norm(v)), v


def module_real_basis(basis: list[ModuleVector]) -> np.ndarray:
    """Rows are the real embeddings of zeta^m b_i (a Z-basis of sigma(M))."""
    rows = []
    for b in basis:
        k = b.params.k
        for m in range(b.params.n):
            z = RingElement.zeta(m, k)
            rows.append(ModuleVector(tuple(z * e for e in b.entries)).real_embedding())
    return np.array(rows)


# security bookkeeping ------------------------------------------------------------------


def security_accounting(C: float = 1.08, d: int = 3, n: int = 256, log2_gamma_cdpr: float = 128.0,
                        q: int = 3329, sigma: float = 1.0, k: int = 9) -> dict:
    log2_hf = 0.5 * math.log2(C / (d * n)) + log2_gamma_cdpr
    log2_needed = math.log2(q / sigma)
    return {
        "log2_hermite_factor": log2_hf,
        "log2_required_gamma": log2_needed,
        "log2_security_gap": log2_hf - log2_needed,
        "log2_sqrt_nk": 0.5 * math.log2(n * k),
        "module_factor": math.sqrt(C),
    }


def config_dict(config: ExperimentConfig) -> dict:
    return asdict(config)
