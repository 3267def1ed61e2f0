"""Balanced sign selection: minimize ||M s||_inf over s in {+-1}^N, sum(s) = +-1.

Every solver returns a SignSolution with a from-scratch discrepancy. The
minimax MILP uses x = (s + 1)/2 in [0, 1]; since M s = 2 M x - M 1, the LP
relaxation is

    min t   s.t.  -t <= 2 M x - M 1 <= t,   sum(x) = m,   0 <= x <= 1

for m in {floor(N/2), ceil(N/2)}. The two values of m are mirror images
under x -> 1 - x, so they share the same optimum.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .logunits import ErrorMatrix, error_matrix
from .lp import linprog_simplex

OPT_TOL = 1e-6
EXHAUSTIVE_MAX_N = 20


class BudgetExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class SignProblem:
    M: np.ndarray
    k: int | None = None

    @classmethod
    def for_k(cls, k: int, offset: int = 1) -> "SignProblem":
        return cls(error_matrix(k, offset).M, k)

    @classmethod
    def from_error_matrix(cls, em: ErrorMatrix) -> "SignProblem":
        return cls(em.M, em.k)

    @property
    def N_s(self) -> int:
        return self.M.shape[1]

    @property
    def G(self) -> int:
        return self.M.shape[0]

    def discrepancy(self, s) -> float:
        return float(np.abs(self.M @ np.asarray(s, dtype=float)).max(initial=0.0))


@dataclass(frozen=True)
class SignSolution:
    s: np.ndarray
    discrepancy: float
    status: str  # optimal | heuristic | bound-only
    lower_bound: float | None = None
    method: str = ""
    nodes: int = 0
    wall_time_ms: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def balance(self) -> int:
        return int(np.sum(self.s))

    @property
    def balanced(self) -> bool:
        return abs(self.balance) == 1

    def to_json_obj(self, prob: SignProblem) -> dict:
        return {
            "k": prob.k,
            "N_s": prob.N_s,
            "method": self.method,
            "status": self.status,
            "discrepancy": self.discrepancy,
            "lower_bound": self.lower_bound,
            "s": [int(v) for v in self.s],
            "wall_time_ms": self.wall_time_ms,
        }


def _solution(prob: SignProblem, s, status: str, method: str, t0: float, **kw) -> SignSolution:
    s = np.asarray(s, dtype=np.int64)
    if s.sum() < 0:
        s = -s  # norm is sign-symmetric; report the sum = +1 representative
    return SignSolution(
        s, prob.discrepancy(s), status, method=method, wall_time_ms=(time.perf_counter() - t0) * 1e3, **kw
    )


# exhaustive ------------------------------------------------------------------


def solve_exhaustive(prob: SignProblem, batch: int = 1 << 14) -> SignSolution:
    t0 = time.perf_counter()
    N = prob.N_s
    if N > EXHAUSTIVE_MAX_N:
        raise BudgetExceededError(f"N_s={N} exceeds the exhaustive budget of {EXHAUSTIVE_MAX_N}")
    M = prob.M
    plus = (N + 1) // 2
    best_v, best_s = math.inf, None
    combos = itertools.combinations(range(N), plus)
    while True:
        chunk = list(itertools.islice(combos, batch))
        if not chunk:
            break
        S = -np.ones((len(chunk), N))
        S[np.repeat(np.arange(len(chunk)), plus), np.array(chunk).ravel()] = 1.0
        vals = np.abs(S @ M.T).max(axis=1)
        i = int(np.argmin(vals))
        if vals[i] < best_v - 1e-15:
            best_v, best_s = float(vals[i]), S[i]
    return _solution(prob, best_s, "optimal", "exhaustive", t0, lower_bound=best_v)


# tower greedy ------------------------------------------------------------------


def _v2(j: int) -> int:
    return (j & -j).bit_length() - 1


def tower_order(N: int) -> list[int]:
    """0-based column order: coarsest tower level first, ascending within a level."""
    cols = range(1, N + 1)
    return [j - 1 for j in sorted(cols, key=lambda j: (-_v2(j), j))]


def tower_greedy(prob: SignProblem) -> SignSolution:
    """Fix signs one column at a time down the tower.

    Column j (1-based) enters at level k - v2(j). Each sign is chosen to
    minimize the running ||M s||_inf with the remaining signs still 0,
    trying +1 first and keeping -1 only on strict improvement.
    """
    t0 = time.perf_counter()
    M = prob.M
    e = np.zeros(prob.G)
    s = np.zeros(prob.N_s)
    for j in tower_order(prob.N_s):
        plus = np.abs(e + M[:, j]).max()
        minus = np.abs(e - M[:, j]).max()
        c = -1.0 if minus < plus - 1e-12 else 1.0
        s[j] = c
        e += c * M[:, j]
    return _solution(prob, s, "heuristic", "greedy", t0)


# local search ------------------------------------------------------------------


def _pnorm(E: np.ndarray, p: float) -> np.ndarray:
    A = np.abs(E)
    mx = A.max(axis=-1)
    if math.isinf(p):
        return mx
    safe = np.where(mx > 0, mx, 1.0)
    return mx * ((A / safe[..., None]) ** p).sum(axis=-1) ** (1.0 / p)


def _tabu_l2(M: np.ndarray, s: np.ndarray, iters: int, tenure: int, rng: np.random.Generator) -> np.ndarray:
    N = M.shape[1]
    Q = M.T @ M
    dq = np.diag(Q)
    e = M @ s
    best, best_v = s.copy(), float(e @ e)
    tabu = np.zeros(N, dtype=np.int64)
    for it in range(iters):
        g = M.T @ e
        d1 = -4 * s * g + 4 * dq  # change of ||e||^2 when flipping one sign
        pos = np.flatnonzero(s > 0)
        neg = np.flatnonzero(s < 0)
        D = d1[pos][:, None] + d1[neg][None, :] - 8 * Q[np.ix_(pos, neg)]
        ok = (tabu[pos][:, None] <= it) & (tabu[neg][None, :] <= it)
        D = np.where(ok, D, np.inf)
        move, val = None, np.inf
        if D.size:
            a, b = np.unravel_index(np.argmin(D), D.shape)
            if D[a, b] < val:
                move, val = (pos[a], neg[b]), D[a, b]
        total = s.sum()
        single = (np.abs(total - 2 * s) == 1) & (tabu <= it) & (d1 < val)
        if single.any():
            i = int(np.flatnonzero(single)[np.argmin(d1[single])])
            move = (i,)
        if move is None:
            break
        for i in move:
            s[i] = -s[i]
            tabu[i] = it + tenure + int(rng.integers(0, 3))
        e = M @ s
        v = float(e @ e)
        if v < best_v - 1e-12:
            best_v, best = v, s.copy()
    return best


def _descend(M: np.ndarray, s: np.ndarray, p: float) -> np.ndarray:
    """Best-improvement descent on ||M s||_p over balanced flips and swaps."""
    s = s.copy()
    while True:
        e = M @ s
        cur = float(_pnorm(e, p))
        E1 = e[None, :] - 2 * (s[:, None] * M.T)  # flip i
        total = s.sum()
        single_ok = np.abs(total - 2 * s) == 1
        best_v, move = cur, None
        if single_ok.any():
            v1 = _pnorm(E1, p)
            v1 = np.where(single_ok, v1, np.inf)
            i = int(np.argmin(v1))
            if v1[i] < best_v * (1 - 1e-12):
                best_v, move = float(v1[i]), (i,)
        pos = np.flatnonzero(s > 0)
        neg = np.flatnonzero(s < 0)
        if pos.size and neg.size:
            E2 = E1[pos][:, None, :] + 2 * M.T[neg][None, :, :]
            v2 = _pnorm(E2, p)
            a, b = np.unravel_index(np.argmin(v2), v2.shape)
            if v2[a, b] < best_v * (1 - 1e-12):
                best_v, move = float(v2[a, b]), (pos[a], neg[b])
        if move is None:
            return s
        for i in move:
            s[i] = -s[i]


def philox(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


def local_search(
    prob: SignProblem,
    seed: int = 0,
    schedule: Sequence[float] = (2, 8, 32, math.inf),
    restarts: int = 4,
    tabu_factor: int = 20,
) -> SignSolution:
    """L^p-homotopy local search from balanced random starts.

    The p = 2 stage is a tabu walk (flips that keep |sum s| = 1 plus +/-
    swaps) with incremental squared-norm deltas; later stages are plain
    best-improvement descent. The best result over ``restarts`` independent
    starts is returned.
    """
    t0 = time.perf_counter()
    M = prob.M
    N = prob.N_s
    best_s, best_v = None, math.inf
    for r in range(restarts):
        rng = philox(seed, r)
        s = np.array([1.0] * ((N + 1) // 2) + [-1.0] * (N // 2))
        rng.shuffle(s)
        for p in schedule:
            if p == 2:
                s = _tabu_l2(M, s, tabu_factor * N, max(3, N // 8), rng)
            else:
                s = _descend(M, s, p)
        v = prob.discrepancy(s)
        if v < best_v - 1e-12:
            best_v, best_s = v, s
    return _solution(prob, best_s, "heuristic", "local", t0)


# LP relaxation and branch-and-bound -------------------------------------------


def _node_lp(M: np.ndarray, fixed: dict[int, int], m: int) -> tuple[float, np.ndarray | None]:
    G, N = M.shape
    free = [j for j in range(N) if j not in fixed]
    rem = m - sum(fixed.values())
    if rem < 0 or rem > len(free):
        return math.inf, None
    xf = np.zeros(N)
    for j, v in fixed.items():
        xf[j] = v
    base = 2 * M @ xf - M.sum(axis=1)
    Mf = 2 * M[:, free]
    nf = len(free)
    if nf == 0:
        return float(np.abs(base).max()), xf
    ones = np.ones((G, 1))
    A = np.vstack([np.hstack([Mf, -ones]), np.hstack([-Mf, -ones])])
    b = np.concatenate([-base, base])
    c = np.zeros(nf + 1)
    c[-1] = 1.0
    A_eq = np.concatenate([np.ones(nf), [0.0]])[None, :]
    upper = np.concatenate([np.ones(nf), [np.inf]])
    res = linprog_simplex(c, A, b, A_eq, [rem], upper)
    if res.status == "infeasible":
        return math.inf, None
    if not res.success:
        raise RuntimeError(f"node LP ended with status {res.status}")
    x = xf.copy()
    x[free] = np.clip(res.x[:nf], 0.0, 1.0)
    return float(res.fun), x


def lp_lower_bound(prob: SignProblem) -> float:
    """Minimum of the LP relaxation over both balance levels sum(x) in {floor, ceil}(N/2)."""
    N = prob.N_s
    vals = [_node_lp(prob.M, {}, m)[0] for m in sorted({N // 2, (N + 1) // 2})]
    val = min(vals)
    if math.isinf(val):
        raise RuntimeError("LP relaxation infeasible")
    return val


def lp_interval_relaxation(prob: SignProblem) -> float:
    """LP value with the balance row relaxed to floor(N/2) <= sum(x) <= ceil(N/2).

    Kept for comparison: x = 1/2 is feasible here, so the value collapses to 0.
    """
    G, N = prob.M.shape
    M2 = 2 * prob.M
    base = -prob.M.sum(axis=1)
    ones = np.ones((G, 1))
    A = np.vstack([np.hstack([M2, -ones]), np.hstack([-M2, -ones])])
    row = np.concatenate([np.ones(N), [0.0]])
    A = np.vstack([A, row, -row])
    b = np.concatenate([-base, base, [(N + 1) // 2, -(N // 2)]])
    c = np.zeros(N + 1)
    c[-1] = 1.0
    return linprog_simplex(c, A, b, upper=np.concatenate([np.ones(N), [np.inf]])).fun


def branch_and_bound(
    prob: SignProblem,
    budget: int = 10_000,
    incumbent: SignSolution | None = None,
    seed: int = 0,
    use_symmetry: bool = True,
) -> SignSolution:
    """Best-first branch-and-bound on the minimax MILP.

    Branches on the most fractional x_j. With ``use_symmetry`` only the
    sum(x) = floor(N/2) side is searched; the other side is its mirror.
    A node is pruned when its LP bound is within OPT_TOL of the incumbent.
    """
    t0 = time.perf_counter()
    M = prob.M
    N = prob.N_s
    if incumbent is None:
        incumbent = local_search(prob, seed=seed)
    inc_v, inc_s = incumbent.discrepancy, incumbent.s.astype(float)
    levels = [N // 2] if use_symmetry else sorted({N // 2, (N + 1) // 2})
    heap: list = []
    counter = itertools.count()
    for m in levels:
        v, x = _node_lp(M, {}, m)
        if x is not None:
            heapq.heappush(heap, (v, next(counter), {}, m, x))
    root_bound = min((h[0] for h in heap), default=math.inf)
    nodes = 0
    while heap and nodes < budget:
        v, _, fixed, m, x = heapq.heappop(heap)
        nodes += 1
        if v >= inc_v - OPT_TOL:
            heap.clear()
            break
        frac = [j for j in range(N) if j not in fixed and 1e-9 < x[j] < 1 - 1e-9]
        if not frac:
            s = 2 * np.round(x) - 1
            sv = prob.discrepancy(s)
            if sv < inc_v:
                inc_v, inc_s = sv, s
            continue
        j = min(frac, key=lambda i: abs(x[i] - 0.5))
        for val in (0, 1):
            f = dict(fixed)
            f[j] = val
            cv, cx = _node_lp(M, f, m)
            if cx is not None and cv < inc_v - OPT_TOL:
                heapq.heappush(heap, (cv, next(counter), f, m, cx))
    if heap:
        lb = min(min(h[0] for h in heap), inc_v)
        status = "heuristic"
    else:
        lb = inc_v
        status = "optimal"
    return _solution(prob, inc_s, status, "bnb", t0, lower_bound=lb, nodes=nodes,
                     extra={"root_bound": root_bound})


def solve(prob: SignProblem, method: str, seed: int = 0, budget: int = 10_000) -> SignSolution:
    if method == "exhaustive":
        return solve_exhaustive(prob)
    if method == "greedy":
        return tower_greedy(prob)
    if method == "local":
        return local_search(prob, seed=seed)
    if method == "bnb":
        return branch_and_bound(prob, budget=budget, seed=seed)
    if method == "lp":
        t0 = time.perf_counter()
        lb = lp_lower_bound(prob)
        return SignSolution(np.zeros(0, dtype=np.int64), math.nan, "bound-only", lower_bound=lb, method="lp",
                            wall_time_ms=(time.perf_counter() - t0) * 1e3)
    raise ValueError(f"unknown method {method!r}")
