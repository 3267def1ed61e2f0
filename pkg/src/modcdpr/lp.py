"""Dense two-phase tableau simplex.

Solves  min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  0 <= x <= upper.
Finite upper bounds become explicit rows. Entering variable by Dantzig's
rule, switching to Bland's rule after a run of degenerate pivots so the
method cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    fun: float
    status: str  # optimal | infeasible | unbounded | iteration_limit
    iterations: int

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


class _Tableau:
    def __init__(self, T: np.ndarray, basis: list[int], tol: float, max_iter: int):
        self.T = T
        self.basis = basis
        self.tol = tol
        self.max_iter = max_iter
        self.iterations = 0

    def run(self, ncols: int) -> str:
        """Optimize the objective row over the first ``ncols`` columns."""
        T, tol = self.T, self.tol
        degenerate_run = 0
        bland = False
        while True:
            if self.iterations >= self.max_iter:
                return "iteration_limit"
            d = T[-1, :ncols]
            if bland:
                cand = np.flatnonzero(d < -tol)
                if cand.size == 0:
                    return "optimal"
                j = int(cand[0])
            else:
                j = int(np.argmin(d))
                if d[j] >= -tol:
                    return "optimal"
            col = T[:-1, j]
            pos = col > tol
            if not pos.any():
                return "unbounded"
            ratios = np.full(col.shape, np.inf)
            ratios[pos] = T[:-1, -1][pos] / col[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + tol)
            r = int(min(ties, key=lambda i: self.basis[i]))
            _pivot(T, r, j)
            self.basis[r] = j
            self.iterations += 1
            if best <= tol:
                degenerate_run += 1
                if degenerate_run > 50:
                    bland = True
            else:
                degenerate_run = 0
                bland = False


def linprog_simplex(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    upper=None,
    tol: float = 1e-9,
    max_iter: int = 100_000,
) -> LPResult:
    c = np.asarray(c, dtype=float)
    nv = c.size
    A_ub = np.zeros((0, nv)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, nv)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, nv)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, nv)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if upper is not None:
        upper = np.broadcast_to(np.asarray(upper, dtype=float), (nv,))
        fin = np.flatnonzero(np.isfinite(upper))
        if fin.size:
            extra = np.zeros((fin.size, nv))
            extra[np.arange(fin.size), fin] = 1.0
            A_ub = np.vstack([A_ub, extra])
            b_ub = np.concatenate([b_ub, upper[fin]])

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    # columns: structural | slacks (one per ub row) | artificials | rhs
    needs_art = np.concatenate([b_ub < 0, np.ones(m_eq, dtype=bool)])
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size
    n_struct = nv + m_ub
    width = n_struct + n_art + 1
    T = np.zeros((m + 1, width))
    T[:m_ub, :nv] = A_ub
    T[:m_ub, nv:n_struct] = np.eye(m_ub)
    T[:m_ub, -1] = b_ub
    T[m_ub:m, :nv] = A_eq
    T[m_ub:m, -1] = b_eq
    neg = np.flatnonzero(T[:m, -1] < 0)
    T[neg] *= -1.0
    basis = [nv + i if i < m_ub else -1 for i in range(m)]
    for a, r in enumerate(art_rows):
        T[r, n_struct + a] = 1.0
        basis[r] = n_struct + a

    tab = _Tableau(T, basis, tol, max_iter)
    if n_art:
        T[-1] = 0.0
        T[-1, :n_struct] = -T[art_rows, :n_struct].sum(axis=0)
        T[-1, -1] = -T[art_rows, -1].sum()
        status = tab.run(n_struct + n_art)
        if status == "iteration_limit":
            return LPResult(np.full(nv, np.nan), np.nan, status, tab.iterations)
        if -T[-1, -1] > max(tol, 1e-7) * max(1.0, np.abs(T[:m, -1]).max(initial=0.0)):
            return LPResult(np.full(nv, np.nan), np.nan, "infeasible", tab.iterations)
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = []
        for r in range(m):
            if tab.basis[r] >= n_struct:
                cand = np.flatnonzero(np.abs(T[r, :n_struct]) > tol)
                if cand.size:
                    _pivot(T, r, int(cand[0]))
                    tab.basis[r] = int(cand[0])
                    keep.append(r)
            else:
                keep.append(r)
        T = np.vstack([T[keep][:, list(range(n_struct)) + [width - 1]], np.zeros((1, n_struct + 1))])
        tab.T = T
        tab.basis = [tab.basis[r] for r in keep]

    full_c = np.zeros(n_struct)
    full_c[:nv] = c
    cb = full_c[tab.basis]
    T[-1, :-1] = full_c - cb @ T[:-1, :-1]
    T[-1, -1] = -cb @ T[:-1, -1]
    status = tab.run(n_struct)
    x = np.zeros(n_struct)
    x[tab.basis] = T[:-1, -1]
    x = x[:nv]
    fun = float(c @ x) if status == "optimal" else np.nan
    return LPResult(x, fun, status, tab.iterations)
