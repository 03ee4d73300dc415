"""Dense two-phase primal simplex with Bland's rule.

Solves ``min c.x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``
in either float (numpy, vectorised) or exact :class:`fractions.Fraction`
arithmetic.  Bland's entering rule guarantees termination and every
tie-break is by lowest index, so runs are reproducible bit-for-bit.  The
exact path is meant for rational inputs at desk scale; the float path
handles the larger truncation LPs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

__all__ = ["LPResult", "LPError", "solve_lp"]


class LPError(RuntimeError):
    """Iteration cap exceeded; indicates a tolerance bug, not a valid state."""


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray]  # length n (original variables), dtype float or object
    objective: Optional[object]

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    """Simplex tableau over floats or Fractions with Bland pivoting."""

    def __init__(self, n_rows: int, width: int, exact: bool, max_iter: int):
        self.exact = exact
        self.max_iter = max_iter
        self.iterations = 0
        if exact:
            self.T = np.full((n_rows, width), Fraction(0), dtype=object)
            self.zero = Fraction(0)
            self.tol_rc = self.tol_piv = Fraction(0)
        else:
            self.T = np.zeros((n_rows, width), dtype=float)
            self.zero = 0.0
            self.tol_rc = self.tol_piv = 1e-9
        self.m = n_rows
        self.basis: list[int] = []
        self.obj = None

    def price_objective(self, full_cost) -> None:
        obj = np.array(full_cost + [self.zero], dtype=self.T.dtype)
        for i in range(self.m):
            cb = full_cost[self.basis[i]]
            if cb != self.zero:
                obj = obj - cb * self.T[i]
        self.obj = obj

    def _entering(self, allowed_end: int) -> int:
        if self.exact:
            for j in range(allowed_end):
                if self.obj[j] < 0:
                    return j
            return -1
        idx = np.flatnonzero(self.obj[:allowed_end] < -self.tol_rc)
        return int(idx[0]) if idx.size else -1

    def _leaving(self, enter: int) -> int:
        if self.exact:
            best = None
            leave = -1
            for i in range(self.m):
                a = self.T[i, enter]
                if a > 0:
                    ratio = self.T[i, -1] / a
                    if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[leave]):
                        best = ratio
                        leave = i
            return leave
        col = self.T[: self.m, enter]
        mask = col > self.tol_piv
        if not mask.any():
            return -1
        rows = np.flatnonzero(mask)
        ratios = self.T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best]
        basis_arr = np.array([self.basis[i] for i in ties])
        return int(ties[int(np.argmin(basis_arr))])

    def pivot(self, r: int, j: int) -> None:
        self.T[r] = self.T[r] / self.T[r, j]
        col = np.array(self.T[: self.m, j], copy=True)
        col[r] = self.zero
        if self.exact:
            for i in range(self.m):
                if col[i] != 0:
                    self.T[i] = self.T[i] - col[i] * self.T[r]
        else:
            self.T[: self.m] -= np.outer(col, self.T[r])
        if self.obj is not None and self.obj[j] != self.zero:
            self.obj = self.obj - self.obj[j] * self.T[r]
        self.basis[r] = j

    def run(self, allowed_end: int) -> str:
        while True:
            self.iterations += 1
            if self.iterations > self.max_iter:
                raise LPError(f"simplex iteration cap {self.max_iter} exceeded")
            enter = self._entering(allowed_end)
            if enter < 0:
                return "optimal"
            leave = self._leaving(enter)
            if leave < 0:
                return "unbounded"
            self.pivot(leave, enter)

    def drop_rows(self, keep: list[int]) -> None:
        self.T = self.T[keep]
        self.basis = [self.basis[i] for i in keep]
        self.m = len(keep)


def solve_lp(
    c: Sequence,
    A_ub: Optional[Sequence[Sequence]] = None,
    b_ub: Optional[Sequence] = None,
    A_eq: Optional[Sequence[Sequence]] = None,
    b_eq: Optional[Sequence] = None,
    exact: bool = False,
    max_iter: Optional[int] = None,
) -> LPResult:
    conv = (lambda x: Fraction(x)) if exact else float
    cost = [conv(x) for x in c]
    n = len(cost)
    ub_rows = [[conv(x) for x in row] for row in (A_ub if A_ub is not None else [])]
    eq_rows = [[conv(x) for x in row] for row in (A_eq if A_eq is not None else [])]
    b = [conv(x) for x in (list(b_ub) if b_ub is not None else [])]
    b += [conv(x) for x in (list(b_eq) if b_eq is not None else [])]

    m_ub, m_eq = len(ub_rows), len(eq_rows)
    m = m_ub + m_eq
    if len(b) != m:
        raise ValueError("right-hand side length does not match constraint rows")
    for row in ub_rows + eq_rows:
        if len(row) != n:
            raise ValueError("constraint row length does not match objective length")

    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    feas_tol = zero if exact else 1e-7 * max(1.0, max((abs(float(v)) for v in b), default=1.0))

    n_slack = m_ub
    art_start = n + n_slack
    art_of_row: list[Optional[int]] = [None] * m
    n_art = 0
    assembled = []
    for i in range(m):
        base = ub_rows[i] if i < m_ub else eq_rows[i - m_ub]
        row = list(base) + [zero] * n_slack
        if i < m_ub:
            row[n + i] = one
        if b[i] < zero:
            row = [-x for x in row]
            b[i] = -b[i]
            needs_art = True
        else:
            needs_art = i >= m_ub
        if needs_art:
            art_of_row[i] = n_art
            n_art += 1
        assembled.append(row)

    width = art_start + n_art + 1
    if max_iter is None:
        max_iter = 2000 + 40 * (m + width)
    tab = _Tableau(m, width, exact, max_iter)
    for i in range(m):
        for j, v in enumerate(assembled[i]):
            tab.T[i, j] = v
        tab.T[i, -1] = b[i]
        a = art_of_row[i]
        if a is not None:
            tab.T[i, art_start + a] = one
            tab.basis.append(art_start + a)
        else:
            tab.basis.append(n + i)

    if n_art:
        tab.price_objective([zero] * art_start + [one] * n_art)
        status = tab.run(width - 1)
        infeasibility = -tab.obj[-1]
        if status != "optimal" or infeasibility > feas_tol:
            return LPResult("infeasible", None, None)
        # Drive basic artificials out, or drop redundant rows.
        keep = []
        for i in range(tab.m):
            if tab.basis[i] >= art_start:
                target = -1
                for j in range(art_start):
                    v = tab.T[i, j]
                    if v > tab.tol_piv or v < -tab.tol_piv:
                        target = j
                        break
                if target >= 0:
                    tab.pivot(i, target)
                    keep.append(i)
            else:
                keep.append(i)
        if len(keep) != tab.m:
            tab.drop_rows(keep)

    tab.price_objective(list(cost) + [zero] * (n_slack + n_art))
    status = tab.run(art_start)
    if status == "unbounded":
        return LPResult("unbounded", None, None)

    x_full = [zero] * art_start
    for i in range(tab.m):
        if tab.basis[i] < art_start:
            x_full[tab.basis[i]] = tab.T[i, -1]
    x = x_full[:n]
    objective = sum((ci * xi for ci, xi in zip(cost, x)), zero)
    if exact:
        return LPResult("optimal", np.array(x, dtype=object), objective)
    return LPResult("optimal", np.asarray(x, dtype=float), float(objective))
