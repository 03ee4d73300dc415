"""Finite-dimensional convex-cone engine.

Farkas-type dichotomy LPs (either a direction ``u`` with ``Au`` nonzero and
nonnegative exists, or a strictly positive left kernel vector does),
nearest-point cone projection by active-set nonnegative least squares,
separating functionals, and a brute-force double-dual membership oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .lp import solve_lp
from .model import DEFAULT_TOL, ToleranceContext

__all__ = [
    "DichotomyResult",
    "ConeProjection",
    "InternalInconsistencyError",
    "MembershipError",
    "strict_positive_left_kernel",
    "flexible_direction",
    "dichotomy",
    "cone_project",
    "separating_functional",
    "dual_cone_generators",
    "double_dual_oracle",
    "nonneg_least_squares",
]


class InternalInconsistencyError(RuntimeError):
    """Both or neither dichotomy branch reported feasible: an engine bug."""


class MembershipError(ValueError):
    """The point lies inside the cone, so no separating functional exists."""


@dataclass(frozen=True)
class DichotomyResult:
    branch: str  # "flex_direction" | "positive_left_kernel"
    vector: np.ndarray
    certificate_residual: float

    @property
    def is_flex_direction(self) -> bool:
        return self.branch == "flex_direction"


@dataclass(frozen=True)
class ConeProjection:
    point: np.ndarray  # nearest point x* of the cone
    separating_normal: np.ndarray  # y = x* - w (zero when w is a member)
    coefficients: np.ndarray  # nonnegative generator weights with G @ coeff = x*
    distance: float

    @property
    def inside(self) -> bool:
        return bool(np.all(self.separating_normal == 0.0))


def _as_float_matrix(A: Sequence[Sequence]) -> np.ndarray:
    M = np.asarray(A, dtype=float)
    if M.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    return M


def strict_positive_left_kernel(
    A: Sequence[Sequence],
    tol: ToleranceContext = DEFAULT_TOL,
    exact: bool = False,
) -> Optional[np.ndarray]:
    """A row vector mu with mu >= 1 componentwise and mu A = 0, or None.

    Strict positivity is normalised to >= 1, which is equivalent up to
    scaling for a finite system.  Among feasible vectors the one of least
    total magnitude is returned (phase-2 objective), which makes the output
    canonical.  In exact mode ``mu A = 0`` holds exactly.
    """
    if exact:
        M = [[Fraction(x) for x in row] for row in A]
        m = len(M)
        k = len(M[0]) if m else 0
    else:
        Mf = _as_float_matrix(A)
        m, k = Mf.shape
    if m < 1 or k < 1:
        raise ValueError("matrix must have at least one row and one column")
    # mu = 1 + nu with nu >= 0:  nu A = -(1 A),  minimising sum(nu).
    if exact:
        A_eq = [[M[i][c] for i in range(m)] for c in range(k)]
        b_eq = [-sum((M[i][c] for i in range(m)), Fraction(0)) for c in range(k)]
        res = solve_lp([Fraction(1)] * m, A_eq=A_eq, b_eq=b_eq, exact=True)
        if not res.optimal:
            return None
        return np.array([Fraction(1) + v for v in res.x], dtype=object)
    A_eq = Mf.T
    b_eq = -Mf.T @ np.ones(m)
    res = solve_lp(np.ones(m), A_eq=A_eq, b_eq=b_eq, exact=False)
    if not res.optimal:
        return None
    return 1.0 + res.x


def flexible_direction(
    A: Sequence[Sequence],
    tol: ToleranceContext = DEFAULT_TOL,
    exact: bool = False,
) -> Optional[np.ndarray]:
    """A direction u with A u componentwise nonnegative and some slack >= 1.

    Normalised via the LP ``max sum(s)`` subject to ``A u >= s``,
    ``0 <= s <= 1`` (u free); the result is rescaled so the largest slack
    equals 1.  Returns None when only ``A u = 0`` is achievable.
    """
    if exact:
        M = [[Fraction(x) for x in row] for row in A]
        m = len(M)
        k = len(M[0]) if m else 0
    else:
        Mf = _as_float_matrix(A)
        m, k = Mf.shape
    if m < 1 or k < 1:
        raise ValueError("matrix must have at least one row and one column")
    # Variables: [u+ (k), u- (k), s (m)], all nonnegative.
    n_var = 2 * k + m
    if exact:
        zero, one = Fraction(0), Fraction(1)
        rows = []
        for i in range(m):
            row = [zero] * n_var
            for c in range(k):
                row[c] = -M[i][c]
                row[k + c] = M[i][c]
            row[2 * k + i] = one
            rows.append(row)  # s_i - A_i u <= 0
        for i in range(m):
            row = [zero] * n_var
            row[2 * k + i] = one
            rows.append(row)  # s_i <= 1
        cvec = [zero] * (2 * k) + [-one] * m
        res = solve_lp(cvec, A_ub=rows, b_ub=[zero] * m + [one] * m, exact=True)
        if not res.optimal or -res.objective == 0:
            return None
        u = np.array([res.x[c] - res.x[k + c] for c in range(k)], dtype=object)
        slacks = [sum((M[i][c] * u[c] for c in range(k)), Fraction(0)) for i in range(m)]
        top = max(slacks)
        return np.array([v / top for v in u], dtype=object)
    A_ub = np.zeros((2 * m, n_var))
    A_ub[:m, :k] = -Mf
    A_ub[:m, k : 2 * k] = Mf
    A_ub[:m, 2 * k :] = np.eye(m)
    A_ub[m:, 2 * k :] = np.eye(m)
    b_ub = np.concatenate([np.zeros(m), np.ones(m)])
    cvec = np.concatenate([np.zeros(2 * k), -np.ones(m)])
    res = solve_lp(cvec, A_ub=A_ub, b_ub=b_ub, exact=False)
    threshold = 1e-7 * max(1.0, float(np.abs(Mf).max()))
    if not res.optimal or -res.objective <= threshold:
        return None
    u = res.x[:k] - res.x[k : 2 * k]
    slacks = Mf @ u
    return u / slacks.max()


def dichotomy(
    A: Sequence[Sequence],
    tol: ToleranceContext = DEFAULT_TOL,
    exact: bool = False,
) -> DichotomyResult:
    """Exactly one of: a nonzero nonnegative image direction, or a strictly
    positive left kernel vector.  Both LPs are run and their verdicts must
    disagree; anything else raises :class:`InternalInconsistencyError`.
    """
    mu = strict_positive_left_kernel(A, tol, exact)
    u = flexible_direction(A, tol, exact)
    if (mu is None) == (u is None):
        state = "both" if mu is not None else "neither"
        raise InternalInconsistencyError(f"dichotomy branches report {state} feasible")
    Mf = _as_float_matrix([[float(x) for x in row] for row in A])
    if mu is not None:
        residual = float(np.abs(np.asarray(mu, dtype=float) @ Mf).max())
        return DichotomyResult("positive_left_kernel", mu, residual)
    image = Mf @ np.asarray(u, dtype=float)
    residual = float(max(0.0, -image.min()))
    return DichotomyResult("flex_direction", u, residual)


def nonneg_least_squares(
    G: np.ndarray,
    w: np.ndarray,
    dual_tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> np.ndarray:
    """Active-set nonnegative least squares: argmin |Gum - w| over lam >= 0.

    Starts from the clipped unconstrained coefficient fit of ``w`` and then
    runs the classic add/drop active-set descent with lowest-index
    tie-breaking, so the iteration is deterministic.
    """
    G = np.asarray(G, dtype=float)
    w = np.asarray(w, dtype=float).reshape(-1)
    g = G.shape[1]
    scale = max(1.0, float(np.abs(G).max()), float(np.abs(w).max()))
    if dual_tol is None:
        dual_tol = 1e-11 * scale * scale
    if max_iter is None:
        max_iter = 50 * (g + 1)

    def ls_on(support: np.ndarray) -> np.ndarray:
        lam = np.zeros(g)
        if support.any():
            sol, *_ = np.linalg.lstsq(G[:, support], w, rcond=None)
            lam[support] = sol
        return lam

    passive = np.zeros(g, dtype=bool)
    start, *_ = np.linalg.lstsq(G, w, rcond=None)
    passive[start > 0] = True
    lam = ls_on(passive)
    # Clip any negative components introduced by the warm start.
    guard = 0
    while np.any(lam[passive] <= 0.0) and passive.any():
        drop_candidates = np.flatnonzero(passive & (lam <= 0.0))
        passive[drop_candidates] = False
        lam = ls_on(passive)
        guard += 1
        if guard > g + 1:
            passive[:] = False
            lam = np.zeros(g)
            break

    for _ in range(max_iter):
        gradient = G.T @ (G @ lam - w)
        candidates = np.flatnonzero(~passive & (gradient < -dual_tol))
        if candidates.size == 0:
            return lam
        order = np.argsort(gradient[candidates], kind="stable")
        enter = int(candidates[order[0]])
        passive[enter] = True
        trial = ls_on(passive)
        inner_guard = 0
        while np.any(trial[passive] <= 0.0):
            inner_guard += 1
            if inner_guard > g + 1:
                break
            mask = passive & (trial <= 0.0) & (np.abs(lam - trial) > 0)
            idx = np.flatnonzero(mask)
            if idx.size == 0:
                break
            alphas = lam[idx] / (lam[idx] - trial[idx])
            alpha = float(alphas.min())
            lam = lam + alpha * (trial - lam)
            lam[lam < 0] = 0.0
            passive &= lam > 0.0
            trial = ls_on(passive)
        lam = trial
        lam[lam < 0] = 0.0
    return lam


def cone_project(
    generators: Sequence[Sequence[float]],
    w: Sequence[float],
    tol: ToleranceContext = DEFAULT_TOL,
) -> ConeProjection:
    """Nearest point of the cone generated by ``generators`` to ``w``.

    The optimality certificate is the right-angle identity
    ``<x* - w, x*> = 0`` together with ``<g_i, x* - w> >= 0`` for every
    generator.  When ``w`` lies in the cone the separating normal is
    exactly zero and the point is ``w`` itself.
    """
    G = np.asarray(generators, dtype=float).T  # columns are generators
    if G.ndim != 2 or G.shape[1] == 0:
        raise ValueError("at least one generator is required")
    wv = np.asarray(w, dtype=float).reshape(-1)
    lam = nonneg_least_squares(G, wv)
    x_star = G @ lam
    y = x_star - wv
    distance = float(np.linalg.norm(y))
    if distance <= tol.cert_tol:
        return ConeProjection(wv.copy(), np.zeros_like(wv), lam, 0.0)
    return ConeProjection(x_star, y, lam, distance)


def separating_functional(
    generators: Sequence[Sequence[float]],
    w: Sequence[float],
    tol: ToleranceContext = DEFAULT_TOL,
) -> np.ndarray:
    """Unit normal y with <w,y> < 0 <= <g_i,y> for all generators.

    Raises :class:`MembershipError` when ``w`` lies in the cone within
    tolerance (no separator exists).
    """
    proj = cone_project(generators, w, tol)
    if proj.inside or proj.distance <= tol.cert_tol:
        raise MembershipError("point lies in the cone; no separating functional")
    return proj.separating_normal / np.linalg.norm(proj.separating_normal)


def dual_cone_generators(
    generators: Sequence[Sequence[float]],
    dim: Optional[int] = None,
    tol: ToleranceContext = DEFAULT_TOL,
) -> list[np.ndarray]:
    """Generator description of the dual cone {y : <g_i, y> >= 0 for all i}.

    Brute-force extreme-ray enumeration over active subsets, valid at desk
    scale.  The lineality space contributes a +/- basis.  With no
    generators the dual is the whole space.
    """
    gens = [np.asarray(g, dtype=float) for g in generators]
    if dim is None:
        if not gens:
            raise ValueError("dimension required when there are no generators")
        dim = gens[0].size
    if not gens:
        basis = []
        for a in range(dim):
            e = np.zeros(dim)
            e[a] = 1.0
            basis.extend([e, -e])
        return basis
    G = np.vstack(gens)
    _, sigma, vt = np.linalg.svd(G)
    cutoff = max(1e-12, 1e-10 * (sigma[0] if sigma.size else 0.0))
    rank = int(np.sum(sigma > cutoff))
    lineality = vt[rank:]  # {y : G y = 0}
    V = vt[:rank]  # complement coordinates
    out: list[np.ndarray] = []
    for row in lineality:
        out.append(row.copy())
        out.append(-row.copy())
    dim_v = V.shape[0]
    if dim_v == 0:
        return out
    GV = G @ V.T  # generator rows in complement coordinates
    seen: list[np.ndarray] = []

    def consider(ray_v: np.ndarray) -> None:
        norm = np.linalg.norm(ray_v)
        if norm <= 1e-12:
            return
        ray_v = ray_v / norm
        if np.min(GV @ ray_v) < -1e-9:
            return
        for prev in seen:
            if np.linalg.norm(prev - ray_v) < 1e-9:
                return
        seen.append(ray_v)
        out.append(V.T @ ray_v)

    if dim_v == 1:
        consider(np.array([1.0]))
        consider(np.array([-1.0]))
        return out
    for subset in combinations(range(GV.shape[0]), dim_v - 1):
        sub = GV[list(subset)]
        _, s_sub, vt_sub = np.linalg.svd(sub)
        null_mask = np.concatenate([s_sub, np.zeros(dim_v - s_sub.size)]) <= max(
            1e-12, 1e-10 * (s_sub[0] if s_sub.size else 0.0)
        )
        null_dim = int(null_mask.sum())
        if null_dim != 1:
            continue
        ray = vt_sub[-1]
        consider(ray)
        consider(-ray)
    return out


def double_dual_oracle(
    generators: Sequence[Sequence[float]],
    trials: int,
    seed: int = 0,
    dim: Optional[int] = None,
    tol: ToleranceContext = DEFAULT_TOL,
) -> dict:
    """Sample points and check membership in C against the dual description.

    For each sample x the test asserts (x in C) == (<x, y> >= 0 for every
    generator y of the dual cone), the finite-dimensional double-dual
    equality.  Returns pass/fail counts; deterministic for a fixed seed.
    """
    gens = [np.asarray(g, dtype=float) for g in generators]
    if dim is None:
        if not gens:
            raise ValueError("dimension required when there are no generators")
        dim = gens[0].size
    if dim > 6 or len(gens) > 10:
        raise ValueError("oracle is restricted to dimension <= 6 and <= 10 generators")
    duals = dual_cone_generators(gens, dim=dim, tol=tol)
    rng = np.random.default_rng(seed)
    passed = failed = 0
    failures: list[dict] = []
    membership_tol = 1e-7

    def in_cone(x: np.ndarray) -> bool:
        if not gens:
            return bool(np.linalg.norm(x) <= membership_tol)
        proj = cone_project(gens, x, tol)
        return proj.distance <= membership_tol

    def dual_ok(x: np.ndarray) -> bool:
        if not duals:
            return True
        pairings = np.array([float(x @ y) for y in duals])
        return bool(pairings.min() >= -membership_tol)

    for t in range(trials):
        mode = t % 3
        if mode == 0 and gens:
            coeff = np.abs(rng.normal(size=len(gens)))
            x = np.sum([c * g for c, g in zip(coeff, gens)], axis=0)
        elif mode == 1:
            x = rng.normal(size=dim)
        else:
            x = -rng.normal(size=dim) if not gens else -np.sum(
                [abs(rng.normal()) * g for g in gens], axis=0
            )
        agree = in_cone(x) == dual_ok(x)
        if agree:
            passed += 1
        else:
            failed += 1
            failures.append({"sample": x.tolist(), "in_cone": in_cone(x), "dual_ok": dual_ok(x)})
    return {
        "trials": trials,
        "passed": passed,
        "failed": failed,
        "dual_generator_count": len(duals),
        "failures": failures[:5],
    }
