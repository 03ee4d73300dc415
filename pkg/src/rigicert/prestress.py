"""Equilibrium stress spaces, stress matrices, stress-energy calculus,
prestress-stability certification, and second-order flex extension for
finite bar-joint frameworks.

The central objects are the left kernel of the rigidity matrix (the
equilibrium stresses), the symmetric stress matrix whose d-fold inflation
gives the energy quadratic form, and the reduced form of that quadratic on
the nontrivial flex basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .model import (
    DEFAULT_TOL,
    Framework,
    Member,
    MemberKind,
    StressField,
    ToleranceContext,
    VelocityField,
)
from .rigidity import (
    FlexBasis,
    _fix_signs,
    _mgs_reorthonormalize,
    bar_rigidity_matrix,
    flex_space,
    rank_threshold,
    trivial_flex_space,
)

__all__ = [
    "StressSpace",
    "StressMatrix",
    "SecondOrderFlex",
    "PSVerdict",
    "ExtensionResult",
    "WPSProbeEntry",
    "stress_space",
    "stress_matrix",
    "stress_energy",
    "energy_form",
    "energy_bilinear",
    "second_derivative_check",
    "reduced_flex_form",
    "prestress_stability",
    "wps_probe",
    "second_order_extend",
]


def _require_bars_only(framework: Framework) -> None:
    if any(m.kind is not MemberKind.BAR for m in framework.members):
        raise ValueError("operation expects a bar framework; route tensegrities through the tensegrity module")


def _as_velocity_array(framework: Framework, u) -> np.ndarray:
    arr = u.array if isinstance(u, VelocityField) else np.asarray(u, dtype=float)
    return arr.reshape(framework.n_vertices, framework.dimension)


@dataclass(frozen=True)
class StressSpace:
    """Orthonormal basis (in member coordinates) of {omega : omega R = 0}."""

    basis: np.ndarray  # (dim, m)
    dimension: int
    members: tuple[Member, ...]

    @property
    def dim(self) -> int:
        return self.dimension

    def fields(self) -> list[StressField]:
        return [StressField(tuple(float(x) for x in row)) for row in self.basis]

    def project(self, vec: np.ndarray) -> np.ndarray:
        if self.basis.size == 0:
            return np.zeros_like(vec)
        return self.basis.T @ (self.basis @ vec)


def stress_space(framework: Framework, tol: ToleranceContext = DEFAULT_TOL) -> StressSpace:
    """Left kernel of the bar rigidity matrix; dim = m - rank R."""
    _require_bars_only(framework)
    R = bar_rigidity_matrix(framework).matrix
    m = R.shape[0]
    if m == 0:
        return StressSpace(np.zeros((0, 0)), 0, framework.members)
    u_mat, sigma, _ = np.linalg.svd(R)
    cutoff = rank_threshold(sigma, R.shape, tol)
    rank = int(np.sum(sigma > cutoff))
    basis = u_mat[:, rank:].T
    basis = _fix_signs(basis)
    basis = _mgs_reorthonormalize(basis) if basis.size else basis
    return StressSpace(basis, m - rank, framework.members)


@dataclass(frozen=True)
class StressMatrix:
    """Symmetric n x n matrix with Omega_ij = -omega_ij and zero row sums."""

    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def quadratic(self, U: np.ndarray) -> float:
        """u^T (Omega x I_d) u for the stacked field with rows u_i."""
        return float(np.einsum("ia,ij,ja->", U, self.entries, U))

    def bilinear(self, U: np.ndarray, V: np.ndarray) -> float:
        return float(np.einsum("ia,ij,ja->", U, self.entries, V))


def stress_matrix(framework: Framework, stress: StressField) -> StressMatrix:
    if len(stress) != framework.member_count:
        raise ValueError("stress length does not match member count")
    n = framework.n_vertices
    omega = np.zeros((n, n))
    for w, m in zip(stress.values, framework.members):
        omega[m.i - 1, m.j - 1] += w
        omega[m.j - 1, m.i - 1] += w
    entries = -omega
    np.fill_diagonal(entries, omega.sum(axis=1))
    return StressMatrix(entries)


def stress_energy(
    framework: Framework,
    stress: StressField,
    placement: Optional[Sequence[Sequence]] = None,
    exact: bool = False,
):
    """sum over members of omega_ij |q_i - q_j|^2 at the given placement.

    With ``exact=True`` (rational stress and placement) the sum is a
    Fraction computed without rounding.
    """
    if len(stress) != framework.member_count:
        raise ValueError("stress length does not match member count")
    if exact:
        if stress.exact is None:
            raise ValueError("exact energy requires an exact stress")
        pts = placement if placement is not None else framework.rational_placements
        if pts is None:
            raise ValueError("exact energy requires rational placements")
        total = Fraction(0)
        for w, m in zip(stress.exact, framework.members):
            diff = [Fraction(a) - Fraction(b) for a, b in zip(pts[m.i - 1], pts[m.j - 1])]
            total += w * sum(c * c for c in diff)
        return total
    Q = np.asarray(placement, dtype=float) if placement is not None else framework.placement_array
    Q = Q.reshape(framework.n_vertices, framework.dimension)
    total = 0.0
    for w, m in zip(stress.values, framework.members):
        diff = Q[m.i - 1] - Q[m.j - 1]
        total += w * float(diff @ diff)
    return total


def energy_form(framework: Framework, stress: StressField, u, check_identity: bool = True) -> float:
    """sum omega_ij |u_i - u_j|^2; agrees with omega . (R(G,u) u) to 1e-10."""
    U = _as_velocity_array(framework, u)
    total = 0.0
    for w, m in zip(stress.values, framework.members):
        diff = U[m.i - 1] - U[m.j - 1]
        total += w * float(diff @ diff)
    if check_identity:
        # R(G,u): the member rows built from u in place of p.
        d = framework.dimension
        direction_rows = np.zeros((framework.member_count, d * framework.n_vertices))
        for r, m in enumerate(framework.members):
            diff = U[m.i - 1] - U[m.j - 1]
            direction_rows[r, d * (m.i - 1) : d * m.i] = diff
            direction_rows[r, d * (m.j - 1) : d * m.j] = -diff
        alt = float(np.dot(stress.array, direction_rows @ U.reshape(-1)))
        scale = max(1.0, abs(total), abs(alt))
        if abs(total - alt) > 1e-10 * scale:
            raise AssertionError(f"energy identity violated: {total} vs {alt}")
    return total


def energy_bilinear(framework: Framework, stress: StressField, u, v) -> float:
    """sum omega_ij <u_i - u_j, v_i - v_j>, the polarization of energy_form."""
    U = _as_velocity_array(framework, u)
    V = _as_velocity_array(framework, v)
    total = 0.0
    for w, m in zip(stress.values, framework.members):
        du = U[m.i - 1] - U[m.j - 1]
        dv = V[m.i - 1] - V[m.j - 1]
        total += w * float(du @ dv)
    return total


@dataclass(frozen=True)
class DerivativeReport:
    analytic: float
    finite_difference: float
    abs_error: float
    first_difference: float
    first_difference_ok: bool


def second_derivative_check(
    framework: Framework,
    stress: StressField,
    placement,
    u,
    h: Optional[float] = None,
    tol: ToleranceContext = DEFAULT_TOL,
    equilibrium: bool = True,
) -> DerivativeReport:
    """Central finite differences of the stress energy along the direction u.

    The second difference must match 2 * energy_form; for an equilibrium
    stress the first central difference at t = 0 vanishes.
    """
    if h is None:
        h = tol.fd_step
    Q = np.asarray(placement, dtype=float).reshape(framework.n_vertices, framework.dimension)
    U = _as_velocity_array(framework, u)
    e0 = stress_energy(framework, stress, Q)
    e_plus = stress_energy(framework, stress, Q + h * U)
    e_minus = stress_energy(framework, stress, Q - h * U)
    analytic = 2.0 * energy_form(framework, stress, U, check_identity=False)
    fd = float((e_plus - 2.0 * e0 + e_minus) / (h * h))
    first = float((e_plus - e_minus) / (2.0 * h))
    ok = (not equilibrium) or abs(first) <= 1e-6 * max(1.0, abs(e0))
    return DerivativeReport(float(analytic), fd, float(abs(fd - analytic)), first, bool(ok))


def reduced_flex_form(
    framework: Framework,
    stress: StressField,
    flex_fields: Union[FlexBasis, Sequence],
) -> np.ndarray:
    """Matrix M_ab = v_a^T (Omega x I_d) v_b over the given flex fields."""
    omega_matrix = stress_matrix(framework, stress)
    if isinstance(flex_fields, FlexBasis):
        fields = [row.reshape(framework.n_vertices, framework.dimension) for row in flex_fields.basis]
    else:
        fields = [_as_velocity_array(framework, f) for f in flex_fields]
    k = len(fields)
    M = np.zeros((k, k))
    for a in range(k):
        for b in range(a, k):
            M[a, b] = M[b, a] = omega_matrix.bilinear(fields[a], fields[b])
    return M


@dataclass(frozen=True)
class PSVerdict:
    state: str  # "certified_ps" | "certified_not_wps" | "unknown"
    stress: Optional[StressField]
    reduced_form: np.ndarray
    min_eigenvalue: float
    detail: str = ""

    @property
    def certified_ps(self) -> bool:
        return self.state == "certified_ps"


def _eig_min(M: np.ndarray) -> float:
    if M.size == 0:
        return math.inf
    return float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())


def prestress_stability(
    framework: Framework,
    tol: ToleranceContext = DEFAULT_TOL,
    search_budget: int = 32,
    seed: int = 0,
) -> PSVerdict:
    """Certify prestress stability when a single stress positively weights
    every nontrivial flex direction.

    First-order rigid frameworks are vacuously certified with the zero
    stress.  With no nonzero stress and a nonempty flex basis the framework
    cannot be weakly prestress stable.  A one-dimensional stress space is
    settled by an eigenvalue check of +/- the basis stress; otherwise the
    minimum eigenvalue of the stress-combination form is maximised by
    projected subgradient ascent over the unit sphere with seeded restarts,
    and any claimed certificate is re-verified by a fresh
    eigendecomposition.  Failure of the search is reported as "unknown",
    never as a refutation.
    """
    _require_bars_only(framework)
    basis = flex_space(framework, tol)
    threshold = 10 * tol.cert_tol
    if basis.dimension == 0:
        zero = StressField(tuple(0.0 for _ in framework.members))
        return PSVerdict("certified_ps", zero, np.zeros((0, 0)), math.inf, "first-order rigid")
    stresses = stress_space(framework, tol)
    if stresses.dimension == 0:
        return PSVerdict(
            "certified_not_wps",
            None,
            np.zeros((basis.dimension, basis.dimension)),
            0.0,
            "no nonzero equilibrium stress and flexes exist",
        )
    forms = [reduced_flex_form(framework, s, basis) for s in stresses.fields()]
    if stresses.dimension == 1:
        for sign in (1.0, -1.0):
            M = sign * forms[0]
            lam = _eig_min(M)
            if lam >= threshold:
                chosen = StressField(tuple(sign * x for x in stresses.basis[0]))
                return PSVerdict("certified_ps", chosen, M, lam, "one-dimensional stress space")
        return PSVerdict("unknown", None, forms[0], _eig_min(forms[0]), "single stress neither definite sign")

    k = stresses.dimension
    rng = np.random.default_rng(seed)

    def lam_min_of(coeff: np.ndarray) -> tuple[float, np.ndarray]:
        M = sum(c * F for c, F in zip(coeff, forms))
        vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
        return float(vals[0]), vecs[:, 0]

    best_coeff = None
    best_val = -math.inf
    starts = [np.eye(k)[i] for i in range(k)] + [-np.eye(k)[i] for i in range(k)]
    while len(starts) < max(2 * k, search_budget):
        starts.append(rng.normal(size=k))
    for start in starts[: max(2 * k, search_budget)]:
        coeff = np.asarray(start, dtype=float)
        coeff = coeff / np.linalg.norm(coeff)
        step = 1.0
        val, vec = lam_min_of(coeff)
        for it in range(200):
            grad = np.array([float(vec @ F @ vec) for F in forms])
            trial = coeff + step * grad
            norm = np.linalg.norm(trial)
            if norm == 0:
                break
            trial /= norm
            t_val, t_vec = lam_min_of(trial)
            if t_val > val:
                coeff, val, vec = trial, t_val, t_vec
            else:
                step *= 0.5
                if step < 1e-12:
                    break
        if val > best_val:
            best_val, best_coeff = val, coeff
    if best_coeff is not None and best_val >= threshold:
        M = sum(c * F for c, F in zip(best_coeff, forms))
        lam = _eig_min(M)  # fresh re-verification
        if lam >= threshold:
            chosen_vec = stresses.basis.T @ best_coeff
            chosen = StressField(tuple(float(x) for x in chosen_vec))
            return PSVerdict("certified_ps", chosen, M, lam, f"ascent over {k}-dimensional stress space")
    fallback = forms[0]
    return PSVerdict("unknown", None, fallback, _eig_min(fallback), "ascent did not reach a positive certificate")


@dataclass(frozen=True)
class WPSProbeEntry:
    witnessed: bool
    trivial: bool
    pairing_norm: float
    witness: Optional[StressField]
    energy_value: Optional[float]


def _geometric_rows_from_direction(framework: Framework, U: np.ndarray) -> np.ndarray:
    """R(G,u): the bar matrix with u substituted for the placement."""
    d = framework.dimension
    rows = np.zeros((framework.member_count, d * framework.n_vertices))
    for r, m in enumerate(framework.members):
        diff = U[m.i - 1] - U[m.j - 1]
        rows[r, d * (m.i - 1) : d * m.i] = diff
        rows[r, d * (m.j - 1) : d * m.j] = -diff
    return rows


def _check_flex(framework: Framework, U: np.ndarray, tol: ToleranceContext) -> None:
    R = bar_rigidity_matrix(framework).matrix
    if R.size == 0:
        return
    violation = float(np.abs(R @ U.reshape(-1)).max())
    scale = max(1.0, float(np.abs(framework.placement_array).max()) * float(np.abs(U).max()))
    if violation > 100 * tol.cert_tol * scale:
        raise ValueError(f"velocity field is not a flex: member-constraint violation {violation}")


def wps_probe(
    framework: Framework,
    flex_samples: Sequence,
    tol: ToleranceContext = DEFAULT_TOL,
) -> list[WPSProbeEntry]:
    """For each sample flex u, test whether some equilibrium stress gives the
    quadratic ``sum omega |u_i - u_j|^2`` a strictly positive value.

    The value is the pairing of R(G,u)u with the stress space; its
    projection norm is reported, a witness stress (projection direction) is
    attached when witnessed, and rigid-motion samples are flagged trivial.
    """
    _require_bars_only(framework)
    stresses = stress_space(framework, tol)
    trivial = trivial_flex_space(framework)
    out: list[WPSProbeEntry] = []
    for sample in flex_samples:
        U = _as_velocity_array(framework, sample)
        _check_flex(framework, U, tol)
        residual_vec = trivial.project_out(U.reshape(-1))
        is_trivial = float(np.linalg.norm(residual_vec)) <= 10 * tol.cert_tol * max(1.0, float(np.linalg.norm(U)))
        r = _geometric_rows_from_direction(framework, U) @ U.reshape(-1)
        proj = stresses.project(r) if stresses.dimension else np.zeros_like(r)
        norm = float(np.linalg.norm(proj))
        witnessed = norm >= 10 * tol.cert_tol and not is_trivial
        witness = None
        value = None
        if witnessed:
            direction = proj / norm
            witness = StressField(tuple(float(x) for x in direction))
            value = float(direction @ r)
        out.append(WPSProbeEntry(witnessed, is_trivial, norm, witness, value))
    return out


@dataclass(frozen=True)
class SecondOrderFlex:
    u: VelocityField
    a: VelocityField
    residual: float


@dataclass(frozen=True)
class ExtensionResult:
    flex: Optional[SecondOrderFlex]
    blocking_stress: Optional[StressField]
    blocking_pairing: Optional[float]
    residual: float

    @property
    def extends(self) -> bool:
        return self.flex is not None


def second_order_extend(
    framework: Framework,
    u,
    tol: ToleranceContext = DEFAULT_TOL,
) -> ExtensionResult:
    """Solve R(G,p) a = -R(G,u) u for an acceleration completing (u, a).

    When the least-squares residual is above tolerance no extension exists
    and the blocking equilibrium stress (the projection of R(G,u)u onto the
    stress space) is returned with its pairing value.
    """
    _require_bars_only(framework)
    U = _as_velocity_array(framework, u)
    _check_flex(framework, U, tol)
    R = bar_rigidity_matrix(framework).matrix
    rhs = -(_geometric_rows_from_direction(framework, U) @ U.reshape(-1))
    if R.size == 0:
        return ExtensionResult(SecondOrderFlex(VelocityField.from_array(U), VelocityField.from_array(np.zeros_like(U)), 0.0), None, None, 0.0)
    a_flat, *_ = np.linalg.lstsq(R, rhs, rcond=None)
    residual = float(np.linalg.norm(R @ a_flat - rhs))
    scale = max(1.0, float(np.abs(rhs).max()))
    # Threshold matches the wps_probe witness threshold: the least-squares
    # residual equals the stress-space projection norm of R(G,u)u.
    if residual <= 10 * tol.cert_tol * scale:
        accel = VelocityField.from_array(a_flat.reshape(framework.n_vertices, framework.dimension))
        return ExtensionResult(SecondOrderFlex(VelocityField.from_array(U), accel, residual), None, None, residual)
    stresses = stress_space(framework, tol)
    proj = stresses.project(-rhs)
    norm = float(np.linalg.norm(proj))
    if norm < 10 * tol.cert_tol:
        raise AssertionError("no extension but no blocking stress found; tolerance inconsistency")
    direction = proj / norm
    blocking = StressField(tuple(float(x) for x in direction))
    return ExtensionResult(None, blocking, float(direction @ (-rhs)), residual)
