"""First-order rigidity of finite tensegrities, certified two independent ways.

The direct route tests the flex cone itself (kernel flexes of the bar
closure plus strict cone directions); the Roth-Whiteley route combines bar
rigidity with a proper equilibrium stress.  The two verdicts are asserted
to agree on every input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .cones import InternalInconsistencyError, flexible_direction, strict_positive_left_kernel
from .model import (
    DEFAULT_TOL,
    Member,
    MemberKind,
    StressField,
    Tensegrity,
    ToleranceContext,
    VelocityField,
)
from .rigidity import (
    bar_first_order_rigidity,
    tensegrity_rigidity_matrix,
    trivial_flex_space,
)

__all__ = [
    "RigidityCertificate",
    "MemberSlack",
    "SlackReport",
    "first_order_rigidity_direct",
    "proper_equilibrium_stress",
    "roth_whiteley_certify",
    "member_slack",
    "equilibrium_residual",
]

_EXACT_SIZE_LIMIT = 200  # columns of the rigidity matrix; beyond this stay in floats


@dataclass(frozen=True)
class RigidityCertificate:
    verdict: str  # "first_order_rigid" | "flexible"
    method: str  # "direct_cone" | "roth_whiteley"
    bar_rigid: bool
    proper_stress: Optional[StressField]
    witness_flex: Optional[VelocityField]
    stress_residual: Optional[float] = None
    witness_min_slack: Optional[float] = None
    witness_nontriviality: Optional[float] = None

    @property
    def rigid(self) -> bool:
        return self.verdict == "first_order_rigid"


@dataclass(frozen=True)
class MemberSlack:
    member: Member
    raw: float  # (p_i - p_j) . (u_i - u_j)
    signed: float  # sign(kind) * raw; nonnegative on flexes


@dataclass(frozen=True)
class SlackReport:
    slacks: tuple[MemberSlack, ...]
    is_flex: bool

    def raw_values(self) -> np.ndarray:
        return np.array([s.raw for s in self.slacks])

    def signed_values(self) -> np.ndarray:
        return np.array([s.signed for s in self.slacks])


def _use_exact(t: Tensegrity, exact: Optional[bool]) -> bool:
    if exact is not None:
        return exact
    return t.framework.is_rational and t.dimension * t.n_vertices <= _EXACT_SIZE_LIMIT


def equilibrium_residual(t: Tensegrity, stress: StressField) -> float:
    """Max norm over vertices of sum_j omega_ij (p_i - p_j)."""
    P = t.placement_array
    res = np.zeros_like(P)
    for w, m in zip(stress.values, t.members):
        diff = P[m.i - 1] - P[m.j - 1]
        res[m.i - 1] += w * diff
        res[m.j - 1] -= w * diff
    return float(np.abs(res).max()) if res.size else 0.0


def member_slack(t: Tensegrity, u: Union[VelocityField, np.ndarray], tol: ToleranceContext = DEFAULT_TOL) -> SlackReport:
    """Per-member slack of a velocity field.

    ``raw`` is (p_i - p_j).(u_i - u_j); ``signed`` flips the sign on cables
    so that a flex is exactly a field whose signed slacks are all >= 0.
    """
    U = u.array if isinstance(u, VelocityField) else np.asarray(u, dtype=float)
    U = U.reshape(t.n_vertices, t.dimension)
    P = t.placement_array
    slacks = []
    worst = 0.0
    for m in t.members:
        raw = float(np.dot(P[m.i - 1] - P[m.j - 1], U[m.i - 1] - U[m.j - 1]))
        signed = m.kind.sign * raw
        worst = min(worst, signed)
        slacks.append(MemberSlack(m, raw, signed))
    return SlackReport(tuple(slacks), worst >= -tol.cert_tol)


def proper_equilibrium_stress(
    t: Tensegrity,
    tol: ToleranceContext = DEFAULT_TOL,
    exact: Optional[bool] = None,
) -> Optional[StressField]:
    """Sign-admissible equilibrium stress that is nonzero on every member.

    Found as a strictly positive left kernel vector mu of the tensegrity
    rigidity matrix (normalised so min |omega_e| = 1) and mapped back to
    signed member values: negative on cables, positive on struts.  Returns
    None when no proper stress exists.
    """
    use_exact = _use_exact(t, exact)
    R = tensegrity_rigidity_matrix(t)
    if use_exact:
        rows = R.exact_rows(t.framework)
        mu = strict_positive_left_kernel(rows, tol, exact=True)
    else:
        mu = strict_positive_left_kernel(R.matrix, tol, exact=False)
    if mu is None:
        return None
    floor = min(mu)  # scale so min |omega_e| is exactly 1
    values = []
    for m_val, member in zip(mu, t.members):
        scaled = m_val / floor
        values.append(-scaled if member.kind is MemberKind.CABLE else scaled)
    stress = StressField.from_values(values) if use_exact else StressField(tuple(float(v) for v in values))
    residual = equilibrium_residual(t, stress)
    if residual > 10 * tol.cert_tol * max(1.0, float(np.abs(t.placement_array).max())):
        raise InternalInconsistencyError(f"equilibrium stress certificate fails to re-verify: residual {residual}")
    return stress


def _deflate_witness(t: Tensegrity, u: np.ndarray, tol: ToleranceContext) -> tuple[np.ndarray, float]:
    """Remove the rigid-motion component and report the remaining norm."""
    trivial = trivial_flex_space(t.framework)
    flat = trivial.project_out(np.asarray(u, dtype=float).reshape(-1))
    return flat.reshape(t.n_vertices, t.dimension), float(np.linalg.norm(flat))


def first_order_rigidity_direct(
    t: Tensegrity,
    tol: ToleranceContext = DEFAULT_TOL,
    exact: Optional[bool] = None,
) -> RigidityCertificate:
    """Decide rigidity by testing the flex cone itself.

    Flexible iff the bar closure has a nontrivial kernel flex (which is
    also a cone flex) or the cone LP finds a direction with a strict slack.
    The returned witness has its rigid-motion component removed.
    """
    use_exact = _use_exact(t, exact) if exact else False
    bar_verdict = bar_first_order_rigidity(t.bar_closure(), tol)
    R = tensegrity_rigidity_matrix(t)
    if not bar_verdict.rigid:
        u = bar_verdict.flex_basis.basis[0].reshape(t.n_vertices, t.dimension)
        witness, nontrivial = u, 1.0
        slack = member_slack(t, witness, tol)
        return RigidityCertificate(
            "flexible",
            "direct_cone",
            bar_rigid=False,
            proper_stress=None,
            witness_flex=VelocityField.from_array(witness),
            witness_min_slack=float(slack.signed_values().min()),
            witness_nontriviality=nontrivial,
        )
    if use_exact:
        direction = flexible_direction(R.exact_rows(t.framework), tol, exact=True)
    else:
        direction = flexible_direction(R.matrix, tol, exact=False)
    if direction is not None:
        witness, nontrivial = _deflate_witness(t, np.asarray(direction, dtype=float).reshape(t.n_vertices, t.dimension), tol)
        image = R.matrix @ witness.reshape(-1)
        witness = witness / image.max()  # renormalise so the largest slack is 1
        nontrivial /= image.max()
        slack = member_slack(t, witness, tol)
        return RigidityCertificate(
            "flexible",
            "direct_cone",
            bar_rigid=True,
            proper_stress=None,
            witness_flex=VelocityField.from_array(witness),
            witness_min_slack=float(slack.signed_values().min()),
            witness_nontriviality=nontrivial,
        )
    return RigidityCertificate(
        "first_order_rigid",
        "direct_cone",
        bar_rigid=True,
        proper_stress=None,
        witness_flex=None,
    )


def roth_whiteley_certify(
    t: Tensegrity,
    tol: ToleranceContext = DEFAULT_TOL,
    exact: Optional[bool] = None,
) -> RigidityCertificate:
    """First-order rigid iff the bar closure is rigid and a proper
    equilibrium stress exists.  The verdict is cross-checked against the
    direct cone method; disagreement raises
    :class:`InternalInconsistencyError`.
    """
    direct = first_order_rigidity_direct(t, tol, exact)
    bar_verdict = bar_first_order_rigidity(t.bar_closure(), tol)
    stress = proper_equilibrium_stress(t, tol, exact)
    rigid = bar_verdict.rigid and stress is not None
    verdict = "first_order_rigid" if rigid else "flexible"
    if verdict != direct.verdict:
        raise InternalInconsistencyError(
            f"method disagreement: direct={direct.verdict} roth_whiteley={verdict}"
        )
    return RigidityCertificate(
        verdict,
        "roth_whiteley",
        bar_rigid=bar_verdict.rigid,
        proper_stress=stress,
        witness_flex=direct.witness_flex,
        stress_residual=equilibrium_residual(t, stress) if stress is not None else None,
        witness_min_slack=direct.witness_min_slack,
        witness_nontriviality=direct.witness_nontriviality,
    )
