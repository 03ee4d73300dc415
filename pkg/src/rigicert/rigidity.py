"""Rigidity matrices, rigid-motion flex spaces, and first-order rigidity.

The bar matrix carries the member vector ``p_i - p_j`` with positive sign
for every member kind; the tensegrity matrix multiplies cable rows by -1,
so a velocity field ``u`` is an infinitesimal flex of a tensegrity exactly
when ``R u`` is componentwise nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from . import exact
from .model import (
    DEFAULT_TOL,
    Framework,
    Member,
    Tensegrity,
    ToleranceContext,
    VelocityField,
)

__all__ = [
    "RigidityMatrix",
    "TrivialSpace",
    "FlexBasis",
    "BarRigidityVerdict",
    "bar_rigidity_matrix",
    "tensegrity_rigidity_matrix",
    "trivial_flex_space",
    "bar_first_order_rigidity",
    "flex_space",
    "numerical_rank",
]


@dataclass(frozen=True)
class RigidityMatrix:
    """m x (d*n) member-constraint matrix with one row per member."""

    matrix: np.ndarray
    members: tuple[Member, ...]
    dimension: int
    n_vertices: int
    signed: bool  # True when cable rows carry the -1 factor

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def exact_rows(self, framework: Framework) -> Optional[exact.FracMatrix]:
        """Rebuild the rows as Fractions when the placement is rational."""
        if framework.rational_placements is None:
            return None
        d = self.dimension
        rows: exact.FracMatrix = []
        for member in self.members:
            sign = member.kind.sign if self.signed else 1
            row = [Fraction(0)] * (d * framework.n_vertices)
            pi = framework.rational_placements[member.i - 1]
            pj = framework.rational_placements[member.j - 1]
            for a in range(d):
                diff = pi[a] - pj[a]
                row[d * (member.i - 1) + a] = sign * diff
                row[d * (member.j - 1) + a] = -sign * diff
            rows.append(row)
        return rows


def _assemble(framework: Framework, signed: bool) -> RigidityMatrix:
    d = framework.dimension
    n = framework.n_vertices
    P = framework.placement_array
    R = np.zeros((framework.member_count, d * n))
    for r, member in enumerate(framework.members):
        sign = member.kind.sign if signed else 1
        diff = sign * (P[member.i - 1] - P[member.j - 1])
        R[r, d * (member.i - 1) : d * member.i] = diff
        R[r, d * (member.j - 1) : d * member.j] = -diff
    return RigidityMatrix(R, framework.members, d, n, signed)


def bar_rigidity_matrix(framework: Framework) -> RigidityMatrix:
    """One row per member with all signs positive, regardless of member kind."""
    return _assemble(framework, signed=False)


def tensegrity_rigidity_matrix(tensegrity: Tensegrity) -> RigidityMatrix:
    """Cable rows negated: ``u`` is a flex iff every entry of ``R u`` is >= 0."""
    return _assemble(tensegrity.framework, signed=True)


def rank_threshold(sigma: np.ndarray, shape: tuple[int, int], tol: ToleranceContext) -> float:
    if sigma.size == 0:
        return 0.0
    return tol.rank_tol * float(sigma[0]) * max(shape)


def numerical_rank(matrix: np.ndarray, tol: ToleranceContext = DEFAULT_TOL) -> int:
    if matrix.size == 0:
        return 0
    sigma = np.linalg.svd(matrix, compute_uv=False)
    return int(np.sum(sigma > rank_threshold(sigma, matrix.shape, tol)))


def _fix_signs(rows: np.ndarray) -> np.ndarray:
    """Deterministic sign convention: largest-magnitude entry of each row positive."""
    out = rows.copy()
    for k in range(out.shape[0]):
        idx = int(np.argmax(np.abs(out[k])))
        if out[k, idx] < 0:
            out[k] = -out[k]
    return out


def _mgs_reorthonormalize(rows: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt with one re-orthogonalization pass."""
    out = rows.copy()
    for k in range(out.shape[0]):
        for _ in range(2):
            for prev in range(k):
                out[k] -= np.dot(out[k], out[prev]) * out[prev]
        norm = np.linalg.norm(out[k])
        if norm > 0:
            out[k] /= norm
    return out


@dataclass(frozen=True)
class TrivialSpace:
    """Orthonormal basis of the rigid-motion velocity fields on a placement."""

    basis: np.ndarray  # (dim, d*n), orthonormal rows
    dimension: int
    ambient_dim: int

    @property
    def dim(self) -> int:
        return self.dimension

    def fields(self) -> list[VelocityField]:
        d = self.ambient_dim
        return [VelocityField.from_array(row.reshape(-1, d)) for row in self.basis]

    def project_out(self, u: np.ndarray) -> np.ndarray:
        """Component of ``u`` orthogonal to every rigid-motion field."""
        flat = u.reshape(-1)
        if self.basis.size == 0:
            return flat.copy()
        return flat - self.basis.T @ (self.basis @ flat)


def trivial_flex_space(placement: Union[np.ndarray, Framework], d: Optional[int] = None) -> TrivialSpace:
    """Span of translations plus infinitesimal rotations, orthonormalized.

    The generator fields are the d coordinate translations and the
    d(d-1)/2 skew rotations ``u_i = S p_i``; the dimension is the rank of
    that generator stack (degenerate placements lose rotations).
    """
    if isinstance(placement, Framework):
        P = placement.placement_array
        d = placement.dimension
    else:
        P = np.atleast_2d(np.asarray(placement, dtype=float))
        if d is None:
            d = P.shape[1]
    n = P.shape[0]
    gens = []
    for a in range(d):
        g = np.zeros((n, d))
        g[:, a] = 1.0
        gens.append(g.reshape(-1))
    for a in range(d):
        for b in range(a + 1, d):
            g = np.zeros((n, d))
            g[:, b] = P[:, a]
            g[:, a] = -P[:, b]
            gens.append(g.reshape(-1))
    G = np.array(gens)
    u_mat, sigma, vt = np.linalg.svd(G, full_matrices=False)
    cutoff = rank_threshold(sigma, G.shape, DEFAULT_TOL)
    keep = sigma > cutoff
    basis = _fix_signs(vt[keep])
    basis = _mgs_reorthonormalize(basis)
    return TrivialSpace(basis, int(keep.sum()), d)


@dataclass(frozen=True)
class FlexBasis:
    """Orthonormal basis of ker R within the orthogonal complement of rigid motions."""

    basis: np.ndarray  # (dim, d*n)
    dimension: int
    ambient_dim: int

    @property
    def dim(self) -> int:
        return self.dimension

    def fields(self) -> list[VelocityField]:
        d = self.ambient_dim
        return [VelocityField.from_array(row.reshape(-1, d)) for row in self.basis]


def flex_space(framework: Framework, tol: ToleranceContext = DEFAULT_TOL) -> FlexBasis:
    """Nontrivial infinitesimal flexes of the bar framework, orthonormalized.

    Ordered deterministically (descending singular value of the projected
    kernel stack, signs fixed); empty exactly when the framework is
    first-order rigid.
    """
    R = bar_rigidity_matrix(framework).matrix
    d = framework.dimension
    dn = d * framework.n_vertices
    trivial = trivial_flex_space(framework)
    if R.shape[0] == 0:
        kernel = np.eye(dn)
    else:
        _, sigma, vt = np.linalg.svd(R)
        cutoff = rank_threshold(sigma, R.shape, tol)
        rank = int(np.sum(sigma > cutoff))
        kernel = vt[rank:]
    if kernel.shape[0] == 0:
        return FlexBasis(np.zeros((0, dn)), 0, d)
    projected = np.array([trivial.project_out(row) for row in kernel])
    _, sigma2, vt2 = np.linalg.svd(projected, full_matrices=False)
    cutoff2 = 1e-8 if sigma2.size == 0 else max(1e-12, 1e-8 * float(sigma2[0]))
    keep = sigma2 > cutoff2
    basis = _fix_signs(vt2[keep])
    basis = _mgs_reorthonormalize(basis)
    return FlexBasis(basis, int(keep.sum()), d)


@dataclass(frozen=True)
class BarRigidityVerdict:
    rigid: bool
    rank: int
    trivial_dim: int
    flex_basis: FlexBasis

    @property
    def flex_dim(self) -> int:
        return self.flex_basis.dimension


def bar_first_order_rigidity(framework: Framework, tol: ToleranceContext = DEFAULT_TOL) -> BarRigidityVerdict:
    """Rigid iff rank R = d*n - dim(rigid motions); otherwise carries a flex basis."""
    R = bar_rigidity_matrix(framework).matrix
    rank = numerical_rank(R, tol)
    trivial = trivial_flex_space(framework)
    basis = flex_space(framework, tol)
    dn = framework.dimension * framework.n_vertices
    rigid = rank == dn - trivial.dimension
    if rigid != (basis.dimension == 0):
        # Rank rule and kernel quotient must agree; a mismatch is a tolerance bug.
        raise RuntimeError("rank-based and kernel-based rigidity verdicts disagree")
    return BarRigidityVerdict(rigid, rank, trivial.dimension, basis)


def exact_rank(framework: Framework, signed: bool = False) -> Optional[int]:
    """Rank by exact rational elimination; None when the placement is irrational."""
    if framework.rational_placements is None:
        return None
    rm = _assemble(framework, signed=signed)
    rows = rm.exact_rows(framework)
    if not rows:
        return 0
    return exact.rank(rows)
