"""Parametric infinite families, truncation pipelines, and sequence-space
diagnostics.

Each family produces nested finite truncations (level-k members are a
subset of level-(k+1) members, placements identical on shared vertices)
together with a candidate stress, candidate flexes, and declared structure
bounds.  The profile functions measure, level by level, how the truncated
stress fails equilibrium near the boundary (in a chosen dual norm and
against a dictionary of decaying test fields), whether the absolute stress
mass and the stress energy converge, and whether the candidate stress
positively weights the truncation's nontrivial flexes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import exact
from .lp import solve_lp
from .model import (
    DEFAULT_TOL,
    Framework,
    Member,
    MemberKind,
    StressField,
    Tensegrity,
    ToleranceContext,
    framework_from_points,
)
from .prestress import energy_bilinear, energy_form, stress_space
from .rigidity import flex_space, tensegrity_rigidity_matrix

__all__ = [
    "SequenceSpace",
    "DictionaryField",
    "TruncationReport",
    "GeneratorSpec",
    "GeneratorError",
    "InfiniteFamily",
    "TriangleTiling",
    "Strip",
    "DyadicSquares",
    "Lacunary",
    "SquareInSquare",
    "FAMILIES",
    "make_generator",
    "generate",
    "candidate_stress",
    "fitted_ratio",
    "sequence_norm",
    "truncation_residual_profile",
    "weak_pairing_profile",
    "summability_report",
    "infinite_energy_report",
    "bps_probe",
    "uniform_structure_check",
    "strip_top_monotonicity",
]


class GeneratorError(RuntimeError):
    """A generator violated one of its own declared bounds."""


@dataclass(frozen=True)
class SequenceSpace:
    """One of the classical sequence spaces l^q (q >= 1), c0, or l-infinity."""

    tag: str  # "ellq" | "c0" | "ellinfinity"
    q: Optional[float] = None

    def __post_init__(self):
        if self.tag == "ellq":
            if self.q is None or self.q < 1:
                raise ValueError("l^q requires q >= 1")
        elif self.tag not in ("c0", "ellinfinity"):
            raise ValueError(f"unknown sequence space tag {self.tag!r}")

    @classmethod
    def ell(cls, q: float) -> "SequenceSpace":
        return cls("ellq", float(q))

    @classmethod
    def c0(cls) -> "SequenceSpace":
        return cls("c0")

    @classmethod
    def ell_infinity(cls) -> "SequenceSpace":
        return cls("ellinfinity")

    def dual(self) -> "SequenceSpace":
        if self.tag == "c0":
            return SequenceSpace.ell(1)
        if self.tag == "ellq":
            if self.q == 1:
                return SequenceSpace.ell_infinity()
            return SequenceSpace.ell(self.q / (self.q - 1))
        raise ValueError("the dual of l-infinity is not a sequence space here")

    def label(self) -> str:
        if self.tag == "ellq":
            q = self.q
            return f"l^{int(q)}" if q and q == int(q) else f"l^{q}"
        return {"c0": "c0", "ellinfinity": "l^inf"}[self.tag]

    @classmethod
    def from_label(cls, text: str) -> "SequenceSpace":
        t = text.strip().lower()
        if t in ("c0", "c_0"):
            return cls.c0()
        if t in ("linf", "l^inf", "ellinfinity", "linfinity"):
            return cls.ell_infinity()
        for prefix in ("l^", "l", "ell"):
            if t.startswith(prefix):
                try:
                    return cls.ell(float(t[len(prefix) :]))
                except ValueError:
                    break
        raise ValueError(f"unknown sequence space {text!r}")


def sequence_norm(blocks: Union[np.ndarray, Sequence[Sequence[float]]], space: SequenceSpace) -> float:
    """Norm of a vector family: l^q uses the inner q-norm per block, c0 and
    l-infinity use the sup of inner max-norms."""
    arr = np.atleast_2d(np.asarray(blocks, dtype=float))
    if arr.size == 0:
        return 0.0
    if space.tag == "ellq":
        q = float(space.q)
        return float(np.sum(np.abs(arr) ** q) ** (1.0 / q))
    return float(np.abs(arr).max())


def fitted_ratio(values: Sequence[float], levels: Optional[Sequence[float]] = None) -> float:
    """Per-level decay ratio from a least-squares fit of log|v| against level
    over the last half of the profile.  Sequences that end at exact zero
    report ratio 0; fewer than two usable points report ratio 1."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        return 1.0
    lv = np.asarray(levels if levels is not None else np.arange(1, vals.size + 1), dtype=float)
    half = vals.size // 2 if vals.size > 3 else 0
    tail_vals = np.abs(vals[half:])
    tail_levels = lv[half:]
    if tail_vals[-1] < 1e-300:
        return 0.0
    mask = tail_vals > 1e-300
    if mask.sum() < 2:
        return 1.0
    slope = np.polyfit(tail_levels[mask], np.log(tail_vals[mask]), 1)[0]
    return float(np.exp(slope))


@dataclass(frozen=True)
class DictionaryField:
    """A named test velocity field defined consistently across truncations."""

    name: str
    declared_space: SequenceSpace
    build: Callable[[int], np.ndarray]  # level -> (n_vertices, d) array


@dataclass
class TruncationReport:
    level: int
    residual_sup: float
    residual_norm: float
    weak_pairings: list[float]
    partial_abs_sum: float
    partial_energy: float
    partial_abs_energy: float
    lower_bound_ok: bool
    verdicts: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "level": self.level,
            "residual_sup": self.residual_sup,
            "residual_norm": self.residual_norm,
            "weak_pairings": list(self.weak_pairings),
            "partial_abs_sum": self.partial_abs_sum,
            "partial_energy": self.partial_energy,
            "partial_abs_energy": self.partial_abs_energy,
            "lower_bound_ok": self.lower_bound_ok,
            "verdicts": self.verdicts,
        }


class InfiniteFamily:
    """Base interface for the generator families."""

    name: str = ""
    degree_bound: Optional[int] = None
    length_bound: Optional[float] = None

    def truncation(self, level: int) -> Union[Framework, Tensegrity]:
        raise NotImplementedError

    def stress_value(self, member: Member, level: int):
        raise NotImplementedError

    def candidate_stress(self, level: int) -> StressField:
        """Stress aligned with the canonical member order of truncation(level)."""
        fw = _framework_of(self.truncation(level))
        values = [self.stress_value(m, level) for m in fw.members]
        return StressField.from_values(values)

    def candidate_flexes(self, level: int) -> list[np.ndarray]:
        return []

    def orthogonal_flex_pairs(self, level: int) -> list[tuple[int, int]]:
        """Index pairs of candidate flexes whose energy cross terms vanish."""
        return []

    def tail_bound(self, level: int) -> float:
        """Upper bound on the absolute stress mass beyond this level."""
        return math.inf

    def energy_tail_bound(self, level: int) -> float:
        return math.inf

    def default_dictionary(self, level: int) -> list[DictionaryField]:
        return []

    def delta_lower_bound(self, member: Member, level: int) -> float:
        """Per-member floor delta_e that the truncated stress must reach."""
        return abs(float(self.stress_value(member, level))) / 2.0

    def _check_level(self, level: int) -> None:
        if level < 1:
            raise ValueError(f"unsupported level {level}; levels start at 1")


def _framework_of(obj: Union[Framework, Tensegrity]) -> Framework:
    return obj.framework if isinstance(obj, Tensegrity) else obj


class TriangleTiling(InfiniteFamily):
    """Truncations of the unit triangular lattice with every member a cable.

    Level R keeps the lattice points a*e1 + b*e2 (e1 = (1,0),
    e2 = (1/2, sqrt(3)/2)) with a^2 + ab + b^2 <= R^2; coordinates are
    floats, so the exact-arithmetic path is disabled for this family.
    """

    name = "triangle"
    degree_bound = 6
    length_bound = 1.0

    def _lattice(self, level: int) -> list[tuple[int, int]]:
        pts = []
        for a in range(-level, level + 1):
            for b in range(-level, level + 1):
                if a * a + a * b + b * b <= level * level:
                    pts.append((a, b))
        pts.sort(key=lambda ab: (ab[0] ** 2 + ab[0] * ab[1] + ab[1] ** 2, ab[0], ab[1]))
        return pts

    def truncation(self, level: int) -> Tensegrity:
        self._check_level(level)
        pts = self._lattice(level)
        index = {ab: i + 1 for i, ab in enumerate(pts)}
        points = [(a + b / 2.0, b * math.sqrt(3.0) / 2.0) for a, b in pts]
        members = []
        for a, b in pts:
            for da, db in ((1, 0), (0, 1), (1, -1)):
                nb = (a + da, b + db)
                if nb in index:
                    members.append((index[(a, b)], index[nb], MemberKind.CABLE))
        fw = framework_from_points(2, points, members, exact=False)
        return Tensegrity(fw)

    def stress_value(self, member: Member, level: int):
        return -1.0

    def interior_vertex_ids(self, level: int) -> list[int]:
        pts = self._lattice(level)
        index = {ab: i + 1 for i, ab in enumerate(pts)}
        out = []
        neighbours = ((1, 0), (0, 1), (1, -1), (-1, 0), (0, -1), (-1, 1))
        for a, b in pts:
            if all((a + da, b + db) in index for da, db in neighbours):
                out.append(index[(a, b)])
        return out

    def candidate_flexes(self, level: int) -> list[np.ndarray]:
        fw = _framework_of(self.truncation(level))
        return [-0.5 * fw.placement_array]

    def default_dictionary(self, level: int) -> list[DictionaryField]:
        def bump(lv: int) -> np.ndarray:
            fw = _framework_of(self.truncation(lv))
            P = fw.placement_array
            U = np.zeros_like(P)
            mask = np.linalg.norm(P, axis=1) <= 1.5
            U[mask, 0] = 1.0
            return U

        return [DictionaryField("origin_bump", SequenceSpace.c0(), bump)]


class Strip(InfiniteFamily):
    """A three-row strip: a braced lower band of unit squares (all members
    cable-strut pairs, with both diagonals), vertical pairs up to the top
    row, horizontal top cables, and rising diagonal cables (k,1)-(k+1,2).

    One-sided by default (columns 0..N at level N); ``two_sided=True``
    grows columns -N..N instead.  The candidate stress puts -1 on top
    cables, +/-1 on each cable-strut pair, and 0 on the rising diagonals,
    so properness holds for every member except the diagonals (reported
    under the ``proper_excluding_diagonals`` flag).
    """

    name = "strip"
    degree_bound = 7
    length_bound = math.sqrt(2.0)

    def __init__(self, two_sided: bool = False):
        self.two_sided = two_sided

    def _columns(self, level: int) -> list[int]:
        if not self.two_sided:
            return list(range(level + 1))
        out = [0]
        for k in range(1, level + 1):
            out.extend([k, -k])
        return out

    def _vertex_id(self, col_position: int, row: int) -> int:
        return 3 * col_position + row + 1

    def column_positions(self, level: int) -> dict[int, int]:
        return {k: i for i, k in enumerate(self._columns(level))}

    def top_vertex_id(self, level: int, bay: int) -> int:
        return self._vertex_id(self.column_positions(level)[bay], 2)

    def truncation(self, level: int) -> Tensegrity:
        self._check_level(level)
        cols = self._columns(level)
        pos = {k: i for i, k in enumerate(cols)}
        points = []
        for k in cols:
            for row in (0, 1, 2):
                points.append((k, row))
        members: list[tuple[int, int, MemberKind]] = []

        def pair(i: int, j: int) -> None:
            members.append((i, j, MemberKind.CABLE))
            members.append((i, j, MemberKind.STRUT))

        for k in cols:
            pair(self._vertex_id(pos[k], 0), self._vertex_id(pos[k], 1))
            pair(self._vertex_id(pos[k], 1), self._vertex_id(pos[k], 2))
        for k in cols:
            if k + 1 not in pos:
                continue
            a, b = pos[k], pos[k + 1]
            pair(self._vertex_id(a, 0), self._vertex_id(b, 0))
            pair(self._vertex_id(a, 1), self._vertex_id(b, 1))
            pair(self._vertex_id(a, 0), self._vertex_id(b, 1))
            pair(self._vertex_id(a, 1), self._vertex_id(b, 0))
            members.append((self._vertex_id(a, 2), self._vertex_id(b, 2), MemberKind.CABLE))
            members.append((self._vertex_id(a, 1), self._vertex_id(b, 2), MemberKind.CABLE))
        fw = framework_from_points(2, points, members, exact=True)
        return Tensegrity(fw)

    def _member_geometry(self, member: Member) -> str:
        (r1, r2) = ((member.i - 1) % 3, (member.j - 1) % 3)
        c1, c2 = (member.i - 1) // 3, (member.j - 1) // 3
        if r1 == 2 and r2 == 2:
            return "top_cable"
        if {r1, r2} == {1, 2} and c1 != c2:
            return "rising_diagonal"
        return "band"

    def stress_value(self, member: Member, level: int):
        geometry = self._member_geometry(member)
        if geometry == "top_cable":
            return Fraction(-1)
        if geometry == "rising_diagonal":
            return Fraction(0)
        return Fraction(-1) if member.kind is MemberKind.CABLE else Fraction(1)

    def proper_excluding_diagonals(self, level: int) -> bool:
        fw = _framework_of(self.truncation(level))
        for m in fw.members:
            if self._member_geometry(m) == "rising_diagonal":
                continue
            if abs(float(self.stress_value(m, level))) < 1:
                return False
        return True

    def tail_flex(self, level: int, from_bay: int) -> np.ndarray:
        """Leftward unit velocity on every top joint at bay >= from_bay."""
        fw = _framework_of(self.truncation(level))
        U = np.zeros((fw.n_vertices, 2))
        for bay, cpos in self.column_positions(level).items():
            if bay >= from_bay:
                U[self._vertex_id(cpos, 2) - 1] = (-1.0, 0.0)
        return U

    def candidate_flexes(self, level: int) -> list[np.ndarray]:
        bays = sorted({max(1, level // 2), max(1, level - 2)})
        return [self.tail_flex(level, b) for b in bays]

    def default_dictionary(self, level: int) -> list[DictionaryField]:
        def inverse_bay(lv: int) -> np.ndarray:
            fw = _framework_of(self.truncation(lv))
            U = np.zeros((fw.n_vertices, 2))
            for bay, cpos in self.column_positions(lv).items():
                if bay >= 1:
                    U[self._vertex_id(cpos, 2) - 1] = (1.0 / bay, 0.0)
            return U

        def mid_bump(lv: int) -> np.ndarray:
            fw = _framework_of(self.truncation(lv))
            U = np.zeros((fw.n_vertices, 2))
            lo = max(1, level // 3)
            for bay, cpos in self.column_positions(lv).items():
                if lo <= bay <= lo + 2:
                    U[self._vertex_id(cpos, 2) - 1] = (1.0, 0.0)
            return U

        return [
            DictionaryField("top_inverse_bay", SequenceSpace.c0(), inverse_bay),
            DictionaryField("top_mid_bump", SequenceSpace.c0(), mid_bump),
        ]


class DyadicSquares(InfiniteFamily):
    """Nested squares at dyadic scales joined corner to corresponding corner.

    Square k has corners (+-1/2^k, +-1/2^k); level K keeps squares 0..K.
    Level 1 is the square-in-square framework.  All members are bars and
    every coordinate is rational.
    """

    name = "dyadic"
    degree_bound = 4
    length_bound = 2.0

    _corner_pattern = ((-1, 1), (1, 1), (1, -1), (-1, -1))

    def __init__(self):
        self._level_cache: dict[int, tuple[list[Fraction], list[Fraction]]] = {}

    def truncation(self, level: int) -> Framework:
        self._check_level(level)
        points = []
        members: list[tuple[int, int, MemberKind]] = []
        for k in range(level + 1):
            scale = Fraction(1, 2**k)
            for cx, cy in self._corner_pattern:
                points.append((cx * scale, cy * scale))
            base = 4 * k
            members.extend(
                [
                    (base + 1, base + 2, MemberKind.BAR),
                    (base + 2, base + 3, MemberKind.BAR),
                    (base + 3, base + 4, MemberKind.BAR),
                    (base + 1, base + 4, MemberKind.BAR),
                ]
            )
            if k < level:
                for c in range(1, 5):
                    members.append((base + c, base + 4 + c, MemberKind.BAR))
        return framework_from_points(2, points, members, exact=True)

    def _member_class(self, member: Member) -> tuple[str, int]:
        """("square", k) for an edge of square k, ("connector", k) between k and k+1."""
        ki, kj = (member.i - 1) // 4, (member.j - 1) // 4
        if ki == kj:
            return ("square", ki)
        return ("connector", min(ki, kj))

    def level_values(self, level: int) -> tuple[list[Fraction], list[Fraction]]:
        """Exact per-level stress values (square edges s_k, connectors c_k).

        Solved from the corner equilibrium equations with the interior
        matching rule s_k = c_k (one stress value per dyadic level away from
        the boundary squares), normalised so the outer square carries -1.
        """
        if level in self._level_cache:
            return self._level_cache[level]
        K = level
        n_unknowns = 2 * K + 1  # s_0..s_K, c_0..c_{K-1}
        rows: list[list[Fraction]] = []
        rhs: list[Fraction] = []

        def blank() -> list[Fraction]:
            return [Fraction(0)] * n_unknowns

        s_at = lambda k: k
        c_at = lambda k: K + 1 + k
        row = blank()
        row[s_at(0)] = Fraction(-2)
        row[c_at(0)] = Fraction(-1, 2)
        rows.append(row)
        rhs.append(Fraction(0))
        for k in range(1, K):
            row = blank()
            row[s_at(k)] = Fraction(-2)
            row[c_at(k - 1)] = Fraction(1)
            row[c_at(k)] = Fraction(-1, 2)
            rows.append(row)
            rhs.append(Fraction(0))
        row = blank()
        row[s_at(K)] = Fraction(-2)
        row[c_at(K - 1)] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(0))
        for k in range(1, K):
            row = blank()
            row[s_at(k)] = Fraction(1)
            row[c_at(k)] = Fraction(-1)
            rows.append(row)
            rhs.append(Fraction(0))
        row = blank()
        row[s_at(0)] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(-1))
        solution = exact.solve_linear(rows, rhs)
        result = (solution[: K + 1], solution[K + 1 :])
        self._level_cache[level] = result
        return result

    def stress_value(self, member: Member, level: int):
        s_vals, c_vals = self._model_values(level)
        cls, k = self._member_class(member)
        return s_vals[k] if cls == "square" else c_vals[k]

    def _model_values(self, level: int) -> tuple[list[Fraction], list[Fraction]]:
        # Values from one level deeper, so the requested level is interior
        # and the restriction agrees across truncations.
        s_vals, c_vals = self.level_values(level + 1)
        return s_vals[: level + 1], c_vals[:level]

    def candidate_flexes(self, level: int) -> list[np.ndarray]:
        fw = self.truncation(level)
        P = fw.placement_array
        out = [np.where(P[:, 1:2] > 0, 1.0, 0.0) * np.array([1.0, 0.0])]
        for k in range(1, level + 1):
            U = np.zeros_like(P)
            rows = slice(4 * k, 4 * k + 4)
            U[rows, 0] = (2**k) * P[rows, 1]
            U[rows, 1] = -((2**k)) * P[rows, 0]
            out.append(U)
        return out

    def orthogonal_flex_pairs(self, level: int) -> list[tuple[int, int]]:
        # Rotation flexes of squares two or more levels apart have disjoint
        # member supports, so their cross terms are exactly zero.
        pairs = []
        for a in range(1, level + 1):
            for b in range(a + 2, level + 1):
                pairs.append((a, b))
        return pairs

    def _ratio(self, level: int) -> Fraction:
        s_vals, _ = self.level_values(max(level, 3))
        return s_vals[2] / s_vals[1]

    def tail_bound(self, level: int) -> float:
        s_vals, _ = self._model_values(level)
        rho = self._ratio(level)
        s_last = abs(s_vals[level])
        # Remaining squares k > level and connectors k >= level, 4 members each.
        return float(4 * s_last * rho / (1 - rho) + 4 * s_last * (1 / (1 - rho)))

    def energy_tail_bound(self, level: int) -> float:
        s_vals, _ = self._model_values(level)
        rho = self._ratio(level) / 4
        s_last = abs(s_vals[level]) * Fraction(1, 4**level)
        per_level = 16 * s_last * rho / (1 - rho) + 2 * s_last / (1 - rho)
        return float(per_level)

    def default_dictionary(self, level: int) -> list[DictionaryField]:
        def first_rotation(lv: int) -> np.ndarray:
            # Rotation flex of square 1, present at every level; zero elsewhere.
            return self.candidate_flexes(lv)[1]

        return [DictionaryField("first_inner_rotation", SequenceSpace.c0(), first_rotation)]


class SquareInSquare(DyadicSquares):
    """The fixed square-in-square framework, exposed at every level."""

    name = "square_in_square"
    degree_bound = 3
    length_bound = 2.0

    def truncation(self, level: int) -> Framework:
        self._check_level(level)
        return super().truncation(1)

    def stress_value(self, member: Member, level: int):
        s_vals, c_vals = self.level_values(1)
        cls, k = self._member_class(member)
        return s_vals[k] if cls == "square" else c_vals[k]

    def candidate_flexes(self, level: int) -> list[np.ndarray]:
        return super().candidate_flexes(1)

    def orthogonal_flex_pairs(self, level: int) -> list[tuple[int, int]]:
        return []

    def tail_bound(self, level: int) -> float:
        return 0.0

    def energy_tail_bound(self, level: int) -> float:
        return 0.0


class Lacunary(InfiniteFamily):
    """Bars along the x-axis over the intervals [0,1], [1,3], [3,7], ... and
    their mirror images: the bar at dyadic level k has length 2^k and
    carries stress 1/2^k.  Level L keeps bars k = 0..L on each side.

    Member lengths are unbounded, so the uniform-structure check fails by
    design; the stress is summable but its energy diverges.
    """

    name = "lacunary"
    degree_bound = 2
    length_bound = None

    def _coordinate(self, vertex_id: int) -> int:
        if vertex_id == 1:
            return 0
        k, side = divmod(vertex_id - 2, 2)
        x = 2 ** (k + 1) - 1
        return x if side == 0 else -x

    def truncation(self, level: int) -> Framework:
        self._check_level(level)
        n = 2 * (level + 1) + 1
        points = [(self._coordinate(v), 0) for v in range(1, n + 1)]
        members = []
        members.append((1, 2, MemberKind.BAR))
        members.append((1, 3, MemberKind.BAR))
        for k in range(1, level + 1):
            members.append((2 * k, 2 * k + 2, MemberKind.BAR))
            members.append((2 * k + 1, 2 * k + 3, MemberKind.BAR))
        return framework_from_points(2, points, members, exact=True)

    def stress_value(self, member: Member, level: int):
        length = abs(self._coordinate(member.i) - self._coordinate(member.j))
        return Fraction(1, length)

    def interior_vertex_ids(self, level: int) -> list[int]:
        return list(range(1, 2 * level + 2))

    def tail_bound(self, level: int) -> float:
        # Covers every member of length >= 2^level on both sides.
        return float(Fraction(4, 2**level))

    def energy_tail_bound(self, level: int) -> float:
        return math.inf

    def candidate_flexes(self, level: int) -> list[np.ndarray]:
        fw = self.truncation(level)
        U = np.zeros((fw.n_vertices, 2))
        for v in range(1, fw.n_vertices + 1):
            if self._coordinate(v) > 0:
                U[v - 1] = (0.0, 1.0)
        return [U]

    def default_dictionary(self, level: int) -> list[DictionaryField]:
        def vertical_bump(lv: int) -> np.ndarray:
            fw = self.truncation(lv)
            U = np.zeros((fw.n_vertices, 2))
            U[1] = (0.0, 1.0)  # the joint at x = 1
            return U

        def inverse_index(lv: int) -> np.ndarray:
            fw = self.truncation(lv)
            U = np.zeros((fw.n_vertices, 2))
            for v in range(2, fw.n_vertices + 1):
                U[v - 1, 0] = 1.0 / v
            return U

        return [
            DictionaryField("vertical_bump", SequenceSpace.c0(), vertical_bump),
            DictionaryField("inverse_index", SequenceSpace.c0(), inverse_index),
        ]


FAMILIES: dict[str, Callable[..., InfiniteFamily]] = {
    "triangle": TriangleTiling,
    "strip": Strip,
    "dyadic": DyadicSquares,
    "lacunary": Lacunary,
    "square_in_square": SquareInSquare,
}


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    params: tuple = ()

    def build(self) -> InfiniteFamily:
        return make_generator(self.family, **dict(self.params))


def make_generator(family: str, **params) -> InfiniteFamily:
    try:
        ctor = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; known: {sorted(FAMILIES)}") from None
    return ctor(**params)


def _resolve(gen: Union[InfiniteFamily, GeneratorSpec, str]) -> InfiniteFamily:
    if isinstance(gen, InfiniteFamily):
        return gen
    if isinstance(gen, GeneratorSpec):
        return gen.build()
    return make_generator(gen)


def generate(gen: Union[InfiniteFamily, GeneratorSpec, str], level: int) -> Union[Framework, Tensegrity]:
    return _resolve(gen).truncation(level)


def candidate_stress(gen: Union[InfiniteFamily, GeneratorSpec, str], level: int) -> StressField:
    return _resolve(gen).candidate_stress(level)


def solve_symmetric_stress(family: DyadicSquares, level: int, tol: ToleranceContext = DEFAULT_TOL) -> dict:
    """Stress selection for the dyadic-squares family at a given depth.

    Computes the equilibrium stress space of the truncation, symmetrises
    over the dihedral symmetry group of the square (the space is constant
    on square-edge and connector orbits), and selects the element whose
    interior levels carry a single stress value (square edges equal to
    their inward connectors), normalised to -1 on the outer square.  The
    report carries the fitted ratio of consecutive interior values, its
    level-to-level variation, the reference ratios 4/5 and 2/5, and the
    solution of the displayed one-unknown balance equation
    a/8 + a/2 = 1/4, without asserting any of them.
    """
    if level < 3:
        raise ValueError("symmetric stress solve needs level >= 3")
    fw = family.truncation(level)
    space = stress_space(fw, tol)
    if space.dimension == 0:
        raise GeneratorError("stress space is empty; cannot select a symmetric stress")
    s_vals, c_vals = family.level_values(level)
    stress = StressField.from_values([
        (s_vals if family._member_class(m)[0] == "square" else c_vals)[family._member_class(m)[1]]
        for m in fw.members
    ])
    # The selected stress must lie in the computed stress space.
    vec = stress.array
    proj = space.project(vec)
    in_space_residual = float(np.linalg.norm(vec - proj))
    interior = [float(v) for v in s_vals[1:level]]
    ratios = [interior[k + 1] / interior[k] for k in range(len(interior) - 1)]
    fitted = ratios[0] if ratios else math.nan
    variation = max(abs(r - fitted) for r in ratios) if ratios else math.nan
    balance_solution = 0.25 / (1.0 / 8.0 + 1.0 / 2.0)
    return {
        "level": level,
        "stress": stress,
        "square_values": [float(v) for v in s_vals],
        "connector_values": [float(v) for v in c_vals],
        "square_values_exact": s_vals,
        "connector_values_exact": c_vals,
        "stress_space_dim": space.dimension,
        "in_space_residual": in_space_residual,
        "fitted_ratio": fitted,
        "ratio_variation": variation,
        "reference_ratios": {"four_fifths": 0.8, "two_fifths": 0.4},
        "balance_equation": {"text": "a/8 + a/2 = 1/4", "solution": balance_solution},
        "sign_consistent": float(s_vals[0]) < 0 and all(float(v) > 0 for v in s_vals[1:] + c_vals),
    }


def _vertex_residual(fw: Framework, members: Sequence[Member], values: Sequence[float]) -> np.ndarray:
    P = fw.placement_array
    res = np.zeros_like(P)
    for w, m in zip(values, members):
        if w == 0:
            continue
        diff = P[m.i - 1] - P[m.j - 1]
        res[m.i - 1] += w * diff
        res[m.j - 1] -= w * diff
    return res


def _member_index(fw: Framework) -> dict[tuple[int, int, MemberKind], int]:
    return {(m.i, m.j, m.kind): idx for idx, m in enumerate(fw.members)}


def truncation_residual_profile(
    gen: Union[InfiniteFamily, GeneratorSpec, str],
    levels: Sequence[int],
    space: SequenceSpace,
    dictionary: Optional[list[DictionaryField]] = None,
    tol: ToleranceContext = DEFAULT_TOL,
) -> tuple[list[TruncationReport], dict]:
    """Per-level equilibrium residual of the truncated candidate stress.

    The level-n stress is supported on level-n members and its residual is
    evaluated at every vertex of the level-(n+1) truncation, then measured
    in the requested dual-space norm.  The strong-decay verdict holds when
    the fitted per-level ratio of those norms is below 0.95.
    """
    family = _resolve(gen)
    reports: list[TruncationReport] = []
    for n in levels:
        small = _framework_of(family.truncation(n))
        stress = family.candidate_stress(n)
        big = _framework_of(family.truncation(n + 1))
        residual = _vertex_residual(big, small.members, stress.values)
        sup = sequence_norm(residual, SequenceSpace.ell_infinity())
        norm = sequence_norm(residual, space)
        abs_sum = float(np.abs(stress.array).sum())
        lengths = np.array([small.member_length(m) for m in small.members])
        energy = float(np.dot(stress.array, lengths**2))
        abs_energy = float(np.dot(np.abs(stress.array), lengths**2))
        lower_ok = True
        if n > min(levels):
            smaller = _framework_of(family.truncation(n - 1))
            idx = _member_index(small)
            for m in smaller.members:
                w = stress.values[idx[(m.i, m.j, m.kind)]]
                if abs(w) < family.delta_lower_bound(m, n - 1) - tol.cert_tol:
                    lower_ok = False
                    break
        pairings: list[float] = []
        if dictionary:
            for element in dictionary:
                U = element.build(n + 1)
                pairings.append(float(np.sum(residual * U)))
        reports.append(
            TruncationReport(
                level=n,
                residual_sup=sup,
                residual_norm=norm,
                weak_pairings=pairings,
                partial_abs_sum=abs_sum,
                partial_energy=energy,
                partial_abs_energy=abs_energy,
                lower_bound_ok=lower_ok,
            )
        )
    norms = [r.residual_norm for r in reports]
    ratio = fitted_ratio(norms, [r.level for r in reports])
    summary = {
        "space": space.label(),
        "residual_norms": norms,
        "fitted_ratio": ratio,
        "strong_decay": ratio < 0.95,
        "lower_bound_ok": all(r.lower_bound_ok for r in reports),
    }
    for r in reports:
        r.verdicts["strong_decay"] = summary["strong_decay"]
    return reports, summary


def _validate_dictionary_element(
    family: InfiniteFamily, element: DictionaryField, levels: Sequence[int]
) -> None:
    """Check the declared decay: new-vertex sups must vanish for c0 fields
    and the partial norms must converge for l^q fields."""
    if element.declared_space.tag == "ellinfinity":
        raise ValueError(
            f"dictionary element {element.name!r} lies outside the test space (l-infinity is not allowed)"
        )
    lo, hi = min(levels), max(levels)
    probe_levels = sorted({lo, (lo + hi) // 2, hi, hi + 1})
    sups = []
    increments = []
    for a, b in zip(probe_levels[:-1], probe_levels[1:]):
        Ua, Ub = element.build(a), element.build(b)
        if not np.allclose(Ub[: Ua.shape[0]], Ua, atol=1e-12):
            raise ValueError(f"dictionary element {element.name!r} is inconsistent across truncations")
        new_rows = Ub[Ua.shape[0] :]
        sups.append(float(np.abs(new_rows).max()) if new_rows.size else 0.0)
        if element.declared_space.tag == "ellq" and new_rows.size:
            q = float(element.declared_space.q)
            increments.append(float(np.sum(np.abs(new_rows) ** q)))
        else:
            increments.append(0.0)
    if element.declared_space.tag == "c0":
        if sups[-1] > 1e-9 and sups[-1] >= 0.999 * sups[0]:
            raise ValueError(f"dictionary element {element.name!r} does not decay as declared for c0")
    elif increments[-1] > 1e-9 and increments[-1] >= 0.999 * increments[0]:
        raise ValueError(f"dictionary element {element.name!r} does not converge as declared for l^q")


def weak_pairing_profile(
    gen: Union[InfiniteFamily, GeneratorSpec, str],
    levels: Sequence[int],
    dictionary: Optional[list[DictionaryField]] = None,
    tol: ToleranceContext = DEFAULT_TOL,
) -> dict:
    """Pairings of the truncated-stress residual against decaying test fields.

    Each pairing sequence is sum_e |omega^(n)_e| s_e(u), reported per level;
    the weak-decay verdict requires every sequence to decay with fitted
    ratio below 0.95 (sequences that are eventually exactly zero count as
    decayed).
    """
    family = _resolve(gen)
    if dictionary is None:
        dictionary = family.default_dictionary(max(levels))
    if not dictionary:
        raise ValueError("no dictionary fields supplied and the family declares none")
    for element in dictionary:
        _validate_dictionary_element(family, element, levels)
    per_element: dict[str, list[float]] = {e.name: [] for e in dictionary}
    for n in levels:
        small = _framework_of(family.truncation(n))
        stress = family.candidate_stress(n)
        big = _framework_of(family.truncation(n + 1))
        residual = _vertex_residual(big, small.members, stress.values)
        for element in dictionary:
            U = element.build(n + 1)
            per_element[element.name].append(float(np.sum(residual * U)))
    ratios = {name: fitted_ratio(vals, list(levels)) for name, vals in per_element.items()}
    return {
        "levels": list(levels),
        "pairings": per_element,
        "fitted_ratios": ratios,
        "weak_decay": all(r < 0.95 for r in ratios.values()),
    }


def summability_report(
    gen: Union[InfiniteFamily, GeneratorSpec, str],
    levels: Sequence[int],
) -> dict:
    """Partial absolute stress sums plus the declared tail bound per level."""
    family = _resolve(gen)
    rows = []
    for n in levels:
        stress = family.candidate_stress(n)
        partial = float(np.abs(stress.array).sum())
        tail = family.tail_bound(n)
        rows.append({"level": n, "partial_abs_sum": partial, "tail_bound": tail})
    final_tail = rows[-1]["tail_bound"]
    summable = math.isfinite(final_tail)
    return {
        "rows": rows,
        "summable": summable,
        "limit_window": None if not summable else [rows[-1]["partial_abs_sum"], rows[-1]["partial_abs_sum"] + final_tail],
    }


def infinite_energy_report(
    gen: Union[InfiniteFamily, GeneratorSpec, str],
    levels: Sequence[int],
) -> dict:
    """Partial stress-energy sums; finite iff bounded by partial + declared tail."""
    family = _resolve(gen)
    rows = []
    for n in levels:
        fw = _framework_of(family.truncation(n))
        stress = family.candidate_stress(n)
        lengths = np.array([fw.member_length(m) for m in fw.members])
        signed = float(np.dot(stress.array, lengths**2))
        absolute = float(np.dot(np.abs(stress.array), lengths**2))
        rows.append(
            {
                "level": n,
                "partial_energy": signed,
                "partial_abs_energy": absolute,
                "energy_tail_bound": family.energy_tail_bound(n),
            }
        )
    final_tail = rows[-1]["energy_tail_bound"]
    return {"rows": rows, "finite": math.isfinite(final_tail)}


def bps_probe(
    gen: Union[InfiniteFamily, GeneratorSpec, str],
    level: int,
    tol: ToleranceContext = DEFAULT_TOL,
    seed: int = 0,
    combos: int = 16,
) -> dict:
    """Evidence for bounded prestress stability at one truncation depth.

    Requires a summable candidate stress with finite energy; then the
    candidate stress must give a strictly positive energy value to every
    nontrivial flex-basis element and to random bounded combinations, and
    the cross terms the family declares orthogonal must vanish.  Anything
    short of that reports "not-supported".
    """
    family = _resolve(gen)
    report: dict = {"family": family.name, "level": level}
    tail = family.tail_bound(level)
    report["summable"] = math.isfinite(tail)
    if not report["summable"]:
        report.update(verdict="not-supported", reason="candidate stress is not summable")
        return report
    energy_tail = family.energy_tail_bound(level)
    report["energy_finite"] = math.isfinite(energy_tail)
    if not report["energy_finite"]:
        report.update(verdict="not-supported", reason="stress energy diverges")
        return report
    fw = _framework_of(family.truncation(level))
    if any(m.kind is not MemberKind.BAR for m in fw.members):
        report.update(verdict="not-supported", reason="flex-energy probe requires a bar framework")
        return report
    stress = family.candidate_stress(level)
    basis = flex_space(fw, tol)
    report["flex_dim"] = basis.dimension
    if basis.dimension == 0:
        report.update(verdict="bps-evidence", reason="first-order rigid truncation", flex_energies=[])
        return report
    energies = [
        energy_form(fw, stress, row.reshape(fw.n_vertices, fw.dimension), check_identity=False)
        for row in basis.basis
    ]
    rng = np.random.default_rng(seed)
    combo_energies = []
    for _ in range(combos):
        coeff = rng.uniform(-1.0, 1.0, size=basis.dimension)
        coeff /= max(np.linalg.norm(coeff), 1e-12)
        u = (coeff @ basis.basis).reshape(fw.n_vertices, fw.dimension)
        combo_energies.append(energy_form(fw, stress, u, check_identity=False))
    cross_terms = []
    flexes = family.candidate_flexes(level)
    for a, b in family.orthogonal_flex_pairs(level):
        cross_terms.append(energy_bilinear(fw, stress, flexes[a], flexes[b]))
    threshold = 10 * tol.cert_tol
    ok = (
        all(e >= threshold for e in energies)
        and all(e >= threshold for e in combo_energies)
        and all(abs(c) <= threshold for c in cross_terms)
    )
    report.update(
        flex_energies=energies,
        combo_energies=combo_energies,
        declared_cross_terms=cross_terms,
        verdict="bps-evidence" if ok else "not-supported",
        reason="" if ok else "a flex energy or declared cross term failed its bound",
    )
    return report


def uniform_structure_check(
    gen: Union[InfiniteFamily, GeneratorSpec, str],
    levels: Sequence[int],
) -> dict:
    """Measured degree and member-length maxima against the declared bounds.

    Exceeding a declared finite bound raises :class:`GeneratorError` (a
    generator bug); families that declare an unbounded quantity simply fail
    the check with a note.
    """
    family = _resolve(gen)
    max_degree = 0
    max_length = 0.0
    for n in levels:
        fw = _framework_of(family.truncation(n))
        if fw.member_count == 0:
            continue
        max_degree = max(max_degree, int(fw.degrees().max()))
        max_length = max(max_length, max(fw.member_length(m) for m in fw.members))
    note = ""
    if family.degree_bound is not None and max_degree > family.degree_bound:
        raise GeneratorError(f"measured degree {max_degree} exceeds declared bound {family.degree_bound}")
    if family.length_bound is not None and max_length > family.length_bound + 1e-9:
        raise GeneratorError(f"measured length {max_length} exceeds declared bound {family.length_bound}")
    ok = family.degree_bound is not None and family.length_bound is not None
    if not ok:
        note = "uniform structure fails"
    return {
        "max_degree": max_degree,
        "max_length": max_length,
        "degree_bound": family.degree_bound,
        "length_bound": family.length_bound,
        "pass": ok,
        "note": note,
    }


def strip_top_monotonicity(
    family: Strip,
    level: int,
    fix_bay: int,
    fix_value: float = -1.0,
    test_bays: Optional[Sequence[int]] = None,
) -> list[dict]:
    """LP certificates that a leftward top velocity propagates rightward.

    With the top joint of ``fix_bay`` pinned to x-velocity ``fix_value``,
    the maximum feasible x-velocity at each later top joint is computed
    over all member-constraint-satisfying fields; the claim is that it
    never exceeds ``fix_value``.
    """
    t = family.truncation(level)
    R = tensegrity_rigidity_matrix(t).matrix
    dn = R.shape[1]
    if test_bays is None:
        test_bays = range(fix_bay + 1, level + 1)
    fix_col = 2 * (family.top_vertex_id(level, fix_bay) - 1)  # x coordinate index
    results = []
    A_ub = np.hstack([-R, R])
    b_ub = np.zeros(R.shape[0])
    eq = np.zeros((1, 2 * dn))
    eq[0, fix_col] = 1.0
    eq[0, dn + fix_col] = -1.0
    for bay in test_bays:
        target = 2 * (family.top_vertex_id(level, bay) - 1)
        c = np.zeros(2 * dn)
        c[target] = -1.0
        c[dn + target] = 1.0  # minimise -(u+ - u-), i.e. maximise u_x
        res = solve_lp(c, A_ub=A_ub, b_ub=b_ub, A_eq=eq, b_eq=[fix_value], exact=False)
        if not res.optimal:
            results.append({"bay": bay, "status": res.status, "max_velocity": None})
            continue
        results.append({"bay": bay, "status": "optimal", "max_velocity": -res.objective})
    return results
