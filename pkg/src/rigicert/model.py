"""Domain types for bar-joint frameworks and cable-strut tensegrities.

A framework couples a placement of vertices in R^d with a list of typed
members (bars, cables, struts).  Coordinates may be given as decimal
numbers or exact rational literals such as ``"-1/2"``; both a float and,
when available, an exact :class:`fractions.Fraction` copy of every
coordinate are kept so that downstream rank and LP computations can run
exactly on rational inputs.

All types are immutable after construction and safe to share across
concurrent workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Sequence, Union

import numpy as np

__all__ = [
    "MemberKind",
    "Member",
    "Framework",
    "Tensegrity",
    "VelocityField",
    "StressField",
    "ToleranceContext",
    "DEFAULT_TOL",
    "Diagnostic",
    "FrameworkError",
    "ParseError",
    "ValidationError",
    "parse_framework",
    "serialize_framework",
    "validate",
    "expand_to_cable_strut",
    "framework_from_points",
]

# Unicode minus shows up in hand-edited files; normalise to ASCII.
_MINUS = "−"

Rational = Fraction
CoordinateToken = Union[int, float, str]


class FrameworkError(ValueError):
    """Base class for framework construction failures."""


class ParseError(FrameworkError):
    """Malformed framework file.  Carries line/field context when known."""

    def __init__(self, message: str, line: Optional[int] = None, field_name: Optional[str] = None):
        self.line = line
        self.field_name = field_name
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field_name is not None:
            where.append(f"field {field_name!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


class ValidationError(FrameworkError):
    """A structural invariant of a framework does not hold."""


class MemberKind(str, Enum):
    BAR = "bar"
    CABLE = "cable"
    STRUT = "strut"

    @property
    def sign(self) -> int:
        """Row sign in the tensegrity rigidity matrix: -1 for cables, +1 otherwise."""
        return -1 if self is MemberKind.CABLE else 1


@dataclass(frozen=True, order=True)
class Member:
    """A typed edge between two distinct 1-based vertex ids, stored with i < j."""

    i: int
    j: int
    kind: MemberKind

    def __post_init__(self):
        if self.i == self.j:
            raise ValidationError(f"member ({self.i},{self.j},{self.kind.value}) joins a vertex to itself")
        if self.i < 1 or self.j < 1:
            raise ValidationError(f"member ({self.i},{self.j},{self.kind.value}) uses non-positive vertex ids")
        if self.i > self.j:
            lo, hi = self.j, self.i
            object.__setattr__(self, "i", lo)
            object.__setattr__(self, "j", hi)

    @property
    def pair(self) -> tuple[int, int]:
        return (self.i, self.j)

    def label(self) -> str:
        return f"({self.i},{self.j},{self.kind.value})"


def _coordinate_from_token(token: CoordinateToken) -> tuple[float, Optional[Fraction]]:
    """Interpret a JSON coordinate token as (float value, exact rational or None)."""
    if isinstance(token, bool):
        raise ParseError(f"coordinate {token!r} is not a number")
    if isinstance(token, int):
        return float(token), Fraction(token)
    if isinstance(token, float):
        return token, Fraction(token)
    if isinstance(token, str):
        text = token.replace(_MINUS, "-").strip()
        try:
            frac = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"coordinate {token!r} is not a rational literal: {exc}") from exc
        return float(frac), frac
    raise ParseError(f"coordinate {token!r} has unsupported type {type(token).__name__}")


def _token_from_value(value: Union[int, float, Fraction]) -> CoordinateToken:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return int(value)
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, int):
        return value
    return float(value)


def _sorted_members(members: Iterable[Member]) -> tuple[Member, ...]:
    return tuple(sorted(members, key=lambda m: (m.i, m.j, m.kind.value)))


@dataclass(frozen=True)
class Framework:
    """A placement of n vertices in R^d together with typed members.

    ``placements`` is the float view; ``rational_placements`` is present iff
    every coordinate has an exact rational representation.  Members are kept
    in canonical order: sorted by (min id, max id, kind).
    """

    dimension: int
    placements: tuple[tuple[float, ...], ...]
    members: tuple[Member, ...]
    rational_placements: Optional[tuple[tuple[Fraction, ...], ...]] = None
    coordinate_tokens: Optional[tuple[tuple[CoordinateToken, ...], ...]] = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValidationError(f"dimension must be >= 1, got {self.dimension}")
        for v, point in enumerate(self.placements, start=1):
            if len(point) != self.dimension:
                raise ValidationError(f"vertex {v} has {len(point)} coordinates, expected {self.dimension}")
        object.__setattr__(self, "members", _sorted_members(self.members))

    @property
    def n_vertices(self) -> int:
        return len(self.placements)

    @property
    def member_count(self) -> int:
        return len(self.members)

    @property
    def is_rational(self) -> bool:
        return self.rational_placements is not None

    @cached_property
    def placement_array(self) -> np.ndarray:
        arr = np.asarray(self.placements, dtype=float).reshape(self.n_vertices, self.dimension)
        arr.flags.writeable = False
        return arr

    def point(self, vertex_id: int) -> np.ndarray:
        return self.placement_array[vertex_id - 1]

    def member_length(self, member: Member) -> float:
        return float(np.linalg.norm(self.point(member.i) - self.point(member.j)))

    def degrees(self) -> np.ndarray:
        """Vertex degrees of the underlying simple graph (pairs counted once)."""
        deg = np.zeros(self.n_vertices, dtype=int)
        for pair in {m.pair for m in self.members}:
            deg[pair[0] - 1] += 1
            deg[pair[1] - 1] += 1
        return deg

    def with_members(self, members: Iterable[Member]) -> "Framework":
        return Framework(
            dimension=self.dimension,
            placements=self.placements,
            members=tuple(members),
            rational_placements=self.rational_placements,
            coordinate_tokens=self.coordinate_tokens,
        )

    def kinds(self) -> set[MemberKind]:
        return {m.kind for m in self.members}


@dataclass(frozen=True)
class Tensegrity:
    """A framework whose members are cables and struts only.

    The same unordered pair may appear once as a cable and once as a strut
    (the expansion of a bar); bars themselves are not allowed.
    """

    framework: Framework

    def __post_init__(self):
        seen: dict[tuple[int, int, MemberKind], Member] = {}
        for m in self.framework.members:
            if m.kind is MemberKind.BAR:
                raise ValidationError(f"tensegrity contains bar member {m.label()}")
            key = (m.i, m.j, m.kind)
            if key in seen:
                raise ValidationError(f"duplicate member {m.label()} in tensegrity")
            seen[key] = m

    @property
    def members(self) -> tuple[Member, ...]:
        return self.framework.members

    @property
    def dimension(self) -> int:
        return self.framework.dimension

    @property
    def n_vertices(self) -> int:
        return self.framework.n_vertices

    @property
    def member_count(self) -> int:
        return self.framework.member_count

    @property
    def placement_array(self) -> np.ndarray:
        return self.framework.placement_array

    def bar_closure(self) -> Framework:
        """The bar-joint framework on the same placement: one bar per graph edge."""
        pairs = sorted({m.pair for m in self.members})
        bars = [Member(i, j, MemberKind.BAR) for i, j in pairs]
        return self.framework.with_members(bars)


@dataclass(frozen=True)
class VelocityField:
    """One velocity vector per vertex."""

    values: tuple[tuple[float, ...], ...]

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "VelocityField":
        return cls(tuple(tuple(float(x) for x in row) for row in np.atleast_2d(arr)))

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.asarray(self.values, dtype=float)
        arr.flags.writeable = False
        return arr

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class StressField:
    """One scalar per member, aligned with the framework's canonical member order."""

    values: tuple[float, ...]
    exact: Optional[tuple[Fraction, ...]] = None

    @classmethod
    def from_values(cls, values: Sequence[Union[float, Fraction]]) -> "StressField":
        if all(isinstance(v, (Fraction, int)) for v in values):
            exact = tuple(Fraction(v) for v in values)
            return cls(tuple(float(v) for v in exact), exact)
        return cls(tuple(float(v) for v in values), None)

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.asarray(self.values, dtype=float)
        arr.flags.writeable = False
        return arr

    def __len__(self) -> int:
        return len(self.values)

    def sign_admissible(self, members: Sequence[Member], tol: float = 0.0) -> bool:
        """Nonpositive on cables, nonnegative on struts; bars are unconstrained."""
        for w, m in zip(self.values, members):
            if m.kind is MemberKind.CABLE and w > tol:
                return False
            if m.kind is MemberKind.STRUT and w < -tol:
                return False
        return True


@dataclass(frozen=True)
class ToleranceContext:
    """Numeric policy shared by every module.

    rank_tol scales the singular-value cutoff for numerical rank, cert_tol is
    the residual threshold when re-verifying certificates, and fd_step is the
    finite-difference step for derivative checks.
    """

    rank_tol: float = 1e-9
    cert_tol: float = 1e-8
    fd_step: float = 1e-4

    def __post_init__(self):
        if not (self.rank_tol > 0 and self.cert_tol > 0 and self.fd_step > 0):
            raise ValidationError("tolerances must be strictly positive")
        if not self.rank_tol < 1e-6:
            raise ValidationError(f"rank_tol must be below 1e-6, got {self.rank_tol}")


DEFAULT_TOL = ToleranceContext()


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}:{self.code}: {self.message}"


_VALID_KINDS = {k.value for k in MemberKind}


def parse_framework(text: str) -> Framework:
    """Parse the JSON framework format and return a validated framework.

    Raises :class:`ParseError` on malformed input and :class:`ValidationError`
    when a member violates a structural invariant.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc

    if not isinstance(data, dict):
        raise ParseError("top-level value must be an object")
    for key in ("dimension", "vertices", "members"):
        if key not in data:
            raise ParseError("missing required key", field_name=key)

    dimension = data["dimension"]
    if not isinstance(dimension, int) or dimension < 1:
        raise ParseError(f"dimension must be a positive integer, got {dimension!r}", field_name="dimension")

    vertices = data["vertices"]
    if not isinstance(vertices, list) or not vertices:
        raise ParseError("vertices must be a non-empty list", field_name="vertices")

    floats: list[tuple[float, ...]] = []
    rationals: list[tuple[Fraction, ...]] = []
    tokens: list[tuple[CoordinateToken, ...]] = []
    all_rational = True
    for v, row in enumerate(vertices, start=1):
        if not isinstance(row, list) or len(row) != dimension:
            raise ParseError(f"vertex {v} must be a list of {dimension} coordinates", field_name="vertices")
        fl, ra, tk = [], [], []
        for token in row:
            value, frac = _coordinate_from_token(token)
            fl.append(value)
            ra.append(frac)
            tk.append(token)
            if frac is None:
                all_rational = False
        floats.append(tuple(fl))
        rationals.append(tuple(ra))
        tokens.append(tuple(tk))

    raw_members = data["members"]
    if not isinstance(raw_members, list):
        raise ParseError("members must be a list", field_name="members")
    members: list[Member] = []
    seen: set[tuple[int, int, str]] = set()
    for idx, entry in enumerate(raw_members, start=1):
        if not isinstance(entry, dict):
            raise ParseError(f"member #{idx} must be an object", field_name="members")
        try:
            i, j, kind = entry["i"], entry["j"], entry["kind"]
        except KeyError as exc:
            raise ParseError(f"member #{idx} is missing key {exc.args[0]!r}", field_name="members") from exc
        if not isinstance(i, int) or not isinstance(j, int):
            raise ParseError(f"member #{idx} ids must be integers", field_name="members")
        if kind not in _VALID_KINDS:
            raise ParseError(f"member #{idx} kind {kind!r} is not one of {sorted(_VALID_KINDS)}", field_name="members")
        member = Member(i, j, MemberKind(kind))
        key = (member.i, member.j, member.kind.value)
        if key in seen:
            raise ValidationError(f"duplicate member {member.label()}")
        seen.add(key)
        members.append(member)

    framework = Framework(
        dimension=dimension,
        placements=tuple(floats),
        members=tuple(members),
        rational_placements=tuple(rationals) if all_rational else None,
        coordinate_tokens=tuple(tokens),
    )
    errors = [d for d in validate(framework) if d.severity == "error"]
    if errors:
        raise ValidationError(str(errors[0]))
    return framework


def serialize_framework(framework: Framework) -> str:
    """Canonical serialization: members sorted, coordinates emitted as given."""
    if framework.coordinate_tokens is not None:
        vertex_rows = [list(row) for row in framework.coordinate_tokens]
    elif framework.rational_placements is not None:
        vertex_rows = [[_token_from_value(c) for c in row] for row in framework.rational_placements]
    else:
        vertex_rows = [[float(c) for c in row] for row in framework.placements]
    payload = {
        "dimension": framework.dimension,
        "vertices": vertex_rows,
        "members": [{"i": m.i, "j": m.j, "kind": m.kind.value} for m in framework.members],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def validate(framework: Framework, tol: ToleranceContext = DEFAULT_TOL) -> list[Diagnostic]:
    """Return diagnostics for every violated invariant; empty iff the framework is valid.

    Repeated placement points that no member uses are reported as warnings,
    not errors.
    """
    diags: list[Diagnostic] = []
    n = framework.n_vertices
    seen: set[tuple[int, int, MemberKind]] = set()
    used: set[int] = set()
    for m in framework.members:
        if m.j > n:
            diags.append(Diagnostic("error", "missing-vertex", f"member {m.label()} references vertex {m.j} but only {n} vertices exist"))
            continue
        used.update(m.pair)
        key = (m.i, m.j, m.kind)
        if key in seen:
            diags.append(Diagnostic("error", "duplicate-member", f"duplicate member {m.label()}"))
        seen.add(key)
        if framework.member_length(m) <= tol.cert_tol:
            diags.append(Diagnostic("error", "zero-length", f"member {m.label()} has zero length: endpoints coincide"))

    coords: dict[tuple[float, ...], int] = {}
    for v in range(1, n + 1):
        point = tuple(framework.placements[v - 1])
        if point in coords and (v not in used or coords[point] not in used):
            diags.append(Diagnostic("warning", "repeated-point", f"vertices {coords[point]} and {v} share placement {point}"))
        else:
            coords.setdefault(point, v)
    return diags


def expand_to_cable_strut(framework: Framework) -> Tensegrity:
    """Replace every bar by a cable plus a strut on the same pair.

    Cables and struts pass through unchanged; vertex set and placements are
    preserved exactly.  Idempotent on bar-free input.
    """
    members: list[Member] = []
    for m in framework.members:
        if m.kind is MemberKind.BAR:
            members.append(Member(m.i, m.j, MemberKind.CABLE))
            members.append(Member(m.i, m.j, MemberKind.STRUT))
        else:
            members.append(m)
    return Tensegrity(framework.with_members(members))


def framework_from_points(
    dimension: int,
    points: Sequence[Sequence[Union[int, float, Fraction]]],
    members: Iterable[tuple[int, int, MemberKind]],
    exact: bool = True,
) -> Framework:
    """Build a framework from in-memory coordinates.

    With ``exact=True`` (and int/Fraction coordinates) the rational copy is
    kept; pass ``exact=False`` for placements that are genuinely irrational.
    """
    floats, rationals, tokens = [], [], []
    all_rational = exact
    for row in points:
        fl, ra, tk = [], [], []
        for c in row:
            if exact and isinstance(c, (int, Fraction)):
                frac = Fraction(c)
                fl.append(float(frac))
                ra.append(frac)
                tk.append(_token_from_value(frac))
            else:
                all_rational = False
                fl.append(float(c))
                ra.append(None)
                tk.append(float(c))
        floats.append(tuple(fl))
        rationals.append(tuple(ra))
        tokens.append(tuple(tk))
    return Framework(
        dimension=dimension,
        placements=tuple(floats),
        members=tuple(Member(i, j, kind) for i, j, kind in members),
        rational_placements=tuple(rationals) if all_rational else None,
        coordinate_tokens=tuple(tokens),
    )
