"""Seeded randomized property suites.

Each suite runs a fixed number of trials from a seeded generator, verifies
every certificate it receives, and reports pass/fail counts with a short
description of any failure.  The CLI exposes them under ``oracle`` and the
acceptance tests pin their trial counts and tolerances.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .cones import cone_project, dichotomy, double_dual_oracle
from .model import DEFAULT_TOL, MemberKind, StressField, Tensegrity, ToleranceContext, framework_from_points
from .prestress import second_derivative_check, energy_form, stress_matrix, stress_space
from .tensegrity import equilibrium_residual, first_order_rigidity_direct, roth_whiteley_certify

__all__ = [
    "run_dichotomy_suite",
    "run_projection_suite",
    "run_double_dual_suite",
    "run_roth_whiteley_suite",
    "run_energy_suite",
    "random_integer_matrix",
    "random_tensegrity",
    "random_framework",
]


def random_integer_matrix(rng: np.random.Generator, max_dim: int = 6, max_entry: int = 3) -> np.ndarray:
    m = int(rng.integers(1, max_dim + 1))
    k = int(rng.integers(1, max_dim + 1))
    return rng.integers(-max_entry, max_entry + 1, size=(m, k)).astype(float)


def run_dichotomy_suite(trials: int, seed: int = 0, tol: ToleranceContext = DEFAULT_TOL) -> dict:
    """Random integer matrices: exactly one dichotomy branch must be feasible,
    certificates must re-verify, and the float and exact paths must agree."""
    rng = np.random.default_rng(seed)
    passed = 0
    failures: list[str] = []
    for t in range(trials):
        A = random_integer_matrix(rng)
        problem = f"trial {t} shape {A.shape}"
        try:
            res_exact = dichotomy(A, tol, exact=True)
            res_float = dichotomy(A, tol, exact=False)
        except Exception as exc:  # inconsistency is a failure, not a crash
            failures.append(f"{problem}: {exc}")
            continue
        ok = res_exact.branch == res_float.branch
        if res_exact.branch == "positive_left_kernel":
            mu = np.array([Fraction(x) for x in res_exact.vector], dtype=object)
            exact_res = [sum(m * Fraction(a) for m, a in zip(mu, A[:, c])) for c in range(A.shape[1])]
            ok = ok and all(v == 0 for v in exact_res) and all(m >= 1 for m in mu)
            ok = ok and res_float.certificate_residual <= 1e-9 * max(1.0, float(np.abs(A).max()))
        else:
            u = np.asarray(res_exact.vector, dtype=float)
            image = A @ u
            ok = ok and image.min() >= -1e-9 and image.max() >= 10 * tol.cert_tol
        if ok:
            passed += 1
        else:
            failures.append(f"{problem}: certificate mismatch ({res_exact.branch} vs {res_float.branch})")
    return {"suite": "dichotomy", "trials": trials, "passed": passed, "failed": trials - passed, "failures": failures[:5]}


def run_projection_suite(
    trials: int,
    seed: int = 0,
    tol: ToleranceContext = DEFAULT_TOL,
    dim: int = 4,
    n_generators: int = 6,
    optimality_samples: int = 50,
) -> dict:
    """Random polyhedral cones and points: the projection certificate must
    satisfy the right-angle identity, the separation inequalities, and beat
    random cone points on distance."""
    rng = np.random.default_rng(seed)
    passed = 0
    failures: list[str] = []
    for t in range(trials):
        gens = rng.normal(size=(n_generators, dim))
        w = 2.0 * rng.normal(size=dim)
        proj = cone_project(gens, w, tol)
        y = proj.separating_normal
        x_star = proj.point
        scale = max(1.0, float(np.abs(gens).max()), float(np.abs(w).max())) ** 2
        right_angle = abs(float(y @ x_star)) <= 1e-9 * scale
        separation = min(float(g @ y) for g in gens) >= -1e-9 * scale
        strict = True
        if proj.distance > tol.cert_tol:
            strict = float(w @ y) < 0
        optimal = True
        for _ in range(optimality_samples):
            coeff = np.abs(rng.normal(size=n_generators))
            x = coeff @ gens
            if np.linalg.norm(x - w) < np.linalg.norm(x_star - w) - 1e-9:
                optimal = False
                break
        if right_angle and separation and strict and optimal:
            passed += 1
        else:
            failures.append(
                f"trial {t}: right_angle={right_angle} separation={separation} strict={strict} optimal={optimal}"
            )
    return {"suite": "projection", "trials": trials, "passed": passed, "failed": trials - passed, "failures": failures[:5]}


def run_double_dual_suite(trials: int, seed: int = 0, tol: ToleranceContext = DEFAULT_TOL) -> dict:
    """Membership equivalence x in C <=> all dual pairings nonnegative,
    aggregated over a family of seeded cones until `trials` samples ran."""
    rng = np.random.default_rng(seed)
    remaining = trials
    passed = failed = 0
    failures: list[str] = []
    cone_index = 0
    while remaining > 0:
        dim = int(rng.integers(2, 5))
        n_gen = int(rng.integers(1, 7))
        gens = rng.integers(-2, 3, size=(n_gen, dim)).astype(float)
        if not np.any(np.linalg.norm(gens, axis=1) > 0):
            continue
        batch = min(remaining, 10)
        sub_seed = int(rng.integers(0, 2**31))
        report = double_dual_oracle(gens, trials=batch, seed=sub_seed, tol=tol)
        passed += report["passed"]
        failed += report["failed"]
        if report["failed"]:
            failures.append(f"cone {cone_index}: {report['failures']}")
        remaining -= batch
        cone_index += 1
    return {"suite": "doubledual", "trials": trials, "passed": passed, "failed": failed, "failures": failures[:5]}


def random_framework(rng: np.random.Generator, max_vertices: int = 6, coord_range: int = 3, denominator: int = 1):
    """Random bar framework in the plane on distinct rational points.

    ``denominator`` scales the integer grid down; the finite-difference
    suite uses a smaller geometric scale so roundoff in the second
    difference stays well under its tolerance.
    """
    n = int(rng.integers(3, max_vertices + 1))
    while True:
        pts = [tuple(int(c) for c in rng.integers(-coord_range, coord_range + 1, size=2)) for _ in range(n)]
        if len(set(pts)) == n:
            break
    if denominator != 1:
        pts = [tuple(Fraction(c, denominator) for c in p) for p in pts]
    members = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < 0.55:
                members.append((i, j, MemberKind.BAR))
    if not members:
        members.append((1, 2, MemberKind.BAR))
    return framework_from_points(2, pts, members, exact=True)


def random_tensegrity(rng: np.random.Generator, max_vertices: int = 6, coord_range: int = 3) -> Tensegrity:
    """Random cable-strut tensegrity on distinct integer points; each chosen
    pair becomes a cable, a strut, or a cable-strut pair."""
    n = int(rng.integers(3, max_vertices + 1))
    while True:
        pts = [tuple(int(c) for c in rng.integers(-coord_range, coord_range + 1, size=2)) for _ in range(n)]
        if len(set(pts)) == n:
            break
    members: list[tuple[int, int, MemberKind]] = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() >= 0.7:
                continue
            choice = rng.random()
            if choice < 0.25:
                members.append((i, j, MemberKind.CABLE))
            elif choice < 0.5:
                members.append((i, j, MemberKind.STRUT))
            else:
                members.append((i, j, MemberKind.CABLE))
                members.append((i, j, MemberKind.STRUT))
    if not members:
        members.append((1, 2, MemberKind.CABLE))
        members.append((1, 2, MemberKind.STRUT))
    return Tensegrity(framework_from_points(2, pts, members, exact=True))


def run_roth_whiteley_suite(trials: int, seed: int = 0, tol: ToleranceContext = DEFAULT_TOL) -> dict:
    """Direct-cone and stress-certificate rigidity verdicts must agree on
    every random tensegrity, and rigid certificates must re-verify."""
    rng = np.random.default_rng(seed)
    passed = 0
    failures: list[str] = []
    rigid_count = 0
    for t in range(trials):
        tens = random_tensegrity(rng)
        try:
            cert = roth_whiteley_certify(tens, tol)
            direct = first_order_rigidity_direct(tens, tol)
        except Exception as exc:
            failures.append(f"trial {t}: {exc}")
            continue
        ok = cert.verdict == direct.verdict
        if cert.rigid:
            rigid_count += 1
            stress = cert.proper_stress
            ok = ok and stress is not None
            if stress is not None:
                ok = ok and min(abs(v) for v in stress.values) >= 1 - 1e-12
                ok = ok and equilibrium_residual(tens, stress) <= 1e-8
                ok = ok and stress.sign_admissible(tens.members)
        else:
            witness = cert.witness_flex
            ok = ok and witness is not None
            if witness is not None:
                from .tensegrity import member_slack

                report = member_slack(tens, witness, tol)
                ok = ok and report.is_flex
        if ok:
            passed += 1
        else:
            failures.append(f"trial {t}: verdicts {cert.verdict} / {direct.verdict}")
    return {
        "suite": "roth_whiteley",
        "trials": trials,
        "passed": passed,
        "failed": trials - passed,
        "rigid_count": rigid_count,
        "failures": failures[:5],
    }


def run_energy_suite(trials: int, seed: int = 0, tol: ToleranceContext = DEFAULT_TOL) -> dict:
    """Finite-difference and quadratic-form identities for the stress energy.

    Per trial: the second central difference matches twice the energy form
    to 1e-6 relative, the energy form matches the stress-matrix quadratic
    to 1e-10, and when an equilibrium stress exists its first central
    difference at the placement vanishes to 1e-6.
    """
    rng = np.random.default_rng(seed)
    passed = 0
    failures: list[str] = []
    for t in range(trials):
        fw = random_framework(rng, denominator=4)
        values = rng.uniform(-1.0, 1.0, size=fw.member_count)
        stress = StressField(tuple(float(v) for v in values))
        u = rng.normal(size=(fw.n_vertices, fw.dimension))
        u /= max(np.linalg.norm(u), 1e-12)
        report = second_derivative_check(fw, stress, fw.placement_array, u, tol=tol, equilibrium=False)
        ok = report.abs_error <= 1e-6 * max(1.0, abs(report.analytic))
        form = energy_form(fw, stress, u, check_identity=False)
        quad = stress_matrix(fw, stress).quadratic(np.asarray(u))
        ok = ok and abs(form - quad) <= 1e-10 * max(1.0, abs(form), abs(quad))
        space = stress_space(fw, tol)
        if space.dimension > 0:
            eq_stress = StressField(tuple(float(x) for x in space.basis[0]))
            eq_report = second_derivative_check(fw, eq_stress, fw.placement_array, u, tol=tol, equilibrium=True)
            ok = ok and abs(eq_report.first_difference) <= 1e-6
        if ok:
            passed += 1
        else:
            failures.append(f"trial {t}: fd error {report.abs_error}")
    return {"suite": "energy", "trials": trials, "passed": passed, "failed": trials - passed, "failures": failures[:5]}
