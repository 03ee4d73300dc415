import math
from fractions import Fraction as F

import numpy as np
import pytest

from rigicert.infinite import (
    DictionaryField,
    DyadicSquares,
    GeneratorError,
    Lacunary,
    SequenceSpace,
    SquareInSquare,
    Strip,
    TriangleTiling,
    bps_probe,
    fitted_ratio,
    generate,
    make_generator,
    sequence_norm,
    solve_symmetric_stress,
    strip_top_monotonicity,
    summability_report,
    infinite_energy_report,
    truncation_residual_profile,
    uniform_structure_check,
    weak_pairing_profile,
)
from rigicert.model import Tensegrity
from rigicert.prestress import prestress_stability
from rigicert.tensegrity import member_slack


# ---------------------------------------------------------------- sequence spaces


def test_sequence_space_duals():
    assert SequenceSpace.ell(2).dual() == SequenceSpace.ell(2)
    assert SequenceSpace.ell(1).dual() == SequenceSpace.ell_infinity()
    assert SequenceSpace.c0().dual() == SequenceSpace.ell(1)
    q = 3.0
    twice = SequenceSpace.ell(q).dual().dual()
    assert twice.tag == "ellq" and twice.q == pytest.approx(q)
    with pytest.raises(ValueError):
        SequenceSpace.ell(0.5)


def test_sequence_norms():
    assert sequence_norm([[3, 4]], SequenceSpace.ell(2)) == pytest.approx(5.0)
    blocks = [[1, 0]] * 7
    assert sequence_norm(blocks, SequenceSpace.c0()) == 1.0
    assert sequence_norm(blocks, SequenceSpace.ell(1)) == 7.0


def test_contraction_sup_norm_grows_with_radius():
    tr = TriangleTiling()
    sups = []
    for radius in (4, 8):
        fw = tr.truncation(radius).framework
        u = -0.5 * fw.placement_array
        sups.append(sequence_norm(u, SequenceSpace.c0()))
    assert sups[0] == pytest.approx(2.0)
    assert sups[1] == pytest.approx(4.0)  # R/2 at the boundary vertex (R, 0)
    assert sups[1] > sups[0]


# ---------------------------------------------------------------- generators


def test_level_zero_rejected():
    for family in ("triangle", "strip", "dyadic", "lacunary", "square_in_square"):
        with pytest.raises(ValueError, match="level"):
            generate(family, 0)


def test_lacunary_intervals():
    lac = Lacunary()
    fw = lac.truncation(2)
    xs = sorted(p[0] for p in fw.placements)
    assert xs == [-7, -3, -1, 0, 1, 3, 7]
    intervals = sorted(tuple(sorted((lac._coordinate(m.i), lac._coordinate(m.j)))) for m in fw.members)
    assert intervals == [(-7, -3), (-3, -1), (-1, 0), (0, 1), (1, 3), (3, 7)]
    # level L spans bars of length up to 2^L on each side
    fw3 = lac.truncation(3)
    assert max(abs(p[0]) for p in fw3.placements) == 15
    assert fw3.member_count == 8


def test_lacunary_stress_balances_interior_joints():
    lac = Lacunary()
    level = 4
    fw = lac.truncation(level)
    stress = lac.candidate_stress(level)
    assert stress.exact is not None
    # exact equilibrium at every interior joint, e.g. x = 1: 1*(1) + 1/2*(-2) = 0
    residuals = {}
    for v in range(1, fw.n_vertices + 1):
        residuals[v] = [F(0), F(0)]
    for w, m in zip(stress.exact, fw.members):
        pi = fw.rational_placements[m.i - 1]
        pj = fw.rational_placements[m.j - 1]
        for a in range(2):
            residuals[m.i][a] += w * (pi[a] - pj[a])
            residuals[m.j][a] += w * (pj[a] - pi[a])
    for v in lac.interior_vertex_ids(level):
        assert residuals[v] == [F(0), F(0)]


def test_lacunary_summability_and_energy():
    lac = Lacunary()
    levels = list(range(1, 11))
    rep = summability_report(lac, levels)
    assert rep["summable"]
    partial = rep["rows"][-1]["partial_abs_sum"]
    tail = rep["rows"][-1]["tail_bound"]
    assert abs(4.0 - partial) <= tail
    assert tail == pytest.approx(2.0 ** (-10 + 2))
    erep = infinite_energy_report(lac, levels)
    assert not erep["finite"]
    assert erep["rows"][-1]["partial_energy"] == 4094.0  # 2*(2^(N+1) - 1) at N = 10


def test_dyadic_level1_is_square_in_square():
    dy = DyadicSquares()
    fw = dy.truncation(1)
    assert fw.n_vertices == 8 and fw.member_count == 12
    assert fw.placements[0] == (-1.0, 1.0)
    assert fw.placements[4] == (-0.5, 0.5)


def test_dyadic_solved_stress_ratio_and_consistency():
    dy = DyadicSquares()
    sol5 = solve_symmetric_stress(dy, 5)
    assert sol5["stress_space_dim"] == 5
    assert sol5["in_space_residual"] <= 1e-10
    assert sol5["sign_consistent"]
    ratios = [
        sol5["square_values_exact"][k + 1] / sol5["square_values_exact"][k]
        for k in range(1, 4)
    ]
    assert all(abs(float(r) - sol5["fitted_ratio"]) <= 1e-6 for r in ratios)
    assert sol5["ratio_variation"] <= 1e-6
    sol7 = solve_symmetric_stress(dy, 7)
    for a, b in zip(sol5["square_values_exact"][1:5], sol7["square_values_exact"][1:5]):
        assert abs(float(a - b)) <= 1e-8
    # the report states both reference ratios and the balance-equation solution
    assert sol5["reference_ratios"] == {"four_fifths": 0.8, "two_fifths": 0.4}
    assert sol5["balance_equation"]["solution"] == pytest.approx(0.4)


def test_dyadic_residual_profile_strong_decay():
    dy = DyadicSquares()
    reports, summary = truncation_residual_profile(dy, range(1, 7), SequenceSpace.ell(1))
    norms = [r.residual_norm for r in reports]
    assert all(norms[i + 1] < norms[i] for i in range(len(norms) - 1))
    assert summary["strong_decay"]
    assert summary["fitted_ratio"] == pytest.approx(0.2, abs=1e-6)
    assert summary["lower_bound_ok"]


def test_dyadic_nesting_reports_consistent():
    """Shared members carry identical stress values across levels."""
    dy = DyadicSquares()
    s4 = dy.candidate_stress(4)
    s6 = dy.candidate_stress(6)
    fw4, fw6 = dy.truncation(4), dy.truncation(6)
    idx6 = {(m.i, m.j, m.kind): k for k, m in enumerate(fw6.members)}
    for m, v in zip(fw4.members, s4.values):
        assert v == pytest.approx(s6.values[idx6[(m.i, m.j, m.kind)]], abs=1e-12)


def test_dyadic_bps_probe():
    rep = bps_probe(DyadicSquares(), 4)
    assert rep["verdict"] == "bps-evidence"
    assert rep["flex_dim"] == 5
    assert all(e > 1e-7 for e in rep["flex_energies"])
    assert all(e > 1e-7 for e in rep["combo_energies"])
    assert all(abs(c) <= 1e-7 for c in rep["declared_cross_terms"])


def test_lacunary_bps_not_supported():
    rep = bps_probe(Lacunary(), 5)
    assert rep["summable"]
    assert not rep["energy_finite"]
    assert rep["verdict"] == "not-supported"


def test_square_in_square_probe_reduces_to_ps(square_in_square):
    rep = bps_probe(SquareInSquare(), 1)
    assert rep["verdict"] == "bps-evidence"
    assert prestress_stability(square_in_square).state == "certified_ps"


def test_triangle_tiling_interior_residual_and_flex():
    tr = TriangleTiling()
    level = 8
    tens = tr.truncation(level)
    fw = tens.framework
    stress = tr.candidate_stress(level)
    P = fw.placement_array
    res = np.zeros_like(P)
    for w, m in zip(stress.values, fw.members):
        d = P[m.i - 1] - P[m.j - 1]
        res[m.i - 1] += w * d
        res[m.j - 1] -= w * d
    interior = tr.interior_vertex_ids(level)
    assert interior
    worst = max(float(np.linalg.norm(res[v - 1])) for v in interior)
    assert worst <= 1e-12
    report = member_slack(tens, -0.5 * P)
    assert report.is_flex
    assert np.abs(report.raw_values() + 0.5).max() <= 1e-12


def test_strip_geometry_and_band_rigidity():
    st = Strip()
    tens = st.truncation(4)
    fw = tens.framework
    assert fw.n_vertices == 15
    # lower band alone (rows 0-1) is a first-order rigid tensegrity
    band_members = [
        m for m in fw.members
        if (m.i - 1) % 3 != 2 and (m.j - 1) % 3 != 2
    ]
    band_ids = sorted({v for m in band_members for v in m.pair})
    remap = {v: k + 1 for k, v in enumerate(band_ids)}
    from rigicert.model import framework_from_points
    band = framework_from_points(
        2,
        [fw.rational_placements[v - 1] for v in band_ids],
        [(remap[m.i], remap[m.j], m.kind) for m in band_members],
    )
    from rigicert.tensegrity import first_order_rigidity_direct
    cert = first_order_rigidity_direct(Tensegrity(band))
    assert cert.verdict == "first_order_rigid"


def test_strip_stress_interior_equilibrium_and_properness():
    st = Strip()
    level = 6
    tens = st.truncation(level)
    fw = tens.framework
    stress = st.candidate_stress(level)
    P = fw.placement_array
    res = np.zeros_like(P)
    for w, m in zip(stress.values, fw.members):
        d = P[m.i - 1] - P[m.j - 1]
        res[m.i - 1] += w * d
        res[m.j - 1] -= w * d
    # interior: every joint except the two boundary top joints balances exactly
    top_left = st.top_vertex_id(level, 0)
    top_right = st.top_vertex_id(level, level)
    for v in range(1, fw.n_vertices + 1):
        if v in (top_left, top_right):
            assert np.linalg.norm(res[v - 1]) == pytest.approx(1.0)
        else:
            assert np.linalg.norm(res[v - 1]) <= 1e-12
    assert st.proper_excluding_diagonals(level)


def test_strip_profiles():
    st = Strip()
    levels = list(range(1, 13))
    reports, summary = truncation_residual_profile(st, levels, SequenceSpace.ell(1))
    assert all(r.residual_sup == pytest.approx(1.0) for r in reports)
    assert not summary["strong_decay"]
    pair = weak_pairing_profile(st, levels)
    assert pair["weak_decay"]
    bump = pair["pairings"]["top_mid_bump"]
    assert bump[-1] == 0.0  # compact support: eventually exactly zero
    inverse = pair["pairings"]["top_inverse_bay"]
    assert abs(inverse[-1]) < abs(inverse[0])
    rep = summability_report(st, levels)
    assert not rep["summable"]


def test_strip_monotonicity_small():
    st = Strip()
    results = strip_top_monotonicity(st, 8, fix_bay=3)
    assert [r["bay"] for r in results] == list(range(4, 9))
    for r in results:
        assert r["status"] == "optimal"
        assert r["max_velocity"] <= -1.0 + 1e-8


def test_two_sided_strip_variant():
    st = Strip(two_sided=True)
    tens = st.truncation(3)
    xs = sorted({p[0] for p in tens.framework.placements})
    assert xs == [-3, -2, -1, 0, 1, 2, 3]
    # nesting holds for the two-sided ordering as well
    small = set((m.i, m.j, m.kind) for m in st.truncation(2).members)
    large = set((m.i, m.j, m.kind) for m in tens.members)
    assert small <= large


def test_two_sided_strip_residual_supported_at_moving_ends():
    """Unlike the one-sided strip, the two-sided variant has no permanent
    boundary joint: the truncation residual lives only at the two outermost
    top joints, and the default-dictionary pairings decay."""
    from rigicert.infinite import _framework_of, _vertex_residual

    st = Strip(two_sided=True)
    n = 4
    small = _framework_of(st.truncation(n))
    stress = st.candidate_stress(n)
    big = _framework_of(st.truncation(n + 1))
    residual = _vertex_residual(big, small.members, stress.values)
    nonzero = {v + 1 for v in range(len(residual)) if np.abs(residual[v]).max() > 1e-12}
    assert nonzero == {st.top_vertex_id(n, -n), st.top_vertex_id(n, n)}
    pair = weak_pairing_profile(st, range(1, 10))
    assert pair["weak_decay"]


def test_dictionary_validation_rejects_constant_field():
    dy = DyadicSquares()

    def constant(lv):
        fw = dy.truncation(lv)
        U = np.ones((fw.n_vertices, 2))
        return U

    bad_linf = DictionaryField("constant", SequenceSpace.ell_infinity(), constant)
    with pytest.raises(ValueError, match="outside the test space"):
        weak_pairing_profile(dy, range(1, 5), [bad_linf])
    bad_c0 = DictionaryField("constant", SequenceSpace.c0(), constant)
    with pytest.raises(ValueError, match="does not decay"):
        weak_pairing_profile(dy, range(1, 5), [bad_c0])


def test_uniform_structure_checks():
    assert uniform_structure_check(TriangleTiling(), [3, 6]) == {
        "max_degree": 6,
        "max_length": pytest.approx(1.0),
        "degree_bound": 6,
        "length_bound": 1.0,
        "pass": True,
        "note": "",
    }
    lac = uniform_structure_check(Lacunary(), [3, 5])
    assert lac["pass"] is False
    assert lac["note"] == "uniform structure fails"
    assert lac["max_degree"] <= 2
    st = uniform_structure_check(Strip(), [4, 6])
    assert st["pass"] is True
    assert st["max_length"] == pytest.approx(math.sqrt(2))


def test_uniform_structure_violation_raises():
    class Lying(TriangleTiling):
        degree_bound = 3

    with pytest.raises(GeneratorError, match="degree"):
        uniform_structure_check(Lying(), [3])


def test_nesting_invariant_all_families():
    for name in ("triangle", "strip", "dyadic", "lacunary", "square_in_square"):
        family = make_generator(name)
        for level in (1, 2, 3):
            small = family.truncation(level)
            big = family.truncation(level + 1)
            fw_small = small.framework if isinstance(small, Tensegrity) else small
            fw_big = big.framework if isinstance(big, Tensegrity) else big
            assert set((m.i, m.j, m.kind) for m in fw_small.members) <= set(
                (m.i, m.j, m.kind) for m in fw_big.members
            ), name
            shared = np.asarray(fw_big.placements[: fw_small.n_vertices])
            assert np.abs(shared - np.asarray(fw_small.placements)).max() <= 1e-12, name


def test_residuals_agree_in_larger_truncations():
    """The level-n residual is the same whether evaluated inside level n+1
    or level n+2 (the extra vertices carry no supported member)."""
    from rigicert.infinite import _framework_of, _vertex_residual

    for name in ("dyadic", "strip", "lacunary"):
        family = make_generator(name)
        n = 3
        small = _framework_of(family.truncation(n))
        stress = family.candidate_stress(n)
        big = _framework_of(family.truncation(n + 1))
        bigger = _framework_of(family.truncation(n + 2))
        r1 = _vertex_residual(big, small.members, stress.values)
        r2 = _vertex_residual(bigger, small.members, stress.values)
        assert np.abs(r2[: r1.shape[0]] - r1).max() <= 1e-12, name
        assert np.abs(r2[r1.shape[0] :]).max() == 0.0, name


def test_partial_sums_monotone():
    for name in ("strip", "dyadic", "lacunary"):
        family = make_generator(name)
        reports, _ = truncation_residual_profile(family, range(1, 7), SequenceSpace.ell(1))
        sums = [r.partial_abs_sum for r in reports]
        energies = [r.partial_abs_energy for r in reports]
        assert all(b >= a - 1e-12 for a, b in zip(sums, sums[1:])), name
        assert all(b >= a - 1e-12 for a, b in zip(energies, energies[1:])), name


def test_fitted_ratio_helper():
    geometric = [0.5**k for k in range(1, 11)]
    assert fitted_ratio(geometric) == pytest.approx(0.5, abs=1e-9)
    assert fitted_ratio([1.0] * 8) == pytest.approx(1.0)
    assert fitted_ratio([1.0, 0.5, 0.0, 0.0]) == 0.0


def test_lacunary_residual_is_constant_boundary_term():
    lac = Lacunary()
    reports, summary = truncation_residual_profile(lac, range(1, 8), SequenceSpace.ell(2))
    # boundary rows scale as 2^-N * 2^N = 1 on each side
    for r in reports:
        assert r.residual_sup == pytest.approx(1.0)
        assert r.residual_norm == pytest.approx(math.sqrt(2.0))
    assert not summary["strong_decay"]
