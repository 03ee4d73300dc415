import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import normalized_sis_stress, paper_w, paper_z
from oracles import rational_left_nullspace

from rigicert.model import MemberKind, StressField, framework_from_points
from rigicert.prestress import (
    energy_bilinear,
    energy_form,
    prestress_stability,
    reduced_flex_form,
    second_derivative_check,
    second_order_extend,
    stress_energy,
    stress_matrix,
    stress_space,
    wps_probe,
)
from rigicert.rigidity import bar_rigidity_matrix, flex_space
from rigicert.suites import random_framework


def test_stress_space_single_bar():
    fw = framework_from_points(1, [(0,), (1,)], [(1, 2, MemberKind.BAR)])
    assert stress_space(fw).dimension == 0


def test_stress_space_square_cycle(square_cycle):
    assert stress_space(square_cycle).dimension == 0


def test_stress_space_square_in_square(square_in_square):
    space = stress_space(square_in_square)
    assert space.dimension == 1
    stress = normalized_sis_stress(square_in_square)
    # independent exact-rational left-kernel oracle
    rows = bar_rigidity_matrix(square_in_square).exact_rows(square_in_square)
    kernel = rational_left_nullspace(rows)
    assert len(kernel) == 1
    idx12 = [m.pair for m in square_in_square.members].index((1, 2))
    exact = [-(x / kernel[0][idx12]) for x in kernel[0]]
    for v, e in zip(stress.values, exact):
        assert v == pytest.approx(float(e), abs=1e-10)
    by_pair = dict(zip((m.pair for m in square_in_square.members), exact))
    assert by_pair[(1, 2)] == -1 and by_pair[(1, 5)] == 4 and by_pair[(5, 6)] == 2


def test_stress_matrix_one_edge():
    fw = framework_from_points(1, [(0,), (1,)], [(1, 2, MemberKind.BAR)])
    omega = stress_matrix(fw, StressField((1.0,)))
    assert omega.entries.tolist() == [[1.0, -1.0], [-1.0, 1.0]]


def test_stress_matrix_zero():
    fw = framework_from_points(1, [(0,), (1,)], [(1, 2, MemberKind.BAR)])
    omega = stress_matrix(fw, StressField((0.0,)))
    assert np.all(omega.entries == 0.0)


def test_stress_matrix_row_sums_and_quadratic(square_in_square):
    stress = normalized_sis_stress(square_in_square)
    omega = stress_matrix(square_in_square, stress)
    assert np.abs(omega.entries.sum(axis=0)).max() <= 1e-10
    assert np.abs(omega.entries.sum(axis=1)).max() <= 1e-10
    rng = np.random.default_rng(0)
    for _ in range(100):
        u = rng.normal(size=(8, 2))
        quad = omega.quadratic(u)
        form = energy_form(square_in_square, stress, u, check_identity=False)
        assert abs(quad - form) <= 1e-10 * max(1.0, abs(form))


@given(
    st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4),
    st.lists(st.floats(-2, 2, allow_nan=False), min_size=8, max_size=8),
)
@settings(max_examples=60, deadline=None)
def test_quadratic_identity_property(square_values, direction_values):
    """energy_form equals the stress-matrix quadratic, and the stress matrix
    has vanishing row and column sums, for arbitrary stresses and fields."""
    fw = framework_from_points(
        2, [(0, 0), (2, 0), (2, 2), (0, 2)],
        [(1, 2, MemberKind.BAR), (2, 3, MemberKind.BAR), (3, 4, MemberKind.BAR), (1, 4, MemberKind.BAR)],
    )
    stress = StressField(tuple(square_values))
    omega = stress_matrix(fw, stress)
    assert np.abs(omega.entries.sum(axis=0)).max() <= 1e-12
    assert np.abs(omega.entries.sum(axis=1)).max() <= 1e-12
    u = np.asarray(direction_values).reshape(4, 2)
    form = energy_form(fw, stress, u, check_identity=False)
    quad = omega.quadratic(u)
    assert abs(form - quad) <= 1e-10 * max(1.0, abs(form), abs(quad))


def test_stress_energy_one_edge():
    fw = framework_from_points(1, [(0,), (3,)], [(1, 2, MemberKind.BAR)])
    assert stress_energy(fw, StressField((1.0,))) == 9.0
    assert stress_energy(fw, StressField((0.0,))) == 0.0


def test_stress_energy_exact_matches_float(square_in_square):
    stress = StressField.from_values([F(-1)] * 4 + [F(4)] * 4 + [F(2)] * 4)
    # reorder to canonical member order
    by_pair = {}
    outer = {(1, 2), (2, 3), (3, 4), (1, 4)}
    connectors = {(1, 5), (2, 6), (3, 7), (4, 8)}
    values = []
    for m in square_in_square.members:
        values.append(F(-1) if m.pair in outer else F(4) if m.pair in connectors else F(2))
    stress = StressField.from_values(values)
    exact = stress_energy(square_in_square, stress, exact=True)
    approx = stress_energy(square_in_square, stress)
    assert exact == F(0)  # equilibrium stresses have zero placement energy
    assert approx == pytest.approx(float(exact), abs=1e-12)


def test_energy_form_square_in_square_values(square_in_square):
    stress = normalized_sis_stress(square_in_square)
    z, w = paper_z(), paper_w()
    assert energy_form(square_in_square, stress, z) == pytest.approx(2.0, abs=1e-10)
    assert energy_form(square_in_square, stress, w) == pytest.approx(64.0, abs=1e-10)
    # Term-by-term: edges (2,3) and (1,4) contribute -1 each, (6,7) and (5,8) +2 each.
    contributions = {}
    P = square_in_square.placement_array
    for m, v in zip(square_in_square.members, stress.values):
        du = z[m.i - 1] - z[m.j - 1]
        contributions[m.pair] = v * float(du @ du)
    assert contributions[(2, 3)] == pytest.approx(-1.0)
    assert contributions[(1, 4)] == pytest.approx(-1.0)
    assert contributions[(6, 7)] == pytest.approx(2.0)
    assert contributions[(5, 8)] == pytest.approx(2.0)


def test_energy_cross_term_value(square_in_square):
    """The z/w cross term is 4*omega_67 = 8: members (6,7) and (5,8) carry
    parallel difference vectors (1,0) and (2,0) under z and w."""
    stress = normalized_sis_stress(square_in_square)
    z, w = paper_z(), paper_w()
    cross = energy_bilinear(square_in_square, stress, z, w)
    assert cross == pytest.approx(8.0, abs=1e-10)
    polarization = (
        energy_form(square_in_square, stress, z + w)
        - energy_form(square_in_square, stress, z)
        - energy_form(square_in_square, stress, w)
    )
    assert polarization == pytest.approx(2 * cross, abs=1e-9)


def test_second_derivative_exact_quadratic():
    fw = framework_from_points(1, [(0,), (1,)], [(1, 2, MemberKind.BAR)])
    u = np.array([[1.0], [0.0]])
    report = second_derivative_check(fw, StressField((1.0,)), fw.placement_array, u, equilibrium=False)
    assert report.analytic == pytest.approx(2.0)
    # The energy is a quadratic in t, so the only finite-difference error is roundoff.
    assert report.finite_difference == pytest.approx(2.0, abs=1e-6)


def test_second_derivative_square_in_square_z(square_in_square):
    stress = normalized_sis_stress(square_in_square)
    report = second_derivative_check(square_in_square, stress, square_in_square.placement_array, paper_z())
    assert report.analytic == pytest.approx(4.0, abs=1e-9)
    assert abs(report.first_difference) <= 1e-6
    assert report.first_difference_ok


def test_reduced_form_paper_basis(square_in_square):
    stress = normalized_sis_stress(square_in_square)
    M = reduced_flex_form(square_in_square, stress, [paper_z(), paper_w()])
    assert M[0, 0] == pytest.approx(2.0, abs=1e-10)
    assert M[1, 1] == pytest.approx(64.0, abs=1e-10)
    assert M[0, 1] == pytest.approx(8.0, abs=1e-10)
    assert np.allclose(M, M.T)


def test_reduced_form_empty_basis(triangle):
    stress = StressField((0.0, 0.0, 0.0))
    M = reduced_flex_form(triangle, stress, flex_space(triangle))
    assert M.shape == (0, 0)


def test_reduced_form_zero_stress_square(square_cycle):
    M = reduced_flex_form(square_cycle, StressField((0.0,) * 4), flex_space(square_cycle))
    assert M.shape == (1, 1)
    assert M[0, 0] == 0.0


def test_reduced_form_congruence_between_bases(square_in_square):
    """The quadratic form descends to the flex quotient: the matrix over the
    paper fields equals the coordinate-congruent image of the matrix over
    the orthonormal basis."""
    stress = normalized_sis_stress(square_in_square)
    basis = flex_space(square_in_square)
    M_ortho = reduced_flex_form(square_in_square, stress, basis)
    fields = [paper_z(), paper_w()]
    C = np.array([basis.basis @ f.reshape(-1) for f in fields]).T  # coords as columns
    M_paper = reduced_flex_form(square_in_square, stress, fields)
    assert np.allclose(C.T @ M_ortho @ C, M_paper, atol=1e-9)


def test_prestress_stability_triangle(triangle):
    verdict = prestress_stability(triangle)
    assert verdict.state == "certified_ps"
    assert verdict.min_eigenvalue == math.inf
    assert all(v == 0 for v in verdict.stress.values)


def test_prestress_stability_square_cycle(square_cycle):
    verdict = prestress_stability(square_cycle)
    assert verdict.state == "certified_not_wps"


def test_prestress_stability_square_in_square(square_in_square):
    verdict = prestress_stability(square_in_square)
    assert verdict.state == "certified_ps"
    assert verdict.min_eigenvalue > 1e-7
    # the certified reduced form is congruent to the form over {z, w}
    stress = verdict.stress
    M = reduced_flex_form(square_in_square, stress, [paper_z(), paper_w()])
    assert np.linalg.eigvalsh(M).min() > 0


def test_prestress_stability_multidimensional_ascent():
    """Nested-squares truncations have stress dimension K and are certified
    through the eigenvalue-ascent branch with a re-verified certificate."""
    from rigicert.infinite import DyadicSquares

    for level in (2, 3):
        fw = DyadicSquares().truncation(level)
        assert stress_space(fw).dimension == level
        verdict = prestress_stability(fw, seed=0)
        assert verdict.state == "certified_ps"
        assert verdict.min_eigenvalue > 1e-7
        assert f"{level}-dimensional" in verdict.detail
        # re-verify the certificate from its own reduced form
        assert np.linalg.eigvalsh(verdict.reduced_form).min() > 1e-7


def test_prestress_stability_collinear_chain_negative_branch():
    """Three collinear joints with a redundant long bar: a single stress of
    the right sign weights the vertical flex, so PS is certified even though
    the framework is not first-order rigid."""
    fw = framework_from_points(
        2, [(0, 0), (1, 0), (2, 0)],
        [(1, 2, MemberKind.BAR), (2, 3, MemberKind.BAR), (1, 3, MemberKind.BAR)],
    )
    assert flex_space(fw).dimension == 1
    verdict = prestress_stability(fw)
    assert verdict.state == "certified_ps"
    assert verdict.min_eigenvalue == pytest.approx(2.0, abs=1e-9)


def test_prestress_stability_unknown_is_honest():
    """A disjoint union whose only stress cannot weight the other component's
    shear reports unknown (not a refutation) in the one-dimensional case."""
    pts = [(0, 0), (1, 0), (2, 0), (5, 0), (6, 0), (6, 1), (5, 1)]
    mem = [
        (1, 2, MemberKind.BAR), (2, 3, MemberKind.BAR), (1, 3, MemberKind.BAR),
        (4, 5, MemberKind.BAR), (5, 6, MemberKind.BAR), (6, 7, MemberKind.BAR), (4, 7, MemberKind.BAR),
    ]
    fw = framework_from_points(2, pts, mem)
    assert stress_space(fw).dimension == 1
    verdict = prestress_stability(fw)
    assert verdict.state == "unknown"


def test_wps_probe_square_in_square(square_in_square):
    stress = normalized_sis_stress(square_in_square)
    entries = wps_probe(square_in_square, [paper_z()])
    assert entries[0].witnessed
    assert not entries[0].trivial
    # the witness direction rescales to the normalized stress: value scales to 2
    witness = entries[0].witness
    scale = stress.values[0] / witness.values[0]
    assert entries[0].energy_value * scale == pytest.approx(2.0, abs=1e-9)


def test_wps_probe_square_cycle_not_witnessed(square_cycle):
    shear = np.array([[0, 0], [0, 0], [1, 0], [1, 0]], dtype=float)
    entries = wps_probe(square_cycle, [shear])
    assert not entries[0].witnessed
    assert entries[0].pairing_norm <= 1e-12


def test_wps_probe_trivial_flagged(square_in_square):
    translation = np.tile([1.0, 0.0], (8, 1))
    entries = wps_probe(square_in_square, [translation])
    assert entries[0].trivial and not entries[0].witnessed
    assert entries[0].pairing_norm <= 1e-9
    rotation = square_in_square.placement_array @ np.array([[0.0, 1.0], [-1.0, 0.0]])
    entries = wps_probe(square_in_square, [rotation])
    assert entries[0].trivial and not entries[0].witnessed
    assert entries[0].pairing_norm <= 1e-9  # projection onto the stress space vanishes


def test_wps_probe_rejects_non_flex(square_in_square):
    bad = np.zeros((8, 2))
    bad[0] = (1.0, 1.0)
    with pytest.raises(ValueError, match="not a flex"):
        wps_probe(square_in_square, [bad])


def test_second_order_extend_square_cycle(square_cycle):
    shear = np.array([[0, 0], [0, 0], [1, 0], [1, 0]], dtype=float)
    result = second_order_extend(square_cycle, shear)
    assert result.extends
    assert result.residual <= 1e-10


def test_second_order_extend_blocked_square_in_square(square_in_square):
    result = second_order_extend(square_in_square, paper_z())
    assert not result.extends
    assert result.blocking_stress is not None
    stress = normalized_sis_stress(square_in_square)
    scale = stress.values[0] / result.blocking_stress.values[0]
    assert result.blocking_pairing * scale == pytest.approx(2.0, abs=1e-9)


def test_second_order_extend_translation(square_in_square):
    translation = np.tile([3.0, -2.0], (8, 1))
    result = second_order_extend(square_in_square, translation)
    assert result.extends
    assert np.abs(np.asarray(result.flex.a.values)).max() <= 1e-10


def test_fredholm_consistency_random():
    rng = np.random.default_rng(41)
    checked = 0
    for _ in range(30):
        fw = random_framework(rng)
        basis = flex_space(fw)
        if basis.dimension == 0:
            continue
        u = basis.basis[0].reshape(fw.n_vertices, fw.dimension)
        result = second_order_extend(fw, u)
        probe = wps_probe(fw, [u])[0]
        assert result.extends == (not probe.witnessed)
        checked += 1
    assert checked > 5


def test_hierarchy_spot_check():
    """First-order rigid frameworks are certified PS, and a PS certificate's
    stress witnesses every sampled nontrivial flex."""
    rng = np.random.default_rng(43)
    for _ in range(25):
        fw = random_framework(rng)
        from rigicert.rigidity import bar_first_order_rigidity

        verdict = bar_first_order_rigidity(fw)
        ps = prestress_stability(fw)
        if verdict.rigid:
            assert ps.state == "certified_ps"
        if ps.state == "certified_ps" and not verdict.rigid:
            basis = flex_space(fw)
            for row in basis.basis:
                value = energy_form(fw, ps.stress, row.reshape(fw.n_vertices, fw.dimension), check_identity=False)
                assert value > 0
