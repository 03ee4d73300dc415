import numpy as np
import pytest

from conftest import make_square_in_square, normalized_sis_stress

from rigicert.model import (
    MemberKind,
    StressField,
    Tensegrity,
    expand_to_cable_strut,
    framework_from_points,
)
from rigicert.rigidity import tensegrity_rigidity_matrix
from rigicert.suites import random_tensegrity, run_roth_whiteley_suite
from rigicert.tensegrity import (
    equilibrium_residual,
    first_order_rigidity_direct,
    member_slack,
    proper_equilibrium_stress,
    roth_whiteley_certify,
)


def cable_triangle() -> Tensegrity:
    fw = framework_from_points(
        2, [(0, 0), (1, 0), (0, 1)],
        [(1, 2, MemberKind.CABLE), (2, 3, MemberKind.CABLE), (1, 3, MemberKind.CABLE)],
    )
    return Tensegrity(fw)


def single_cable_1d() -> Tensegrity:
    return Tensegrity(framework_from_points(1, [(0,), (1,)], [(1, 2, MemberKind.CABLE)]))


def test_single_cable_flexible():
    cert = first_order_rigidity_direct(single_cable_1d())
    assert cert.verdict == "flexible"
    u = np.asarray(cert.witness_flex.values)
    R = tensegrity_rigidity_matrix(single_cable_1d()).matrix
    image = R @ u.reshape(-1)
    assert image.min() >= -1e-9 and image.max() > 0


def test_expanded_triangle_rigid(triangle):
    tens = expand_to_cable_strut(triangle)
    direct = first_order_rigidity_direct(tens)
    cert = roth_whiteley_certify(tens)
    assert direct.verdict == cert.verdict == "first_order_rigid"
    assert cert.bar_rigid
    assert cert.proper_stress is not None
    assert min(abs(v) for v in cert.proper_stress.values) >= 1 - 1e-12
    assert cert.stress_residual <= 1e-8


def test_all_cable_triangle_flexible_without_stress():
    tens = cable_triangle()
    cert = roth_whiteley_certify(tens)
    assert cert.verdict == "flexible"
    assert cert.bar_rigid  # the bar triangle is first-order rigid
    assert proper_equilibrium_stress(tens) is None
    report = member_slack(tens, cert.witness_flex)
    assert report.is_flex
    assert cert.witness_nontriviality >= 1e-7


def test_proper_stress_single_pair():
    tens = Tensegrity(
        framework_from_points(1, [(0,), (1,)], [(1, 2, MemberKind.CABLE), (1, 2, MemberKind.STRUT)])
    )
    stress = proper_equilibrium_stress(tens)
    assert stress is not None
    by_kind = {m.kind: v for m, v in zip(tens.members, stress.values)}
    assert by_kind[MemberKind.CABLE] == -1.0
    assert by_kind[MemberKind.STRUT] == 1.0
    assert equilibrium_residual(tens, stress) <= 1e-12


def test_proper_stress_expanded_square_in_square():
    sis = make_square_in_square()
    tens = expand_to_cable_strut(sis)
    stress = proper_equilibrium_stress(tens)
    assert stress is not None
    assert stress.sign_admissible(tens.members)
    assert min(abs(v) for v in stress.values) >= 1 - 1e-12
    assert equilibrium_residual(tens, stress) <= 1e-10

    # A proper pair stress whose per-pair net recovers the bar stress with
    # outer edges -1 exists: lift each bar value w to (cable w - t, strut t).
    outer = {(1, 2), (2, 3), (3, 4), (1, 4)}
    connectors = {(1, 5), (2, 6), (3, 7), (4, 8)}
    bar_values = {
        m.pair: (-1.0 if m.pair in outer else 4.0 if m.pair in connectors else 2.0)
        for m in sis.members
    }
    computed = normalized_sis_stress(sis)
    for m, v in zip(sis.members, computed.values):
        assert v == pytest.approx(bar_values[m.pair], abs=1e-10)
    lifted = []
    for m in tens.members:
        w = bar_values[m.pair]
        t = max(1.0, w + 1.0)
        lifted.append(w - t if m.kind is MemberKind.CABLE else t)
    lift = StressField(tuple(lifted))
    assert lift.sign_admissible(tens.members)
    assert min(abs(v) for v in lift.values) >= 1
    assert equilibrium_residual(tens, lift) <= 1e-10
    nets = {}
    for m, v in zip(tens.members, lift.values):
        nets[m.pair] = nets.get(m.pair, 0.0) + v
    for pair, net in nets.items():
        assert net == pytest.approx(bar_values[pair], abs=1e-12)
    assert nets[(1, 2)] == pytest.approx(-1.0)


def test_member_slack_translation_zero(triangle):
    tens = expand_to_cable_strut(triangle)
    u = np.tile([2.0, -1.0], (3, 1))
    report = member_slack(tens, u)
    assert np.abs(report.raw_values()).max() <= 1e-12
    assert report.is_flex


def test_member_slack_contraction_on_cable_patch():
    # small triangle-tiling patch: unit cables, contraction u = -p/2
    from rigicert.infinite import TriangleTiling

    patch = TriangleTiling().truncation(2)
    P = patch.framework.placement_array
    report = member_slack(patch, -0.5 * P)
    assert np.allclose(report.raw_values(), -0.5, atol=1e-12)
    assert report.is_flex


def test_member_slack_strip_tail_flex():
    from rigicert.infinite import Strip

    st = Strip()
    level = 6
    tens = st.truncation(level)
    u = st.tail_flex(level, 3)
    report = member_slack(tens, u)
    assert report.is_flex
    signed = report.signed_values()
    assert signed.min() >= -1e-12
    # the top cable crossing the moving boundary carries slack a = 1
    boundary = [
        s.signed
        for s in report.slacks
        if s.member.kind is MemberKind.CABLE and s.signed > 0.5
    ]
    assert boundary and max(boundary) == pytest.approx(1.0)


def test_sufficiency_mechanics_pair_square(square_cycle):
    """With a proper stress in hand, every flex has zero slack on every member."""
    tens = expand_to_cable_strut(square_cycle)
    stress = proper_equilibrium_stress(tens)
    assert stress is not None
    mu = np.abs(stress.array)
    shear = np.array([[0, 0], [0, 0], [1, 0], [1, 0]], dtype=float)
    rng = np.random.default_rng(2)
    trivial_fields = [np.tile(rng.normal(size=2), (4, 1)) for _ in range(3)]
    for u in [shear] + trivial_fields:
        report = member_slack(tens, u)
        signed = report.signed_values()
        assert report.is_flex
        assert abs(float(mu @ signed)) <= 1e-9
        assert np.abs(signed).max() <= 1e-9


def test_strip_truncation_flexible_with_leftward_witness():
    from rigicert.infinite import Strip

    st = Strip()
    level = 20
    tens = st.truncation(level)
    cert = first_order_rigidity_direct(tens)
    assert cert.verdict == "flexible"
    assert cert.bar_rigid
    U = np.asarray(cert.witness_flex.values)
    top = np.array([U[st.top_vertex_id(level, b) - 1, 0] for b in range(level + 1)])
    # leftward drift: top x-velocities strictly decrease to the right
    assert np.all(np.diff(top) < 1e-9)
    assert top[-1] < top[0] - 0.5
    report = member_slack(tens, U)
    assert report.is_flex


def test_cross_method_agreement_sample():
    result = run_roth_whiteley_suite(60, seed=77)
    assert result["failed"] == 0
    assert result["rigid_count"] > 0


def test_witness_validity_invariant():
    rng = np.random.default_rng(99)
    flexible_seen = 0
    for _ in range(40):
        tens = random_tensegrity(rng)
        cert = first_order_rigidity_direct(tens)
        if cert.verdict != "flexible":
            continue
        flexible_seen += 1
        assert cert.witness_flex is not None
        assert member_slack(tens, cert.witness_flex).is_flex
        assert cert.witness_nontriviality >= 1e-7
    assert flexible_seen > 0
