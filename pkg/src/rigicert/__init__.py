"""rigicert: rigidity certificates for bar-joint frameworks and cable-strut
tensegrities, with truncation diagnostics for countably infinite families."""

__version__ = "0.1.0"

from .model import (
    DEFAULT_TOL,
    Framework,
    Member,
    MemberKind,
    StressField,
    Tensegrity,
    ToleranceContext,
    VelocityField,
    expand_to_cable_strut,
    framework_from_points,
    parse_framework,
    serialize_framework,
    validate,
)
from .rigidity import (
    FlexBasis,
    RigidityMatrix,
    TrivialSpace,
    bar_first_order_rigidity,
    bar_rigidity_matrix,
    flex_space,
    tensegrity_rigidity_matrix,
    trivial_flex_space,
)
from .cones import (
    ConeProjection,
    DichotomyResult,
    InternalInconsistencyError,
    cone_project,
    dichotomy,
    double_dual_oracle,
    flexible_direction,
    separating_functional,
    strict_positive_left_kernel,
)
from .tensegrity import (
    RigidityCertificate,
    first_order_rigidity_direct,
    member_slack,
    proper_equilibrium_stress,
    roth_whiteley_certify,
)
from .prestress import (
    PSVerdict,
    StressMatrix,
    StressSpace,
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
from .infinite import (
    FAMILIES,
    GeneratorSpec,
    SequenceSpace,
    bps_probe,
    candidate_stress,
    generate,
    infinite_energy_report,
    make_generator,
    sequence_norm,
    solve_symmetric_stress,
    summability_report,
    truncation_residual_profile,
    uniform_structure_check,
    weak_pairing_profile,
)
