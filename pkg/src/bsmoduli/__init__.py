"""Numerical moduli spaces of half-weighted integer-level loops on symplectic surfaces.

The package discretizes closed loops on 2D symplectic surfaces, equips them
with unit-volume half-densities, realizes the symplectic pairing on the
resulting moduli space, and certifies the bracket correspondence between
surface observables and their induced moduli-space functions, alongside a
finite-dimensional geometric quantum mechanics cross-check and Hamiltonian
flows on both levels.
"""

from .errors import (
    AreaTooSmall,
    DegenerateLoop,
    ExpressionError,
    GeometryError,
    NewtonDivergence,
    NonContractibleLoop,
    PrequantizationError,
    SingularPairing,
)
from .surfaces import (
    CompatibleStructure,
    ScalarField,
    SymplecticSurface,
    field_is_periodic,
    hamiltonian_vector_field,
    poisson_bracket,
    poisson_bracket_field,
    rotate90,
    tangential_coefficient,
    tangential_normal_split,
)
from .loops import (
    HalfDensity,
    Loop,
    action_integral,
    bs_defect,
    integrate_density,
    is_bohr_sommerfeld,
    loop_derivative,
    project_to_bs,
    resample,
    trig_resample,
    winding_numbers,
)
from .moduli import (
    Covector,
    ModuliPoint,
    OmegaMatrix,
    TangentVector,
    dOmega_check,
    flat,
    omega,
    omega_matrix,
    project_tangent,
    realize_tangent,
    sharp,
)
from .observables import (
    BRACKET_SIGN,
    InducedObservable,
    bracket_report,
    compatibility_residuals,
    differential_covector,
    differential_dF,
    evaluate_F,
    field_A,
    hamiltonian_field_H,
    is_stationary_cycle,
    measure_bracket_sign,
    moduli_bracket,
    non_multiplicativity_witness,
    oneform_B,
    oneform_Cstar,
    restriction_identity_residual,
)
from .quantum import (
    KAPPA_QM,
    HermitianObservable,
    StateVector,
    bracket_commutator_check,
    decompose_inner,
    exact_flow,
    expectation,
    hamilton_identity_residual,
    measure_kappa,
    projective_critical_check,
    schrodinger_field,
    schrodinger_flow_rk4,
)
from .dynamics import ClassicalTrajectory, ModuliTrajectory, flow_classical, flow_moduli

__version__ = "0.1.0"

__all__ = [
    "AreaTooSmall",
    "BRACKET_SIGN",
    "ClassicalTrajectory",
    "CompatibleStructure",
    "Covector",
    "DegenerateLoop",
    "ExpressionError",
    "GeometryError",
    "HalfDensity",
    "HermitianObservable",
    "InducedObservable",
    "KAPPA_QM",
    "Loop",
    "ModuliPoint",
    "ModuliTrajectory",
    "NewtonDivergence",
    "NonContractibleLoop",
    "OmegaMatrix",
    "PrequantizationError",
    "ScalarField",
    "SingularPairing",
    "StateVector",
    "SymplecticSurface",
    "TangentVector",
    "action_integral",
    "bracket_commutator_check",
    "bracket_report",
    "bs_defect",
    "compatibility_residuals",
    "dOmega_check",
    "decompose_inner",
    "differential_covector",
    "differential_dF",
    "evaluate_F",
    "exact_flow",
    "expectation",
    "field_A",
    "field_is_periodic",
    "flat",
    "flow_classical",
    "flow_moduli",
    "hamilton_identity_residual",
    "hamiltonian_field_H",
    "hamiltonian_vector_field",
    "integrate_density",
    "is_bohr_sommerfeld",
    "is_stationary_cycle",
    "loop_derivative",
    "measure_bracket_sign",
    "measure_kappa",
    "moduli_bracket",
    "non_multiplicativity_witness",
    "omega",
    "omega_matrix",
    "oneform_B",
    "oneform_Cstar",
    "poisson_bracket",
    "poisson_bracket_field",
    "project_tangent",
    "project_to_bs",
    "projective_critical_check",
    "realize_tangent",
    "resample",
    "restriction_identity_residual",
    "rotate90",
    "schrodinger_field",
    "schrodinger_flow_rk4",
    "sharp",
    "tangential_coefficient",
    "tangential_normal_split",
    "trig_resample",
    "winding_numbers",
]
