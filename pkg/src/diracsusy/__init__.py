"""Spectral solver for the 1+1D and 2+1D Dirac equation with shared-shape
scalar, pseudoscalar and electric potentials, via energy-dependent SUSY
factorization, verified against an independent finite-difference/shooting
oracle."""

from .model import (
    AllZeroCouplingsError,
    AmbiguousCaseError,
    Branch,
    BrokenSusyError,
    ConfigError,
    Constants,
    Couplings,
    DiracSusyError,
    Eigenpair,
    FirstOrderSystem,
    InverseLinearShape,
    Level,
    LinearShape,
    Mode2p1,
    NonpositiveStepError,
    NoRootError,
    NoSuchLevelError,
    NotDiagonalizableError,
    NotShapeInvariantError,
    OutOfDomainError,
    Profile,
    SolverFailureError,
    TabulatedShape,
    UnstableRegimeError,
    UnsupportedBranchError,
    ValidationReport,
    ZeroDivisorError,
    eval_shape,
    first_order_system,
    potentials,
    validate,
)
from .factorize import (
    FactorizationData,
    MixingMatrix,
    PartnerPotentials,
    factorization_data,
    kg_eigenvalue,
    ladder_coefficients,
    mixing_matrix,
    partner_potentials,
    reduce_2plus1,
    superpotential,
)
from .susy import (
    EnergyDependentProblem,
    ShapeInvarianceData,
    SiChain,
    SusyCase,
    assemble_spinor,
    detect_case,
    excited_state,
    ground_state,
    si_spectrum,
    solve_level,
    solve_levels,
    verify_shape_invariance,
)
from .catalog import (
    CrossedFieldProblem,
    InverseLinearProblem,
    LinearProblem,
    PseudoscalarProblem,
    StabilityVerdict,
    StepVerdict,
    TabulatedProblem,
    Verdict,
    build_problem,
    crossed_field_spectrum,
    inverse_linear_spectrum,
    linear_spectrum,
    stability,
    step_pair_production,
)
from .oracle import (
    Boundary,
    ConvergenceReport,
    DiscreteHamiltonian,
    Grid,
    build_hamiltonian,
    convergence_probe,
    eigen_solve,
    eigenvalues,
    find_levels_shooting,
    intertwine_check,
    shoot,
)

__version__ = "0.1.0"
