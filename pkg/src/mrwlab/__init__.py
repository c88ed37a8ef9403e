"""Ladder-variable toolkit for Markov-modulated lattice random walks.

Models a walk S_n whose increments are driven by a finite Markov chain,
and computes its ladder structure three independent ways: closed form via
time reversal, exact first-passage linear systems, and seeded simulation.
Every identity connecting those routes ships as an executable check.
"""

__version__ = "0.1.0"

from ._kernels import available_backends, backend_name
from .core import (
    DriftReport,
    IncrementLaw,
    MRWSpec,
    StationaryDistribution,
    build_dual,
    build_spec,
    flower_truncated,
    model_zoo,
    random_lattice,
    remark2,
    simple_rw,
    stationary_distribution,
    stationary_drift,
    stationary_increment_law,
    transition_kernel,
    two_cycle,
    validate_spec,
)
from .errors import (
    ConfigError,
    DivergenceGateError,
    ModelValidationError,
    MRWError,
    NonConvergenceError,
)
from .factorization import (
    EscapeProbabilities,
    FactorizationReport,
    LadderKernelResult,
    SubstochasticReport,
    TiltCertificate,
    check_substochastic,
    contraction_certificate,
    descent_certificate,
    escape_probabilities,
    star_kernel,
    strict_ascending_kernel,
    verify_factorization,
    weak_descending_kernel,
)
from .measure import (
    KernelMatrix,
    LatticeMeasure,
    convolve,
    matrix_convolve,
    max_total_variation,
    total_mass_matrix,
    tv_distance,
)
from .simulate import (
    CouplingReport,
    DyadicPetalWeights,
    FlowerAudit,
    JointEpochEstimate,
    LadderExtraction,
    MCEstimate,
    OccupationEstimate,
    PathSample,
    audit_flower_path,
    coupling_experiment,
    embedded_renewal,
    estimate_joint_epoch_law,
    estimate_ladder_occupation,
    estimate_sigma0_probability,
    extract_strict_ascending,
    extract_weak_descending,
    first_hit_ladder_support,
    flower_min_tail_mc,
    flower_min_tail_probability,
    simulate_flower,
    simulate_path,
)
from .theory import (
    CheckResult,
    LadderStationary,
    MeanEpochReport,
    NuTable,
    VerificationReport,
    cross_validate,
    expected_ladder_epoch,
    joint_law_nu,
    ladder_stationary_exact,
    ladder_stationary_nullvector,
)

__all__ = [name for name in dir() if not name.startswith("_")]
