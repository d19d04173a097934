"""Blockage fault simulation and compressed-sensing diagnosis for mmWave planar arrays."""

from .array_model import (
    ArrayGeometry,
    Direction,
    pattern,
    pattern_2d_direct,
    response_grid,
    steering_vector,
)
from .blockage import (
    BlockageMap,
    BlockageModel,
    innovation_coeffs,
    place_group_blockage,
    sample_blockage,
    sample_blockage_fixed_count,
)
from .block_recovery import BlockConfig, block_sparse_recover
from .errors import (
    ArrayDoctorError,
    ConfigError,
    DegenerateSupportError,
    DimensionMismatchError,
    PlacementError,
    SearchBudgetError,
    SingularSystemError,
    UndefinedMetricError,
    UnderdeterminedError,
)
from .group_complete import (
    FaultMask,
    RowColEstimate,
    candidate_mask,
    default_tau_abs,
    diagnose_group,
    estimate_rowcol,
    refine_mask,
)
from .joint_diagnosis import JointReport, KroneckerSensing, build_sensing, diagnose_joint
from .metrics import TrialOutcome, nmse, nmse_db, success, success_probability, to_db
from .pattern_stats import (
    EmpiricalMeanVar,
    MeanVar,
    dirichlet_kernel,
    empirical_pattern_stats,
    mainlobe_stats,
    sidelobe_stats,
)
from .recovery import (
    DiagnosisReport,
    LassoConfig,
    default_omega,
    detect_support,
    diagnose_rx,
    extract_blockage,
    genie_ls,
    lasso,
    ls_debias,
    soft_threshold,
)
from .sensing import (
    Impairments,
    JointMeasurementSet,
    MeasurementSet,
    PhaseShifterCodebook,
    measure_group,
    measure_joint,
    measure_rx,
    random_unitary,
    random_weights,
)

__version__ = "0.1.0"
