"""Fractional-order stochastic evolution equations with impulses and delay.

Simulation of the mild-solution formula on spectral (diagonal) operators,
driven by Q-Wiener noise and compensated Poisson jumps, plus the arithmetic
solvability check max(Delta_1, Delta_2) < 1 on user-declared constants.
"""

from .errors import (
    AdaptednessError,
    ConfigError,
    DelayViolation,
    DomainError,
    EnsemblePathError,
    FracstochError,
    MaxIterations,
    OutOfRange,
    ParseError,
    ResolutionError,
    UnresolvedDelay,
    UnsupportedKernel,
    ValidationError,
)
from .mlf import (
    MlParams,
    caputo_residual,
    fractional_integral,
    ml_eval,
    ml_eval_array,
    relaxation_S,
    relaxation_T,
)
from .spectral import (
    BasisId,
    OperatorSpec,
    SpectralField,
    apply_Sq,
    apply_Tq,
    field_norm,
    project,
)
from .phase_space import (
    DelaySpec,
    HistoryPath,
    HistoryView,
    HistoryBoundReport,
    PhaseNormConfig,
    PrehistoryView,
    constant_prehistory,
    eval_delay,
    history_norm_bound_check,
    phase_norm,
    segment,
    zero_prehistory,
)
from .noise import (
    NoiseConfig,
    NoiseRealization,
    PoissonEvent,
    compensated_poisson_integral,
    history_wiener_integral,
    ito_integral,
    sample_noise,
    sample_poisson,
    sample_wiener,
)
from .dynamics import (
    Branch,
    EnsembleStats,
    ImpulseSchedule,
    PicardResult,
    ProblemSpec,
    TimeGrid,
    branch_continuity_check,
    classify_time,
    mild_eval,
    picard_solve,
    simulate_ensemble,
)
from .existence import (
    ExistenceReport,
    HypothesisConstants,
    check_existence,
    compute_C0_C1,
    compute_delta1,
    compute_delta2,
    compute_m_hat,
    compute_r_star,
)
from .heat_example import (
    HeatExampleConfig,
    build_spec,
    scale_amplitudes,
    suggested_constants,
)

__version__ = "0.1.0"
