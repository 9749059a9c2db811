"""Explicit background noise that ranks gambles by stochastic dominance."""

from .closedform import (
    BinaryGamble,
    UniformNoiseSpec,
    binary_construct,
    materialize_uniform,
    t_function,
    table1,
    uniform_construct,
    uniform_variance,
)
from .dominance import (
    DominanceVerdict,
    Relation,
    check_fosd,
    check_noised,
    check_sosd,
    support_bound_diagnostic,
)
from .errors import (
    BGRiskError,
    GridTooNarrow,
    InfeasibleMeanOrder,
    InfeasibleVarianceOrder,
    KernelTooNarrow,
    MixedGridError,
    NotStrictlyBIC,
    ParameterTooSmall,
    VerificationFailed,
)
from .measures import Gamble, GriddedDensity, SteppedFunction, cdf, convolve, moments, tv_norm
from .mechanism import MechanismSpec, check_strict_bic, ordinalize, simulate_agents
from .montecarlo import dkw_epsilon, empirical_fosd, sample_noise
from .smoothing import (
    CompositeNoise,
    NoiseSpec,
    SigmaMeasure,
    build_sigma_first,
    build_sigma_second,
    choose_a,
    construct_and_verify,
    construct_common_noise,
    smooth,
)

__version__ = "0.1.0"
