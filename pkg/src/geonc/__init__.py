"""Network coding over GF(2^q) for lossy multi-hop paths.

Codecs, Monte Carlo channel simulation, closed-form reliability, the
complexity-constrained rate optimizer, two-hop rate regions and a small
geo-tagged link store with an activation lifecycle.
"""
__version__ = "0.1.0"

from .analytics import (
    CodeOperatingPoint,
    PathProfile,
    achievable_rate,
    eta_subspace,
    pmf_alpha,
    prob_full_rank,
    reliability_nc,
    reliability_uncoded,
    residual_snc,
)
from .channel import ChannelScenario, TrialStats, monte_carlo, simulate_trial
from .exceptions import (
    ConfigError,
    ConsistencyError,
    DecodeIncomplete,
    DomainError,
    GeoNCError,
    InfeasibleBudget,
    InvalidTransition,
    MissingLink,
    ShapeError,
)
from .geo import GeoRecord, GeoStore
from .gf import FieldMatrix, GaloisField, ReductionState, get_field, mat_inverse, mat_mul, mat_rank
from .lifecycle import CodingFunction, Event, State, lifecycle_step
from .optimizer import (
    ComplexityBudget,
    ComplexityModel,
    beta_dec,
    beta_enc,
    connectivity,
    node_costs,
    operative_range,
    optimize_rate,
    utility,
)
from .rate_region import area_ratio, iso_product_curve, max_rate_e2e, max_rate_nc, region_grid, square_diagnostic
from .snc import CodedPacket, GeneratorMatrix, SncParams, decode, encode, reencode
from .subspace import LiftedGenerator, singleton_bound, subspace_decode, subspace_encode
