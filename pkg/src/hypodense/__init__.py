"""Exact weighted densities and the weighted dynamics toolkit built on them.

The package splits into three layers.  ``exactnum`` and ``densities``
provide the arithmetic substrate: exact rational and dyadic scalars,
index sets, admissible weight sequences, and prefix density reports.
``weightforge`` synthesizes weights that push the lower density of a
given set toward a prescribed floor, for one set or several at once.
``ctype`` and ``dynlab`` realize the banded shift-with-feedback
operators on sparse vectors and run the dynamical checks: orbits,
shadowing certificates, leak and counting propositions, hitting
statistics, and finite set-identity comparisons.  ``cli`` wraps all of
it behind the ``hypodense`` command.
"""

from .errors import (
    ConfigError,
    ExponentCapError,
    HorizonExhausted,
    HypodenseError,
    HypothesisViolated,
    MapInfeasible,
    NoFeasibleLevel,
    NoFeasibleStep,
    ScanExhausted,
    SupportOutOfRange,
    ValidationError,
)
from .exactnum import (
    DEFAULT_EXPONENT_CAP,
    DyadicScalar,
    ExactScalar,
    PowerOfTwo,
    exact,
    exponent_cap,
    format_dyadic,
    format_exact,
    parse_dyadic,
    parse_exact,
    set_exponent_cap,
)
from .densities import (
    BlockConstantWeight,
    BlockSet,
    ComplementSet,
    DensityReport,
    DualityResult,
    ExplicitSet,
    GeometricBlockSet,
    HarmonicWeight,
    IndexSet,
    MonotonicityReport,
    PeriodicSet,
    ShiftedSet,
    TableWeight,
    UnitWeight,
    WeightSeq,
    density_quotient,
    duality_check,
    empty_set,
    estimate_densities,
    evens,
    index_set_from_description,
    monotonicity_check,
    naturals,
    odds,
    ratio_drop_indices,
    shift_quotient_gap,
    weight_from_description,
)
from .weightforge import (
    AlphaSequence,
    BlockPlan,
    alpha_sequence,
    multi_plan_report,
    round_robin_partition,
    synthesize_weight_multi,
    synthesize_weight_thm1,
)
from .ctype import (
    CTypeParams,
    PsiMap,
    Schedule,
    SparseVec,
    apply,
    apply_power,
    build_psi,
    build_schedule,
    orbit_rows,
    realize_params,
    schedule_from_tables,
)
from .dynlab import (
    HittingReport,
    SetIdentityReport,
    ShadowingCertificate,
    build_shadowing_vector,
    flat_run,
    gamma_leak_constants,
    hitting_density,
    prop50_check,
    prop51_bound,
    prop51_check,
    set_identity_check,
)

__version__ = "0.1.0"
