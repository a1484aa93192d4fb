"""Convex-roof and assistance coherence/entanglement quantities.

The package computes, for any admissible symmetric concave simplex function,
the induced pure-state coherence and entanglement measures, their convex-roof
and assistance (least concave majorant) extensions over all pure-state
decompositions, and certifies states that are mixtures of maximally coherent
or maximally entangled pure states.
"""

from .simplexfn import (
    BUILTINS,
    CONCURRENCE,
    L1,
    SHANNON,
    MembershipReport,
    SimplexFunction,
    check_membership,
)
from .states import (
    BipartiteState,
    DensityMatrix,
    DimensionMismatch,
    Ensemble,
    KrausChannel,
    NotHermitian,
    NotIsometry,
    NotPSD,
    NotSquare,
    NotUnitTrace,
    PureState,
    RankMismatch,
    ValidationError,
    apply_channel,
    coherence_vector,
    ensemble_from_isometry,
    ensemble_from_rows,
    load_state,
    pure_density,
    reduced_a,
    save_state,
    schmidt,
    schmidt_vector,
    state_from_dict,
    state_to_dict,
    support_decomposition,
    validate_density,
)
from .roofs import (
    Budget,
    BudgetZero,
    Direction,
    ObjectiveNaN,
    RoofProblem,
    RoofResult,
    haar_isometry,
    oracle_roof,
    solve_roof,
)
from .measures import (
    CoherenceObjective,
    EntanglementObjective,
    Extension,
    Flavor,
    MeasureSpec,
    SchmidtCorrelated,
    as_schmidt_correlated,
    c_pure,
    coherence,
    compress_mc,
    e_pure,
    embed_mc,
    entanglement,
)
from .maximal import (
    Certificate,
    CorrelationMatrix,
    IndexOutOfRange,
    InvalidCorrelation,
    PreconditionFailed,
    Reason,
    Verdict,
    certify_amc,
    certify_ame,
    decompose_3dim_real,
    decompose_correlation_2,
    fourier_ensemble,
    generalized_bell,
)
from .sampling import (
    amc_witnessed,
    balanced_flip_channel,
    ginibre_full_rank,
    haar_pure,
    maximally_coherent_pure,
    random_schmidt_correlated,
    substream,
)

__version__ = "0.1.0"
