"""Determinantal representations ``p(z) = det(I - K Z_n)`` of multivariable polynomials."""

from .agler import (
    CdMatrix,
    InnerEvalError,
    InnerFunction,
    Realization,
    RealizationError,
    agler_lower_bound,
    cd_matrix,
    extract_K_from_realization,
    inner_eval_julia,
    inner_eval_rational,
    realization_eval,
    realization_from_representation,
    unitary_completion,
)
from .gaussian import QQi, parse_exact
from .kvh import (
    KvhConfig,
    kvh_form_norm,
    kvh_optimal_s,
    kvh_poly,
    kvh_report,
    kvh_section5_example,
    kvh_tuple,
)
from .linalg import (
    compound,
    det,
    julia_operator,
    op_norm,
    permanent,
    permanental_compound,
    psd_sqrt,
    solve,
    svd,
)
from .poly import (
    CommutingTuple,
    ModeError,
    MultiPoly,
    poly_add,
    poly_degrees,
    poly_eval,
    poly_eval_tuple,
    poly_mul,
    poly_reverse,
    poly_scale,
)
from .represent import (
    BoundedRepresentation,
    FactorChain,
    Representation,
    RepresentationError,
    chain_to_representation,
    factor_chain,
    lemma_det_collapse,
    prune_chain,
    represent_affine,
    represent_bounded,
    represent_unconstrained,
)
from .verify import (
    RadiusEstimate,
    VerificationReport,
    det_expand,
    pmrp_check,
    stability_radius,
    sup_norm_torus,
    verify_representation,
)
