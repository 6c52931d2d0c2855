"""Exact analysis of piecewise-linear interval maps: zigzag detection,
branch dynamics, leo and post-critical verification, s/t factorizations,
and machine-checkable accessibility certificates for points of the
associated inverse limits."""

from .plmap import (
    BudgetExceededError,
    Lap,
    PLMap,
    Rational,
    compose,
    critical_set,
    evaluate,
    format_rational,
    is_onto,
    iterate,
    laps,
    level_crossings,
    load_map,
    make_plmap,
    parse_rational,
    save_map,
)
from .zigzag import (
    ZigzagVerdict,
    composition_property_check,
    is_in_zigzag,
    lemma_witness,
    remark_no_zigzag,
    zigzag_set,
)
from .dynamics import (
    BackwardOrbit,
    BranchResult,
    NSequence,
    OrbitTable,
    OrbitValidationError,
    StabilizationData,
    branch,
    branch_stabilization,
    is_leo,
    is_post_critically_finite,
    leo_uniform_N,
    markov_partition,
    post_critical_orbits,
    transition_matrix,
    uniformly_onto,
    validate_orbit,
)
from .factorize import (
    CASE1,
    CASE2,
    Certificate,
    CertifyError,
    FactorPair,
    build_g_sequence,
    certificate_from_json,
    certificate_to_json,
    certify_general,
    certify_minc,
    find_beta,
    minc_map,
    minc_stage_choice,
    split_case1,
    split_case2,
    transform_point,
    verify_certificate,
)

__version__ = "0.1.0"
