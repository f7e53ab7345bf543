"""Transversals of near-ball families: solvers, constructions and certificates."""
from .claims import ClaimReport, verify_claim_cone, verify_claim_ktok, verify_claim_wide_cone
from .constructions import (
    counterexample_discs,
    disjoint_sequence_builder,
    inner_tangent_wedge,
    random_family,
    segments_family,
    sharpness_family2,
    shrinking_sequence,
    verify_33_property,
    verify_segments,
)
from .estimators import FlatPiercer, IndependentSubsequence, MinimaxFlat, check_family
from .exceptions import (
    CounterexampleFound,
    DegenerateInput,
    DimensionMismatch,
    InvalidFlat,
    NoInnerTangents,
    PreconditionViolated,
    SamplerExhausted,
    SchemaError,
    SequenceExhausted,
    TransversalLabError,
    TupleHasAxisParallelTransversal,
    Unpierceable,
)
from .geometry import ClosedBall, Cone, KFlat, canonicalize_flat, dist_point_flat, flat_through_points
from .independence import (
    IndependenceWitness,
    central_project_family,
    epsilon0_for_tuple,
    find_strong_point_proxy,
    greedy_independent_subsequence,
    is_k_independent,
    lift_flat,
    members_met_by_rays,
    orthogonal_project_family,
    ray_covering,
)
from .io import CertificateDocument, FamilyDocument
from .nearball import Family, NearBall, nearball_constant, pierces
from .render import render_svg
from .solver import (
    SolveOptions,
    TransversalCertificate,
    exists_transversal,
    greedy_piercing_upper,
    min_max_flat,
    pierce_with_m_flats,
)
from .verify import verify_certificate

__version__ = "0.1.0"

__all__ = [
    "CertificateDocument",
    "ClaimReport",
    "ClosedBall",
    "Cone",
    "CounterexampleFound",
    "DegenerateInput",
    "DimensionMismatch",
    "Family",
    "FamilyDocument",
    "FlatPiercer",
    "IndependenceWitness",
    "IndependentSubsequence",
    "InvalidFlat",
    "KFlat",
    "MinimaxFlat",
    "NearBall",
    "NoInnerTangents",
    "PreconditionViolated",
    "SamplerExhausted",
    "SchemaError",
    "SequenceExhausted",
    "SolveOptions",
    "TransversalCertificate",
    "TransversalLabError",
    "TupleHasAxisParallelTransversal",
    "Unpierceable",
    "canonicalize_flat",
    "central_project_family",
    "check_family",
    "counterexample_discs",
    "disjoint_sequence_builder",
    "dist_point_flat",
    "epsilon0_for_tuple",
    "exists_transversal",
    "find_strong_point_proxy",
    "flat_through_points",
    "greedy_independent_subsequence",
    "greedy_piercing_upper",
    "inner_tangent_wedge",
    "is_k_independent",
    "lift_flat",
    "members_met_by_rays",
    "min_max_flat",
    "nearball_constant",
    "orthogonal_project_family",
    "pierce_with_m_flats",
    "pierces",
    "random_family",
    "ray_covering",
    "render_svg",
    "segments_family",
    "sharpness_family2",
    "shrinking_sequence",
    "verify_33_property",
    "verify_certificate",
    "verify_claim_cone",
    "verify_claim_ktok",
    "verify_claim_wide_cone",
    "verify_segments",
]
