"""Structural k-positivity of sign patterns up to permutation and signature."""

from .influence_graph import EdgeSign, InfluenceGraph, Topology, build_graph, zeta
from .sign_pattern import (
    CanonicalParity,
    SignMatrix,
    SignSymbol,
    canonical_matrix,
    canonical_parity,
    is_metzler,
    matches_canonical,
    parse_sign_matrix,
    sign_pattern_of,
)
from .transform_search import (
    Classification,
    Permutation,
    Signature,
    Transform,
    Verdict,
    apply_transform,
    classify,
    enumerate_all_witnesses,
    find_permutations,
    find_signature,
)

__version__ = "0.1.0"

__all__ = [
    "CanonicalParity",
    "Classification",
    "EdgeSign",
    "InfluenceGraph",
    "Permutation",
    "SignMatrix",
    "SignSymbol",
    "Signature",
    "Topology",
    "Transform",
    "Verdict",
    "apply_transform",
    "build_graph",
    "canonical_matrix",
    "canonical_parity",
    "classify",
    "enumerate_all_witnesses",
    "find_permutations",
    "find_signature",
    "is_metzler",
    "matches_canonical",
    "parse_sign_matrix",
    "sign_pattern_of",
    "zeta",
]
