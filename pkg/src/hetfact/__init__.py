"""Exact inference for Bayesian networks with causal-independence nodes."""

from importlib import resources

from .elimination import (
    EliminationOrdering,
    EliminationStats,
    InconsistentEvidenceError,
    OrderingError,
    QueryResult,
    finalize,
    homogeneous_query,
    order_auto,
    projection,
    query,
    sum_out_step,
    validate_ordering,
)
from .factor import (
    BaseCombinationOperator,
    Factor,
    FactorError,
    Variable,
    builtin_op,
    evaluate,
    make_factor,
    multiply,
    slice_factor,
    sum_out,
    validate_base_op,
)
from .fileformat import DocumentError, dump_network, load_network, parse_network
from .hf import (
    BastardDeclaration,
    HeterogeneousFactorization,
    combine_all_het,
    general_combine,
    hf_joint,
    induced_combine,
    is_tidy,
)
from .network import (
    BayesianNetwork,
    FullCPT,
    NetworkError,
    Node,
    NoisyCPT,
    apply_evidence,
    build_hf,
    cpt_from_contributions,
    deputing_factor,
    deputize,
    hf_from_network,
)

__all__ = [
    "BaseCombinationOperator",
    "BastardDeclaration",
    "BayesianNetwork",
    "DocumentError",
    "EliminationOrdering",
    "EliminationStats",
    "Factor",
    "FactorError",
    "FullCPT",
    "HeterogeneousFactorization",
    "InconsistentEvidenceError",
    "NetworkError",
    "Node",
    "NoisyCPT",
    "OrderingError",
    "QueryResult",
    "Variable",
    "apply_evidence",
    "build_hf",
    "builtin_op",
    "combine_all_het",
    "cpt_from_contributions",
    "deputing_factor",
    "deputize",
    "dump_network",
    "evaluate",
    "finalize",
    "general_combine",
    "hf_from_network",
    "hf_joint",
    "homogeneous_query",
    "induced_combine",
    "is_tidy",
    "load_network",
    "make_factor",
    "multiply",
    "order_auto",
    "parse_network",
    "projection",
    "query",
    "slice_factor",
    "sum_out",
    "sum_out_step",
    "validate_base_op",
    "validate_ordering",
    "data_path",
]

__version__ = "0.1.0"


def data_path(name: str):
    """Path of a network document shipped with the package, e.g. ``figure1.net``."""
    return resources.files(__name__).joinpath("data", name)
