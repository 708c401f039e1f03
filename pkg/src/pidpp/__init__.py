"""Exact inference for products of determinantal point processes.

The library computes normalizing constants of product processes exactly
(brute force, rank-parameterized, and treewidth-parameterized algorithms),
draws exact samples, recovers fixed-size normalizers, approximates
fractional-exponent normalizers with a proven factor, and performs
randomized approximate MAP inference.  All arithmetic is exact rational.
"""

from .brute import (
    ExactInterval,
    MatrixTuple,
    SubsetMass,
    count_k_matchings_brute,
    count_matchings_brute,
    edpp_brute,
    map_brute,
    mixed_discriminant_brute,
    subset_masses,
    z_m_brute,
    z_mk_brute,
)
from .exact import ExactScalar, as_scalar, format_scalar, parse_scalar, scalar
from .fixtures import (
    banded_random,
    gram_random,
    hamiltonian_gadget,
    matching_matrices,
    partition_matrix,
)
from .graphs import (
    BipartiteGraphSpec,
    DirectedGraphSpec,
    parse_bipartite_text,
    parse_digraph_text,
)
from .inference import (
    ConditionState,
    EdppEstimate,
    MapCertificate,
    NormalizerOracle,
    Sampler,
    SubsetMassTable,
    UnivariatePolynomial,
    conditional_probability,
    edpp_fractional,
    interpolate,
    map_inference,
    sample,
    z_mk_all,
)
from .matrix import (
    LowRankFactorization,
    SparsityGraph,
    SquareMatrix,
    block_diag_power,
    det,
    hadamard_upper_bound,
    ldl_factor,
    load_matrix,
    low_rank_factor,
    parse_matrix_text,
    permanent,
    principal_minor,
    rank,
    sparsity_union,
)
from .rank_fpt import shared_subset_sum, zm_rank
from .treedecomp import (
    NiceTreeDecomposition,
    TreeDecomposition,
    decompose,
    make_nice,
    validate,
)
from .treewidth_fpt import (
    Configuration,
    DPTable,
    enumerate_configurations,
    permanental_sum,
    reorder_delta,
    zm_treewidth,
)

__version__ = "0.1.0"
