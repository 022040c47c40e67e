"""Exact construction, rendering and verification of rational self-affine tiles,
their real-slice ("intersective") tiles and shift-radix-system tiles."""

from .exactnum import (
    EmbeddingData,
    FieldVector,
    LaurentElem,
    PolynomialSpec,
    compute_embeddings,
    embed_arch,
    is_expanding,
    laurent_to_str,
    parse_laurent,
    reduce_bottom,
    reduce_top,
    to_field_vector,
    validate_spec,
)
from .lattice import LatticeHNF, SpanClosure, check_primitivity, lambda_basis, lattice_membership, z_cap_lambda
from .dynamics import (
    Address,
    DigitSet,
    SRSParam,
    SurrogateExpansion,
    T_alpha,
    addresses,
    iota,
    preimages_in_lambda,
    srs_param,
    srs_preimages,
    srs_tau,
    surrogate,
    validate_digits,
)
from .tiles import TileCloud, approximate_F, approximate_G, approximate_srs_tile, slice_decomposition
from .verify import (
    MultiplicityReport,
    TilingCertificate,
    check_standard,
    estimate_multiplicity,
    find_exclusive_point,
    greedy_point,
    hausdorff_report,
    image_characterization,
    volume_balance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
