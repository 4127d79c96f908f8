"""Best coapproximation and contractive projections in finite-dimensional normed spaces."""
from .errors import (
    CoapproxError, DimensionMismatch, InvalidBody, MaxIterExceeded, NoSmoothPoints, NotCertified,
    NotFound, NotOnBoundary, NotSmooth, SearchExhausted, SelectionInvalid, ZeroFunctional,
    ZeroVector,
)
from .gauge import (
    ConvexBody, HalfSpace, HalfSpaceBody, NormBall, OracleBody, Polytope, boundary_point,
    contains, decompose, gauge, hausdorff_estimate, intersection_body, lp_gauge, scale,
    supporting_halfspace, translate,
)
from .halfspace import (
    HalfSpaceProjection, KernelProjection, contractive_projection, dominated_coordinate,
    find_norm_one_projection, halfspace_projection, homogeneous_extension,
    is_one_complemented_hyperplane_l1, is_one_complemented_hyperplane_linf, kernel_retraction,
    operator_norm_estimate,
)
from .intersect import (
    AveragedMap, FixCheckReport, IterationConfig, averaged_map, default_weights, fixed_point,
    project_onto_intersection, strictly_convex_fix_check, zero_in_hull,
)
from .oracle import (
    CoapproxReport, SampledSet, find_coapprox, is_coapprox, is_optimal_point, kernel_basis,
    nonconvex_projection_linf2, nonexpansiveness_sweep, verify_counterexample_linf4,
)
from .spaces import (
    INF, NormSpec, approximating_norms, dual_norm, norm, realify, supporting_functional,
)

__version__ = "0.1.0"
