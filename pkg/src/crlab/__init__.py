"""Numerical geometry of circle bundles over hyperbolic surfaces.

The package builds genus-g surface groups acting on the Poincare disk,
triangulates the quotient, solves the canonical-metric and curvature
normalization equations, and assembles the first-order deformation
operators whose kernel dimensions it certifies spectrally.
"""

from .errors import (
    CrlabError,
    GeometryDomainError,
    UnsupportedError,
    WeightError,
    UsageError,
    ConstructionError,
    SolvabilityError,
    NonconvergenceError,
    CertificateError,
    InconclusiveSpectrumError,
    DegenerateInputError,
    RecordValidationError,
)
from .mobius import (
    MobiusElement,
    FuchsianGroup,
    fuchsian_group,
    group_relation_residual,
    mobius_apply,
    mobius_compose,
    pair_isometry,
    point_to_zero,
    polygon_corners,
    random_su11,
    rotation,
)
from .mesh import (
    SurfaceMesh,
    SectionField,
    build_mesh,
    evaluate_field,
    evaluate_log_metric,
    hyperbolic_area,
    hyperbolic_midpoint,
    quadrature,
    random_domain_points,
    reduce_to_domain,
    rho,
    transport_across_pairing,
)
from .bundle import (
    HermitianMetricField,
    ModelMetric,
    ContactFormSample,
    TWCurvatureResult,
    bundle_norm,
    contact_form,
    contact_exactness_residual,
    kappa_constant,
    model_group_action,
    model_metric,
    reduced_tw_curvature,
    verify_curvature_identity,
)
from .elliptic import (
    BoundsReport,
    PoissonProblem,
    YamabeProblem,
    mass_matrix,
    maximum_principle_bounds,
    poisson_residual,
    solve_hermitian_metric,
    solve_poisson,
    stiffness_matrix,
    yamabe_newton,
)
from .acs import (
    AlmostComplexRecord,
    DeformationTensorE,
    STANDARD,
    deformation_from_matrix,
    deformation_matrix,
    nijenhuis_fd,
    operator_norm,
    phi_inverse,
    phi_map,
    record_from_matrix,
    record_matrix,
    validate_deformation,
    validate_record,
)
from .sections import (
    Bump,
    bump_field,
    interior_bumps,
    polygon_inradius,
    seam_bump,
    seam_bump_field,
)
from .fit import (
    affine_scalar_derivatives,
    connection_dbar,
    derivative_matrices,
)
from .deformation import (
    ConnectionField,
    CotangentPair,
    DeformationOperators,
    DeformationPair,
    SpectrumCertificate,
    SplitResult,
    adjointness_defect,
    apply_P,
    apply_P_star,
    assemble_laplacian_Delta,
    gauge_tensor,
    holomorphic_section_dim,
    inner_product_E,
    inner_product_V,
    kernel_dimension,
    kernel_dimension_Delta,
    kernel_dimension_P_star,
    norm_E,
    norm_V,
    pair_from_vstar,
    split_deformation,
    vstar_of,
)
from .autos import (
    BundleAutoSample,
    InfinitesimalAuto,
    geodesic,
    geodesic_log,
    geodesic_velocity,
    injectivity_bound,
    parallel_factor,
    seam_residual,
    sigma_inverse,
    sigma_map,
)

__all__ = [
    "CrlabError",
    "GeometryDomainError",
    "UnsupportedError",
    "WeightError",
    "UsageError",
    "ConstructionError",
    "SolvabilityError",
    "NonconvergenceError",
    "CertificateError",
    "InconclusiveSpectrumError",
    "DegenerateInputError",
    "RecordValidationError",
    "MobiusElement",
    "FuchsianGroup",
    "fuchsian_group",
    "group_relation_residual",
    "mobius_apply",
    "mobius_compose",
    "pair_isometry",
    "point_to_zero",
    "polygon_corners",
    "random_su11",
    "rotation",
    "SurfaceMesh",
    "SectionField",
    "build_mesh",
    "evaluate_field",
    "evaluate_log_metric",
    "hyperbolic_area",
    "hyperbolic_midpoint",
    "quadrature",
    "random_domain_points",
    "reduce_to_domain",
    "rho",
    "transport_across_pairing",
    "HermitianMetricField",
    "ModelMetric",
    "ContactFormSample",
    "TWCurvatureResult",
    "bundle_norm",
    "contact_form",
    "contact_exactness_residual",
    "kappa_constant",
    "model_group_action",
    "model_metric",
    "reduced_tw_curvature",
    "verify_curvature_identity",
    "BoundsReport",
    "PoissonProblem",
    "YamabeProblem",
    "mass_matrix",
    "maximum_principle_bounds",
    "poisson_residual",
    "solve_hermitian_metric",
    "solve_poisson",
    "stiffness_matrix",
    "yamabe_newton",
    "AlmostComplexRecord",
    "DeformationTensorE",
    "STANDARD",
    "deformation_from_matrix",
    "deformation_matrix",
    "nijenhuis_fd",
    "operator_norm",
    "phi_inverse",
    "phi_map",
    "record_from_matrix",
    "record_matrix",
    "validate_deformation",
    "validate_record",
    "Bump",
    "bump_field",
    "interior_bumps",
    "polygon_inradius",
    "seam_bump",
    "seam_bump_field",
    "affine_scalar_derivatives",
    "connection_dbar",
    "derivative_matrices",
    "ConnectionField",
    "CotangentPair",
    "DeformationOperators",
    "DeformationPair",
    "SpectrumCertificate",
    "SplitResult",
    "adjointness_defect",
    "apply_P",
    "apply_P_star",
    "assemble_laplacian_Delta",
    "gauge_tensor",
    "holomorphic_section_dim",
    "inner_product_E",
    "inner_product_V",
    "kernel_dimension",
    "kernel_dimension_Delta",
    "kernel_dimension_P_star",
    "norm_E",
    "norm_V",
    "pair_from_vstar",
    "split_deformation",
    "vstar_of",
    "BundleAutoSample",
    "InfinitesimalAuto",
    "geodesic",
    "geodesic_log",
    "geodesic_velocity",
    "injectivity_bound",
    "parallel_factor",
    "seam_residual",
    "sigma_inverse",
    "sigma_map",
]

__version__ = "0.1.0"
