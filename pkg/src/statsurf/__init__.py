"""Statistical hypersurfaces from log-sum-exp free energies.

Core objects: models (affine or expression exponents), their pointwise
evaluation (weights, entropy, moments), extrinsic geometry of the graph of
F, entropy-driven deformations with classification, replicator dynamics,
weight-potential reconstruction, and entropy integrals over boxes and
cone-bounded regions.
"""

from .deformation import (
    CoordinateShift,
    Deformation,
    classify,
    constant_deformation,
    delta_entropy,
    delta_weights,
    expression_deformation,
    moment_correlation,
    parse_deformation,
    shift_deformation,
    solve_reversible_component,
    total_uncorrelation_test,
    variation_report,
)
from .dynamics import (
    WeightedGraph,
    laplacian,
    product_graph,
    replicator_orbit,
    replicator_step,
    stationarity_equivalence,
)
from .errors import (
    DeformationFormatError,
    DegeneratePointError,
    DegenerateRegionError,
    DomainEvaluationError,
    InputError,
    InternalCheckError,
    ModelFormatError,
    PolylogDomainError,
    PotentialInputError,
    QuadratureBudgetError,
    RegionFormatError,
    SingularPivotError,
    ZeroMeanFitnessError,
)
from .geometry import (
    entropy_at,
    gauss_curvature,
    geometry_at,
    principal_curvatures,
    riemann_tensor,
    scalar_curvature,
    weingarten,
)
from .integral import (
    ConeRegion,
    asymptote_S2,
    closed_S2,
    cone_face_flux,
    cone_region,
    entropy_integral,
    linear_entropy_volume_check,
    parse_region,
)
from .model import (
    StatisticalModel,
    affine_model,
    canonicalize,
    evaluate,
    expr_model,
    model_to_doc,
    parse_model,
    tropical_sum,
)
from .polylog import ZETA3, li2, li3
from .potential import (
    PotentialParams,
    closed_form_weights,
    fit_params,
    gibbs_params,
    integrate_along,
    integrate_weight_pde,
    weight_jacobian,
)
from .verification import run_all

__version__ = "0.1.0"
