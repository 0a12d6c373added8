"""Spatial-coherence channel estimation for optical-IRS-assisted VLC.

Layers, bottom up: `geometry` (points, grids, reflection-law normals),
`channel` (Lambertian reflected gains, CSI tensors, pilots),
`coherence` (growth-rate expansion and coherence distance),
`estimator` (three-phase spatial-sampling estimation),
`experiments` (configs, sweeps, CSV emission) and the `oirsvlc` CLI.
"""

from .channel import (
    AssociationPattern,
    CsiTensor,
    LinkGeometry,
    PilotBlock,
    SceneConfig,
    aperture_gain,
    assemble_H,
    build_csi_tensor,
    generate_pilots,
    pair_column,
    patch_gain_quadrature,
    point_gain,
    simulate_rx,
    vec_H_blkdiag,
)
from .coherence import (
    CoherenceReport,
    TaylorCoeffs,
    coherence_distance,
    coherence_length_1d,
    coherence_profile,
    growth_rate_exact,
    growth_rate_taylor,
    taylor_coeffs,
)
from .errors import (
    ConfigError,
    DegenerateGeometryError,
    IdentifiabilityError,
    IncompleteEstimationError,
    InfiniteCoherenceError,
    LayoutError,
    OirsVlcError,
    ShapeError,
    SingularGeometryError,
    SingularSystemError,
    ZeroGainError,
    ZeroReferenceError,
)
from .estimator import (
    EstimationResult,
    SubarrayLayout,
    design_dense_pattern,
    design_layout,
    design_pattern,
    flops_estimate,
    gather_samples,
    interpolate_full,
    mmse_estimate,
    run_algorithm1,
)
from .experiments import (
    ExperimentConfig,
    load_config,
    loads,
    dumps,
    nmse,
    nmse_db,
    run_coherence,
    run_fig4,
    run_noise_sweep,
    run_overhead_report,
)
from .geometry import (
    OirsGrid,
    alignment_normal,
    element_position,
    element_positions,
    normalize,
    plane_basis_from,
)

__version__ = "0.1.0"
