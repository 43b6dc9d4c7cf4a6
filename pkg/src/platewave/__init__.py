"""Flexural-wave scattering from supported cavities in thin Kirchhoff plates.

Boundary-integral forward solver, far-field synthesis, and qualitative
reconstruction via the linear sampling method and two direct sampling
indicators.
"""

__version__ = "0.1.0"

from .geometry import (
    BoundaryMesh,
    SmoothClosedCurve,
    cavity_curve,
    circle_curve,
    curve_frame,
    discretize,
    star_curve,
    translate,
)
from .kernels import (
    RadialDerivTable,
    bessel_suite,
    directional_derivative,
    farfield_constant,
    phi,
    phi_derivs,
    phi_farfield,
)
from .forward import (
    DensityPair,
    IncidentTrace,
    PlateParams,
    SystemMatrix,
    assemble,
    eval_farfield,
    eval_scattered,
    kernel_eval,
    plane_wave_trace,
    point_source_test,
    point_source_trace,
    solve,
)
from .operator import (
    DirectionSet,
    FarFieldMatrix,
    add_noise,
    apply_adjoint,
    apply_operator,
    load_bhff,
    reciprocity_residual,
    save_bhff,
    save_csv,
    synthesize,
)
from .inverse import (
    IndicatorField,
    SamplingGrid,
    TikhonovSolver,
    dsm_indicators,
    dsm_values_at,
    field_to_csv,
    field_to_pgm,
    localization_metrics,
    lsm_indicator,
    lsm_norms_at,
    lsm_solve,
    rhs_vector,
)
