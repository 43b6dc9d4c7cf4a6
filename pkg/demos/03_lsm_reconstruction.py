"""Linear sampling method on clean data.

For every sampling point z the regularized far-field equation
(alpha I + F*F) g_z = F* phi_z is solved through one shared SVD; the
indicator 1/||g_z|| stays O(1) inside the cavity and collapses outside,
since exterior points take the right-hand side out of the operator's
range and the density norm blows up as alpha decreases.
"""

import os

import numpy as np

from platewave import PlateParams, discretize, star_curve
from platewave.forward import assemble
from platewave.inverse import (
    SamplingGrid,
    TikhonovSolver,
    field_to_pgm,
    localization_metrics,
    lsm_indicator,
    lsm_norms_at,
)
from platewave.operator import DirectionSet, synthesize

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

params = PlateParams(k=2 * np.pi, nu=0.3)
curve = star_curve(0.3, 5)
mesh = discretize(curve, 288)
dirs = DirectionSet.uniform(128)
ff = synthesize(mesh, params, dirs, dirs, sysmat=assemble(mesh, params))
solver = TikhonovSolver(ff)

# blow-up contrast between an interior and an exterior sampling point
inside, outside = np.array([[0.2, 0.1]]), np.array([[2.5, 0.0]])
for alpha in (1e-2, 1e-4, 1e-6):
    gi = lsm_norms_at(solver, inside, alpha)[0]
    go = lsm_norms_at(solver, outside, alpha)[0]
    print(f"alpha = {alpha:7.0e}:  ||g|| inside = {gi:9.3e}   outside = {go:9.3e}")

grid = SamplingGrid(box=(-3, 3, -3, 3), nx=300, ny=300)
field = lsm_indicator(grid, ff, alpha=1e-4, solver=solver)
metrics = localization_metrics(field, curve)
print()
print(f"top-decile containment: {metrics['containment_top_decile']:.3f}")
print(f"centroid error:         {metrics['centroid_error']:.3f}")

path = os.path.join(OUT, "lsm_5arms_clean.pgm")
from platewave.inverse import log_rescale
field_to_pgm(log_rescale(field), path)
print(f"heatmap (log-rescaled, as plotted in the experiments): {path}")
