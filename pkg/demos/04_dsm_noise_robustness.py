"""Direct sampling under heavy measurement noise.

The DSM indicators need only one application of the far-field matrix per
sampling point - no regularized solve - which makes them strikingly
stable: at 50% noise their fields barely move, while the LSM indicator
visibly degrades.  Both direct indicators concentrate on an annular
ridge along the cavity boundary (they backproject the induced boundary
sources), so their peak marks the obstacle while the LSM fills its
interior.
"""

import os

import numpy as np

from platewave import PlateParams, discretize, star_curve
from platewave.forward import assemble
from platewave.inverse import (
    SamplingGrid,
    dsm_indicators,
    field_to_pgm,
    localization_metrics,
    lsm_indicator,
)
from platewave.operator import DirectionSet, add_noise, synthesize

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

params = PlateParams(k=2 * np.pi, nu=0.3)
curve = star_curve(0.3, 5)
mesh = discretize(curve, 288)
dirs = DirectionSet.uniform(128)
ff = synthesize(mesh, params, dirs, dirs, sysmat=assemble(mesh, params))
grid = SamplingGrid(box=(-3, 3, -3, 3), nx=300, ny=300)

print(f"{'data':^18s} {'method':^6s} {'containment':>11s} {'centroid':>9s} {'peaks':>6s}")
for label, data, alpha in [("clean", ff, 1e-4),
                           ("50% additive", add_noise(ff, "additive", 0.5, seed=11), 1e-1)]:
    d1, d2 = dsm_indicators(grid, data)
    lsm = lsm_indicator(grid, data, alpha)
    for name, field in (("lsm", lsm), ("dsm1", d1), ("dsm2", d2)):
        m = localization_metrics(field, curve)
        print(f"{label:^18s} {name:^6s} {m['containment_top_decile']:11.3f} "
              f"{m['centroid_error']:9.3f} {m['peak_count']:6d}")
        tag = label.split()[0]
        if name == "lsm":
            from platewave.inverse import log_rescale
            field_to_pgm(log_rescale(field), os.path.join(OUT, f"{name}_{tag}.pgm"))
        else:
            field_to_pgm(field.rescale(), os.path.join(OUT, f"{name}_{tag}.pgm"))

print(f"\nheatmaps written under {OUT}")
print("Note how the DSM rows barely change between clean and noisy data.")
