"""Three cavities recovered without any prior count information.

Sampling methods handle multiple scatterers for free: the boundary
system is assembled blockwise over all boundaries (the off-diagonal
blocks are smooth), and the indicator fields develop one blob per
obstacle.  Peak detection smooths the field at the obstacle scale and
counts the dominant maxima.
"""

import os
import time

import numpy as np

from platewave import PlateParams, discretize, star_curve, translate
from platewave.forward import assemble
from platewave.inverse import (
    SamplingGrid,
    dsm_indicators,
    field_to_pgm,
    localization_metrics,
)
from platewave.operator import DirectionSet, add_noise, synthesize

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

params = PlateParams(k=2 * np.pi, nu=0.3)
centers = [(2.0, 2.5), (2.0, -2.5), (-2.0, 0.0)]
curves = [translate(star_curve(0.3, 5), c) for c in centers]
meshes = [discretize(c, 416) for c in curves]

t0 = time.time()
sysmat = assemble(meshes, params)
dirs = DirectionSet.uniform(128)
ff = synthesize(meshes, params, dirs, dirs, sysmat=sysmat)
ff = add_noise(ff, "additive", 0.05, seed=7)
print(f"forward data for {len(meshes)} obstacles "
      f"({sum(m.n for m in meshes)} nodes): {time.time() - t0:.1f}s")

grid = SamplingGrid(box=(-10, 10, -10, 10), nx=500, ny=500)
d1, d2 = dsm_indicators(grid, ff)
for name, field in (("dsm1", d1), ("dsm2", d2)):
    m = localization_metrics(field, curves)
    peaks = ", ".join(f"({p[0]:+.1f}, {p[1]:+.1f})" for p in m["peaks"])
    print(f"{name}: {m['peak_count']} peaks at {peaks}")
    print(f"       true centers   (+2.0, +2.5), (+2.0, -2.5), (-2.0, +0.0)")
    field_to_pgm(field.rescale(), os.path.join(OUT, f"{name}_three_obstacles.pgm"))

print(f"\nheatmaps written under {OUT}")
