"""Accuracy of the forward solver: the interior point-source protocol.

A point source placed inside the cavity radiates a field whose traces we
feed to the boundary solver as incident data; the unique radiating
solution is minus the point source itself, so the computed scattered
field can be compared against a closed form at exterior receivers.  The
relative error (max over ten receivers, normalized by the discrete L1
norm of the densities) drops spectrally with the node count.
"""

import time

import numpy as np

from platewave import PlateParams, cavity_curve, circle_curve, discretize, star_curve
from platewave.forward import point_source_test

params = PlateParams(k=2 * np.pi, nu=0.3)

print(f"wavenumber k = 2*pi (wavelength 1), Poisson ratio nu = {params.nu}")
print(f"{'domain':10s} {'N':>6s} {'rel. error':>12s} {'time':>8s}")

for label, curve, nodes in [
    ("circle", circle_curve(1.0), (64, 128)),
    ("5-arms", star_curve(0.3, 5), (72, 144, 288)),
    ("cavity", cavity_curve(), (128, 256)),
]:
    for n in nodes:
        t0 = time.time()
        res = point_source_test(discretize(curve, n), params)
        print(f"{label:10s} {n:6d} {res['relative_error']:12.3e} "
              f"{time.time() - t0:7.2f}s")

print()
print("Doubling the node count on an under-resolved grid cuts the error by")
print("orders of magnitude; at the production counts the solver sits near")
print("the floor set by the diagonal quadrature corrections (~1e-11).")
