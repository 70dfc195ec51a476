"""
Holonomy algebras of the model metrics
======================================

The algebra generated by curvature and its covariant derivatives at one
point, compared against parallel transport around explicit loops.
"""
import numpy as np

from holoflow.holonomy import ambrose_singer_seeds, generate_algebra, holonomy_report
from holoflow.models import (
    berger_sphere,
    flat_torus,
    holonomy_log,
    loop_holonomy,
    octant_triangle,
    path_holonomy,
    rectangle_loop,
    rotation_angle,
    s2xs2,
    warped_t3,
)
from holoflow.models.symmetric import stereographic_christoffels, stereographic_metric

h = lambda x: 1 + 0.3 * np.cos(x)
models = {
    "flat torus": (flat_torus(3, 8), (0, 0, 0)),
    "S2 x S2": (s2xs2(), None),
    "Berger (1, 1, 4)": (berger_sphere(1.0, 1.0, 4.0), None),
    "warped T3, f = 1": (warped_t3(None, h, 32), (3, 0, 0)),
}

# Seeds are Rm(e_a ^ e_b) and its first two covariant derivatives; closing
# under the bracket gives the candidate algebra.
print(f"{'model':18s} dim  blocks      candidates")
for name, (geom, p) in models.items():
    H = generate_algebra(ambrose_singer_seeds(geom, p, 2), tol=1e-6, atol=1e-8)
    rep = holonomy_report(H)
    print(f"{name:18s} {rep.dim:3d}  {str(rep.invariantSubspaces):10s}  {rep.bergerCandidates}")

# S2 x S2 is Kahler: the complex structure comes back with J^2 = -Id.
J = holonomy_report(generate_algebra(ambrose_singer_seeds(s2xs2(), None, 0))).complexStructure
print("S2 x S2 complex structure:\n", np.round(J, 12) + 0.0)

# Transport around the geodesic triangle bounding one octant of the unit
# sphere rotates by its area, pi / 2.
P = path_holonomy(lambda x: stereographic_christoffels(x), octant_triangle(),
                  lambda x: stereographic_metric(x), steps=400)
print(f"octant triangle: rotation {rotation_angle(P):.10f}, pi/2 = {np.pi / 2:.10f}")

# On the split warped torus a grid loop in the (x, z) plane rotates only
# within that plane, matching the one-dimensional algebra found above.
geom = warped_t3(None, h, 64)
P = loop_holonomy(geom, rectangle_loop((0, 0, 0), (0, 2), (8, 1)))
L = holonomy_log(P)
print("log of grid-loop holonomy:\n", np.round(L, 6) + 0.0)
print("angle vs 2 pi |h'(x1) - h'(x0)|:", abs(L[0, 2]), 2 * np.pi * 0.3 * np.sin(np.pi / 4))
