"""Loops, holonomy actions, and integer levels.

A closed loop on the plane carries the holonomy integral A(gamma) of the
symplectic potential; with the unit area form this is just the signed
enclosed area.  A loop sits on an integer level when A is an integer, and
any loop with enough area can be rescaled onto its nearest level.
"""

import numpy as np

from bsmoduli import (
    Loop,
    SymplecticSurface,
    action_integral,
    bs_defect,
    is_bohr_sommerfeld,
    project_to_bs,
    resample,
)

plane = SymplecticSurface.plane()

# A radius-1 circle encloses area pi, which is not an integer.
circle = Loop.circle(1.0, n=256)
print("circle r=1     action =", action_integral(circle, plane))
print("               defect =", bs_defect(circle, plane), " (pi - 3)")
print("               on a level?", is_bohr_sommerfeld(circle, plane))

# Rescaling about the centroid lands exactly on the nearest level (3).
level3 = project_to_bs(circle, plane)
print("projected      action =", action_integral(level3, plane))
radius = np.linalg.norm(level3.points[0] - level3.centroid())
print("               radius =", radius, " (sqrt(3/pi) =", np.sqrt(3 / np.pi), ")")

# The radius that hits level 1 directly: area pi r^2 = 1.
unit = Loop.circle(np.sqrt(1 / np.pi), n=256)
print("r = sqrt(1/pi) defect =", bs_defect(unit, plane))

# Spectral resampling preserves the action to machine precision.
wavy = Loop.perturbed_circle(1.0, n=64, harmonics=[(3, 0.1, 0.02)])
fine = resample(wavy, 512)
print("resample 64 -> 512 action drift =",
      abs(action_integral(fine, plane) - action_integral(wavy, plane)))

# Scanning radii shows where the levels sit: defect crosses zero at
# r = sqrt(k/pi).
print("\nradius   action   defect")
for r in np.linspace(0.4, 1.2, 9):
    loop = Loop.circle(r, n=128)
    print(f"{r:6.3f} {action_integral(loop, plane):8.4f} {bs_defect(loop, plane):+9.5f}")
