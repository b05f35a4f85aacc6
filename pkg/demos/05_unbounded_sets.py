"""
Unbounded feasible sets: the homogenized hierarchy
==================================================

The plain hierarchy needs a compactness promise.  For unbounded sets the
problem is lifted to the unit sphere with one extra coordinate x0; finite
points reappear on the x0 > 0 cap, and x0 = 0 carries whatever escapes to
infinity.  Certification then splits extracted sphere atoms into finite
points and directions at infinity.
"""

import json
import pathlib

import numpy as np

from momentsos import (
    dehomogenize_atoms,
    homogenize_set,
    problem_from_json,
    solve_hierarchy,
)

here = pathlib.Path(__file__).resolve().parent
with open(here.parent / "problems" / "ex43.json") as fh:
    gmp = problem_from_json(json.load(fh))

# The lifted set: original equalities homogenized, unit sphere appended,
# and x0 >= 0 to pick the upper cap.
lifted = homogenize_set(gmp.set)
print("lifted to", lifted.nvars, "variables:")
for c in lifted.equalities:
    print("   0 =", c)
for c in lifted.inequalities:
    print("   0 <=", c)

result = solve_hierarchy(gmp, "homogenized", 2, 2)
print("\nstatus:", result.status)
print("value :", result.value)
print("atoms after dehomogenization:", result.measure.to_json())
if result.atoms_at_infinity is not None and result.atoms_at_infinity.num_atoms:
    print("directions at infinity:", result.atoms_at_infinity.to_json())
else:
    print("no mass at infinity: the optimum is attained")

# dehomogenize_atoms is the reusable piece: weights scale by tau^d where
# tau is the x0 coordinate of a sphere atom and d the homogenization degree.
raw = result.certificate.raw_measure
print("\nraw sphere atoms:", np.round(raw.points, 6))
finite, at_inf = dehomogenize_atoms(raw, gmp.d)
print("finite part     :", finite.to_json())
