"""
Truncated moment sequences, moment matrices, flat rank
======================================================

How atomic measures turn into moment data and how the rank of the moment
matrix counts atoms.
"""

import numpy as np

from momentsos import (
    AtomicMeasure,
    Polynomial,
    extract_atoms,
    flat_truncation,
    localizing_matrix,
    moment_matrix,
    pair,
    tms_from_atoms,
)

# A measure with two atoms in the plane.
mu = AtomicMeasure(
    weights=np.array([0.7, 1.3]),
    points=np.array([[0.5, -0.2], [-0.8, 0.4]]),
)
print("measure:", mu.to_json())

# Its truncated moment sequence up to degree 6: one number per monomial.
w = tms_from_atoms(mu, 6)
print("number of moments of degree <= 6:", len(w.values))
print("<1, w> = total mass =", w[(0, 0)])
print("<x1*x2, w> =", w[(1, 1)])

# Pairing a polynomial with the sequence is integration against the measure.
f = Polynomial(2, {(2, 0): 1.0, (0, 1): -3.0})
print("\npair(x1^2 - 3 x2, w) =", pair(f, w))
print("direct integral       =", mu.integrate(f))

# The moment matrix is PSD and its numerical rank counts the atoms.
m2 = moment_matrix(w, 2)
print("\nmoment matrix order 2: shape", m2.shape)
print("eigenvalues:", np.round(np.linalg.eigvalsh(m2), 6))

# Localizing matrices twist the moments by a constraint polynomial.  For
# q >= 0 on the support they are PSD as well.
q = Polynomial(2, {(0, 0): 2.0, (2, 0): -1.0, (0, 2): -1.0})  # 2 - |x|^2
lq = localizing_matrix(q, w, 2)
print("smallest eigenvalue of L_q:", np.linalg.eigvalsh(lq)[0])

# Flat truncation: rank stabilizes between consecutive orders, certifying
# an atomic representing measure, which extract_atoms then recovers.
ft = flat_truncation(w, d0=1, dK=1)
print("\nflat:", ft.flat, " order:", ft.order, " rank:", ft.rank)
back = extract_atoms(w, ft.order)
print("recovered:", back.to_json())
