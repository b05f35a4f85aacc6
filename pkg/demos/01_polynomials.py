"""
Sparse polynomials: arithmetic, calculus, homogenization
========================================================

A tour of the polynomial layer everything else is built on.
"""

import numpy as np

from momentsos import Polynomial, monomial_basis

# Variables are 0-indexed but print 1-indexed, matching the usual x1..xn.
n = 3
x1, x2, x3 = (Polynomial.variable(n, i) for i in range(n))

f = x1**6 + x2**6 + x3**6 - x1**3 * x2**3 - x2**3 * x3**3 - x3**3 * x1**3
print("f       =", f)
print("deg f   =", f.degree)
print("f(1,1,1)=", f.evaluate([1.0, 1.0, 1.0]))

# Derivatives are polynomials too; *_at evaluates them in one call.
print("df/dx1  =", f.partial(0))
pt = np.array([0.2, -0.4, 0.7])
print("grad at", pt, "=", f.gradient_at(pt))
print("hessian diag =", np.diag(f.hessian_at(pt)))

# The graded monomial basis orders by total degree, x1-heaviest first,
# and lower degrees are always prefixes of higher ones.
bs = monomial_basis(2, 2)
print("\nbasis(2, 2) =", list(bs))

# Coefficient vectors against a basis and back.
g = 2.0 * x1 * x2 - x3**2 + 0.5
vec = g.coefficient_vector(monomial_basis(n, 2))
print("\ng =", g)
print("coefficients over basis(3, 2):", vec)

# Homogenization prepends a slack variable x0.  On the slice x0 = 1 the
# homogenized polynomial agrees with the original; top_form picks out what
# survives at infinity (x0 = 0).
gh = g.homogenize_to_degree(2)
print("\nhomogenized g             =", gh)
print("gh(1, x) == g(x)?        ", gh.evaluate([1.0, *pt]) == g.evaluate(pt))
print("dominant part of g        =", g.top_form())
print("dehomogenize(gh) == g?   ", gh.dehomogenize() == g)
