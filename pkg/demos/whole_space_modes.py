"""
Whole-space resolvent on the torus.

Solves the system for a shear forcing, for a pure divergence datum and for
random band-limited data, and prints the residuals.
"""

import numpy as np

from stokes_resolvent import RhsTriple, TorusGrid, scalar_field, solve_whole_space, vector_field
from stokes_resolvent.data import random_rhs
from stokes_resolvent.wholespace import divergence, relative_residual

grid = TorusGrid.cube(2, 32)
X = grid.mesh()
lam = 0.5 + 2j

# shear forcing: the velocity is the forcing damped by 1/(1 + lam), no pressure
F = vector_field(grid, np.stack([np.cos(X[1]), np.zeros(grid.shape)]))
sol = solve_whole_space(RhsTriple(F=F), lam)
print("shear: max |u1 - cos(x2)/(1+lam)| =", np.max(np.abs(sol.u.data[0] - np.cos(X[1]) / (1 + lam))))
print("shear: max |p| =", np.max(np.abs(sol.p.data)))

# divergence datum: a gradient velocity balanced by the pressure
sol = solve_whole_space(RhsTriple(g=scalar_field(grid, np.cos(X[0]))), lam)
print("div datum: max |u1 - sin(x1)| =", np.max(np.abs(sol.u.data[0] - np.sin(X[0]))))
print("div datum: max |div u - cos(x1)| =", np.max(np.abs(divergence(sol.u).data - np.cos(X[0]))))

for d, n in ((2, 64), (3, 16)):
    rhs = random_rhs(TorusGrid.cube(d, n), seed=1)
    sol = solve_whole_space(rhs, lam)
    mom, div = relative_residual(sol.u, sol.p, rhs, lam)
    print(f"random data d={d}, n={n}: relative residual momentum {mom:.2e}, divergence {div:.2e}")
