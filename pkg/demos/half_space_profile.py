"""
Half-space solve on a slab: the solution is a representation that can be
evaluated at any height, so the wall trace is checked exactly.
"""

import numpy as np

from stokes_resolvent import SlabGrid, solve_half_space
from stokes_resolvent.data import random_slab_rhs
from stokes_resolvent.halfspace import relative_slab_residual

slab = SlabGrid.make(2, 64, 65, 8.0)
rhs = random_slab_rhs(slab, seed=3)

for lam in (1.0, 1e-2 * np.exp(2.0j), 1e2 * np.exp(-2.0j)):
    sol = solve_half_space(rhs, lam)
    heights = np.array([0.0, 1e-3, 0.1, 1.0, 4.0])
    u, _ = sol.values(heights)
    mom, div = relative_slab_residual(sol, rhs)
    print(f"lam = {complex(lam):.3g}")
    for z, col in zip(heights, np.moveaxis(np.abs(u), -1, 0)):
        print(f"  z = {z:6.3f}  max |u| = {col.max():.3e}")
    print(f"  residual: momentum {mom:.2e}, divergence {div:.2e}")

# exact-in-z norms through a Gauss rule
print("norms at lam = 1:", {k: round(v, 6) for k, v in solve_half_space(rhs, 1.0).norms(2.0, "gauss").items()})
