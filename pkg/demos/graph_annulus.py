"""Horizontal cmc 1/2 graph over an annulus, Newton from two seeds."""
import numpy as np

from hrcmc import graph_solver as gs
from hrcmc.verify import annulus_problem

dom, data = annulus_problem(0.05)
for seed in ("harmonic", "constant"):
    sol = gs.solve_dirichlet(dom, data, gs.GraphConfig(smallness=0.2, seed=seed))
    print(seed, sol.newton_steps, "steps, residuals", np.array2string(np.array(sol.residuals), precision=2))
_, dn = gs.boundary_derivative(sol.graph, 1, direction="inward")
print("inward derivative on the hole: min %.3e max %.3e" % (dn.min(), dn.max()))
