"""Perturb the truncated catenoid end to cmc 1/2 for shrinking necksizes."""
import numpy as np

from hrcmc import end_solver
from hrcmc.catenoid import CatenoidParams

for eps in (0.1, 0.05, 0.025):
    P = CatenoidParams.from_epsilon(eps)
    phi = np.zeros(3)
    phi[2] = eps**2
    sol = end_solver.solve_cmc_end(P, phi)
    print(f"eps={eps:<6} iterations={sol.iterations} factor={sol.contraction_factors[0]:.2e} "
          f"H deviation={sol.final_H_deviation:.1e}")
