"""Sample a catenoid in both models and write OBJ meshes."""
import sys

import numpy as np

from hrcmc import catenoid
from hrcmc.catenoid import CatenoidParams

out = sys.argv[1] if len(sys.argv) > 1 else "."
for alpha in (1.0, 2.0, 4.0):
    P = CatenoidParams(alpha)
    s = np.linspace(-P.S, P.S, 96)
    th = np.linspace(0, 2 * np.pi, 97)
    grid = catenoid.build_grid(P, s, th)
    for model in ("uhp", "ball"):
        path = f"{out}/catenoid_a{alpha:g}_{model}.obj"
        catenoid.export_mesh(grid, "obj", path, model)
        print(path)
