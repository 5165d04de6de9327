"""Catenoids in H^2 x R and solvers that perturb them to mean curvature 1/2."""
__version__ = "0.1.0"
