"""r-convex sets, Green's function bounds and eigenvalue sums for perturbed matrices."""

__version__ = "0.1.0"
