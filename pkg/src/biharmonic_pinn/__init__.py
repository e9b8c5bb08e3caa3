"""Physics-informed collocation solvers for biharmonic elasticity and plate problems."""

from . import autodiff, model, physics, loss, optimize, oracle  # noqa: F401

__version__ = "0.1.0"
