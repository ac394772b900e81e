"""Splitting-based Poisson integrators with exact subflows."""
from .core import PoissonSystem, ScalarField, StructureMatrixField
from .splitting import (CompositionScheme, Integrator, SplitSystem, SubFlow, builtin_schemes,
                        integrate, make_integrator)
from .trajectory import TrajectoryRecord

__all__ = ["PoissonSystem", "ScalarField", "StructureMatrixField", "CompositionScheme",
           "Integrator", "SplitSystem", "SubFlow", "builtin_schemes", "integrate",
           "make_integrator", "TrajectoryRecord"]
__version__ = "0.1.0"
