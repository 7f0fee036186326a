"""Numerical toolkit for homogeneous self-similar measures in the plane and their projections."""

__version__ = "0.1.0"

from .exceptions import SelfSimError
from .ifs import IFSSystem, check_irrational_rotation, check_ssc, closed_form_dims, validate_system
from .measure import AtomicMeasure2D, atomic_approx, empirical_Dq, sample_measure
from .projection import density, direction_from_angle, lq_norm, project, projected_density

__all__ = [
    "__version__",
    "SelfSimError",
    "IFSSystem",
    "validate_system",
    "check_ssc",
    "check_irrational_rotation",
    "closed_form_dims",
    "AtomicMeasure2D",
    "atomic_approx",
    "sample_measure",
    "empirical_Dq",
    "project",
    "density",
    "projected_density",
    "lq_norm",
    "direction_from_angle",
]
