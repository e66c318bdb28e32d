"""Direct and inverse acoustic scattering by sound-soft piecewise-linear cracks."""
from ._backend import BACKEND
from .experiments import ConfigError, ExperimentConfig, add_noise, plot_values, run_experiment
from .forward import (FarFieldPattern, PlaneWave, PointSource, crack_farfield, farfield, scattered_field,
                      solve, solve_density)
from .geometry import GradedMesh, GradingParams, PiecewiseLinearCrack, build_mesh
from .indicators import (IndicatorGrid, contrast_crack, contrast_disk, contrast_point_source,
                         factorization_indicator, factorization_indicator_la, radius_scan,
                         support_accumulate)
from .newton import NewtonConfig, reconstruct
from .scatterers import (DiskScatterer, Eigensystem, FarFieldMatrix, disk_eigensystem, disk_farfield,
                         farfield_matrix, fsharp_eigensystem, restrict_aperture)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigError", "ExperimentConfig", "add_noise", "plot_values", "run_experiment",
    "FarFieldPattern", "PlaneWave", "PointSource", "crack_farfield", "farfield", "scattered_field",
    "solve", "solve_density", "GradedMesh", "GradingParams", "PiecewiseLinearCrack", "build_mesh",
    "IndicatorGrid", "contrast_crack", "contrast_disk", "contrast_point_source",
    "factorization_indicator", "factorization_indicator_la", "radius_scan", "support_accumulate",
    "NewtonConfig", "reconstruct", "DiskScatterer", "Eigensystem", "FarFieldMatrix",
    "disk_eigensystem", "disk_farfield", "farfield_matrix", "fsharp_eigensystem", "restrict_aperture",
]
