"""Variational polaron time-local master equation for donor-acceptor
excitation energy transfer, with Redfield, polaron and Foerster limits,
a correlated-bath extension and a discretized-bath exact oracle."""

from .correlated import SpatialModel, correlated_kernels, correlated_solution
from .correlations import CorrelationKernels, build_kernels
from .driver import SimulationResult, make_solution, simulate, transfer_rate
from .dynamics import (Trajectory, fit_rates, niba_steady_state, propagate,
                       rabi_population)
from .generator import (EigenDecomposition, LiouvilleGenerator,
                        build_generator, eigen_decompose, forster_rates,
                        response)
from .oracle import DiscretizedBath, FockConfig, discretize, exact_propagate
from .quadrature import QuadratureSpec, integrate
from .spectral import (OhmicDrude, SpectralDensity, SuperOhmicExp,
                       TabulatedSpectralDensity, reorganization_energy)
from .units import FS_UNITS, KB_CM1_PER_K, PS_UNITS, UnitSystem
from .variational import (FProfile, VariationalSolution,
                          displacement_fraction, free_energy_bound,
                          limit_solution, renormalization_B, shift_R, solve)

__version__ = "0.1.0"
