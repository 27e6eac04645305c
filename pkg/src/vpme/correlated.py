"""Common-bath (spatially correlated) extension.

Both sites couple to one bath with position phase factors, so every
displacement-sensitive weight acquires (1 - cos(k.d)).  With a linear
isotropic dispersion w = v|k| and the angular average of cos(k.d) taken
inside the integrals, that factor becomes (1 - gamma(w)) with

    gamma(w) = cos(w d/v)            (1-d kernel)
    gamma(w) = sin(w d/v)/(w d/v)    (3-d isotropic kernel)

F and B carry (1 - gamma); the bath shift R does not (the phases cancel
in f_k(f_k - 2 g_k)).  New cross-site kernels appear:

    Lam12(tau) = int dw J (1-F)^2 gamma(w) [cos coth - i sin]
    C2(t)      = 2 int dw (J/w) F(1-F) gamma(w) cos(w t)

and phi, psi, Lam_C gain the (1 - gamma) weight, which also removes the
Ohmic infrared divergence at any finite separation.  d = 0 and d = inf
are exact sentinels (gamma = 1 and gamma = 0): a fully correlated bath
decouples from the transfer coordinate (B = 1, F = 1, V_R = V), and the
infinite-separation kernels reduce to the independent-bath module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlations import CorrelationKernels, build_kernels
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .spectral import SpectralDensity
from .variational import VariationalSolution, solve

__all__ = ["SpatialModel", "correlated_solution", "correlated_kernels"]


@dataclass(frozen=True)
class SpatialModel:
    """Inter-site separation through the delay d/v (in time units) and
    the angular-average kernel variant."""

    kernel: str  # "1d" | "3d"
    d_over_v: float

    def __post_init__(self):
        if self.kernel not in ("1d", "3d"):
            raise ValueError("kernel must be '1d' or '3d'")
        if self.d_over_v < 0:
            raise ValueError("separation must be >= 0")

    def gamma(self, omega):
        """Angular average of cos(k.d) on the shell w = v|k|; in [-1, 1],
        -> 1 as d -> 0 and decays (oscillating) as w d/v grows."""
        omega = np.asarray(omega, dtype=float)
        if self.d_over_v == 0.0:
            return np.ones_like(omega)
        if math.isinf(self.d_over_v):
            return np.zeros_like(omega)
        chi = omega * self.d_over_v
        if self.kernel == "1d":
            return np.cos(chi)
        return np.sinc(chi / np.pi)

    def one_minus_gamma(self, omega):
        omega = np.asarray(omega, dtype=float)
        if self.d_over_v == 0.0:
            return np.zeros_like(omega)
        if math.isinf(self.d_over_v):
            return np.ones_like(omega)
        chi = omega * self.d_over_v
        small = np.abs(chi) < 1e-4
        out = 1.0 - self.gamma(omega)
        if self.kernel == "1d":
            out = np.where(small, 0.5 * chi**2 * (1.0 - chi**2 / 12.0), out)
        else:
            out = np.where(small, chi**2 / 6.0 * (1.0 - chi**2 / 20.0), out)
        return out

    @property
    def ir_regularizes(self) -> bool:
        """(1 - gamma) ~ (w d/v)^2 at small w suppresses the Ohmic
        infrared divergence for any finite nonzero separation."""
        return 0.0 < self.d_over_v < math.inf


def correlated_solution(eps, v, density: SpectralDensity, beta,
                        spatial: SpatialModel,
                        spec: QuadratureSpec = DEFAULT_SPEC,
                        ) -> VariationalSolution:
    """Self-consistent variational solution with the (1 - gamma) weights
    inserted into F and B (same scan/branch machinery as the independent
    case; for d = 0 the bath decouples: B = 1, F = 1, V_R = V)."""
    return solve(eps, v, density, beta, spec=spec, spatial=spatial)


def correlated_kernels(solution: VariationalSolution, t_max,
                       spec: QuadratureSpec = DEFAULT_SPEC,
                       dt=None) -> CorrelationKernels:
    """Kernel tables for a common-bath solution: phi/psi/Lam_C carry
    (1-gamma), Lam12 and C2 join the homogeneous and inhomogeneous sets."""
    if solution.spatial is None:
        raise ValueError("solution was not solved with a SpatialModel; "
                         "use correlated_solution first")
    return build_kernels(solution, t_max, spec=spec, dt=dt)
