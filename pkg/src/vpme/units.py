"""Unit conventions and shared special-function helpers.

Energies cross the API in wavenumbers (cm^-1), temperatures in kelvin and
times in picoseconds.  Internally everything is an angular frequency
(hbar = 1); the default internal time unit is the picosecond, so energies
become rad/ps via  omega = 2*pi*c[cm/ps] * E[cm^-1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "C_CM_PER_PS",
    "KB_CM1_PER_K",
    "UnitSystem",
    "PS_UNITS",
    "FS_UNITS",
    "coth_half",
    "tanh_half",
]

# Exact SI definitions: c = 2.99792458e10 cm/s, k_B = 1.380649e-23 J/K,
# h = 6.62607015e-34 J s.  k_B/(h c) gives cm^-1 per kelvin.
C_CM_PER_PS = 2.99792458e10 * 1e-12
KB_CM1_PER_K = 1.380649e-23 / (6.62607015e-34 * 2.99792458e10)


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between the cm^-1/K/ps API surface and internal units.

    ``time_per_ps`` is the number of internal time units in one picosecond
    (1.0 for rad/ps internally, 1000.0 for rad/fs).  All public results are
    invariant under this choice.
    """

    name: str = "ps"
    time_per_ps: float = 1.0

    @property
    def cm1_to_rad(self) -> float:
        # 1 cm^-1 = 2*pi*c rad per internal time unit
        return 2.0 * math.pi * C_CM_PER_PS / self.time_per_ps

    def to_internal(self, energy_cm1):
        """Convert an energy in cm^-1 to an angular frequency (rad per
        internal time unit)."""
        value = np.asarray(energy_cm1, dtype=float)
        if not np.all(np.isfinite(value)):
            raise ValueError("energy must be finite, got %r" % (energy_cm1,))
        out = value * self.cm1_to_rad
        return float(out) if np.isscalar(energy_cm1) else out

    def from_internal(self, omega):
        """Convert an internal angular frequency back to cm^-1."""
        return omega / self.cm1_to_rad

    def inverse_temperature(self, temperature_k: float) -> float:
        """beta = 1/(k_B T) in inverse internal angular frequency.

        T = 0 maps to the beta = inf sentinel (coth/tanh factors evaluate
        to 1), T = inf to beta = 0.
        """
        if temperature_k < 0:
            raise ValueError("temperature must be >= 0, got %g" % temperature_k)
        if temperature_k == 0:
            return math.inf
        if math.isinf(temperature_k):
            return 0.0
        return 1.0 / self.to_internal(KB_CM1_PER_K * temperature_k)

    def time_to_internal(self, t_ps):
        return t_ps * self.time_per_ps

    def time_from_internal(self, t):
        return t / self.time_per_ps


PS_UNITS = UnitSystem("ps", 1.0)
FS_UNITS = UnitSystem("fs", 1000.0)

# Below this, coth(x/2) switches to its Laurent series to avoid cancellation.
_COTH_SERIES_CUTOFF = 1e-4


def coth_half(beta: float, omega):
    """coth(beta*omega/2), overflow-free and regular for small beta*omega.

    Uses coth(x/2) = 2/x + x/6 - x^3/360 + ... for |x| < 1e-4 and is exact
    in the beta = inf (-> 1) and beta = 0 (-> 2/(beta*omega) -> inf via the
    series) sentinel conventions.
    """
    if isinstance(omega, float) or np.ndim(omega) == 0:
        # scalar fast path (quadrature hot loop)
        omega = float(omega)
        if math.isinf(beta):
            return 1.0
        x = beta * omega
        if abs(x) < _COTH_SERIES_CUTOFF:
            if x == 0.0:
                return math.inf
            return 2.0 / x + x / 6.0 - x**3 / 360.0
        return 1.0 / math.tanh(0.5 * x)
    omega = np.asarray(omega, dtype=float)
    if math.isinf(beta):
        return np.ones_like(omega)
    x = beta * omega
    out = np.empty_like(x)
    small = np.abs(x) < _COTH_SERIES_CUTOFF
    xs = x[small]
    with np.errstate(divide="ignore"):
        out[small] = 2.0 / xs + xs / 6.0 - xs**3 / 360.0
    out[~small] = 1.0 / np.tanh(0.5 * x[~small])
    return out


def tanh_half(beta: float, omega: float) -> float:
    """tanh(beta*omega/2) with the beta = inf sentinel mapping to sign(omega)."""
    if math.isinf(beta):
        return math.copysign(1.0, omega) if omega != 0 else 0.0
    return math.tanh(0.5 * beta * omega)
