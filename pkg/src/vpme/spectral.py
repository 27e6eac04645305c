"""Spectral density models and derived scalars.

Two closed-form families are used throughout:

  super-Ohmic exponential   J3(w) = a3 * w^3 * exp(-w/wc),  lambda3 = 2*a3*wc^3
  Ohmic Drude (overdamped)  J1(w) = (2/pi) * l1*wc*w / (w^2 + wc^2),  lambda1 = l1

plus a tabulated variant for oracle round-trips.  Instances live in
internal units (rad per time unit); ``from_cm1`` constructors take the
config-surface (lambda, omega_c) pair in cm^-1.
"""

from __future__ import annotations

import math

import numpy as np

from .quadrature import DEFAULT_SPEC, integrate
from .units import PS_UNITS, UnitSystem, coth_half

__all__ = ["SpectralDensity", "SuperOhmicExp", "OhmicDrude",
           "TabulatedSpectralDensity", "reorganization_energy"]


class SpectralDensity:
    """Base class; subclasses provide __call__, omega_c and low_freq_exponent."""

    omega_c: float
    low_freq_exponent: float

    def __call__(self, omega):
        raise NotImplementedError

    def evaluate(self, omega):
        """J(omega) for omega >= 0 (raises on negative frequencies)."""
        if np.any(np.asarray(omega) < 0):
            raise ValueError("spectral density defined for omega >= 0")
        return self(omega)

    def reorganization_energy(self, spec=DEFAULT_SPEC) -> float:
        """lambda = int_0^inf J(w)/w dw by quadrature."""
        return integrate(lambda w: self(w) / w, spec, omega_scale=self.omega_c)

    def scaled(self, factor: float) -> "SpectralDensity":
        """Same shape with the coupling scale multiplied by ``factor``."""
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False

    def polaron_b_diverges(self, beta: float) -> bool:
        """Whether int J/w^2 coth(beta w/2) dw diverges with the full
        polaron displacement F = 1 (infrared divergence -> B = 0)."""
        if self.is_zero():
            return False
        if beta == 0.0:
            return True
        s = self.low_freq_exponent
        return s <= 1.0 if math.isinf(beta) else s <= 2.0


class SuperOhmicExp(SpectralDensity):
    """J3(w) = alpha3 w^3 exp(-w/omega_c), parameterized by (lambda3, omega_c)."""

    low_freq_exponent = 3.0

    def __init__(self, lam: float, omega_c: float):
        if omega_c <= 0:
            raise ValueError("omega_c must be positive")
        if lam < 0:
            raise ValueError("reorganization energy must be >= 0")
        self.lam = float(lam)
        self.omega_c = float(omega_c)

    @classmethod
    def from_cm1(cls, lambda_cm1, omega_c_cm1, units: UnitSystem = PS_UNITS):
        return cls(units.to_internal(lambda_cm1), units.to_internal(omega_c_cm1))

    @property
    def alpha3(self) -> float:
        return self.lam / (2.0 * self.omega_c**3)

    def __call__(self, omega):
        if isinstance(omega, float) or np.ndim(omega) == 0:
            w = float(omega)
            return self.alpha3 * w**3 * math.exp(-w / self.omega_c)
        w = np.asarray(omega, dtype=float)
        return self.alpha3 * w**3 * np.exp(-w / self.omega_c)

    def analytic_reorganization(self) -> float:
        return self.lam

    def scaled(self, factor):
        return SuperOhmicExp(self.lam * factor, self.omega_c)

    def is_zero(self):
        return self.lam == 0.0

    def __repr__(self):
        return f"SuperOhmicExp(lam={self.lam:.6g}, omega_c={self.omega_c:.6g})"


class OhmicDrude(SpectralDensity):
    """J1(w) = (2/pi) lam omega_c w / (w^2 + omega_c^2); lambda1 = lam = alpha1."""

    low_freq_exponent = 1.0

    def __init__(self, lam: float, omega_c: float):
        if omega_c <= 0:
            raise ValueError("omega_c must be positive")
        if lam < 0:
            raise ValueError("reorganization energy must be >= 0")
        self.lam = float(lam)
        self.omega_c = float(omega_c)

    @classmethod
    def from_cm1(cls, lambda_cm1, omega_c_cm1, units: UnitSystem = PS_UNITS):
        return cls(units.to_internal(lambda_cm1), units.to_internal(omega_c_cm1))

    @property
    def alpha1(self) -> float:
        return self.lam

    def __call__(self, omega):
        if isinstance(omega, float) or np.ndim(omega) == 0:
            w = float(omega)
            return (2.0 / math.pi) * self.lam * self.omega_c * w \
                / (w**2 + self.omega_c**2)
        w = np.asarray(omega, dtype=float)
        return (2.0 / np.pi) * self.lam * self.omega_c * w / (w**2 + self.omega_c**2)

    def analytic_reorganization(self) -> float:
        return self.lam

    def scaled(self, factor):
        return OhmicDrude(self.lam * factor, self.omega_c)

    def is_zero(self):
        return self.lam == 0.0

    def __repr__(self):
        return f"OhmicDrude(lam={self.lam:.6g}, omega_c={self.omega_c:.6g})"


class TabulatedSpectralDensity(SpectralDensity):
    """User-table J on a positive omega grid, linearly interpolated, zero
    outside the table.  Used for oracle round-trips."""

    def __init__(self, omega_grid, j_values, low_freq_exponent=None):
        w = np.asarray(omega_grid, dtype=float)
        j = np.asarray(j_values, dtype=float)
        if w.ndim != 1 or w.shape != j.shape or len(w) < 2:
            raise ValueError("need matching 1-d omega and J tables")
        if np.any(np.diff(w) <= 0) or w[0] < 0:
            raise ValueError("omega grid must be increasing and non-negative")
        if np.any(j < 0):
            raise ValueError("J must be non-negative")
        # J/omega must stay integrable at the table head
        with np.errstate(over="ignore", divide="ignore"):
            head = j[0] / w[0] if w[0] > 0 else (j[1] / w[1] if w[1] > 0 else 0.0)
        if not np.isfinite(head):
            raise ValueError("divergent J/omega at the low-frequency end")
        self._w = w
        self._j = j
        self.omega_c = w[np.argmax(j)] if np.max(j) > 0 else w[-1]
        if low_freq_exponent is None:
            nz = np.nonzero(j)[0]
            if len(nz) >= 2:
                lo = nz[:2]
                low_freq_exponent = (np.log(j[lo[1]] / j[lo[0]])
                                     / np.log(w[lo[1]] / w[lo[0]]))
            else:
                low_freq_exponent = np.inf
        self.low_freq_exponent = float(low_freq_exponent)

    def __call__(self, omega):
        return np.interp(np.asarray(omega, dtype=float), self._w, self._j,
                         left=0.0, right=0.0)

    def reorganization_energy(self, spec=DEFAULT_SPEC) -> float:
        with np.errstate(invalid="ignore", divide="ignore"):
            y = np.where(self._w > 0, self._j / np.where(self._w > 0, self._w, 1.0), 0.0)
        lam = np.trapezoid(y, self._w)
        if not np.isfinite(lam):
            raise ValueError("divergent reorganization energy for table input")
        return float(lam)

    def scaled(self, factor):
        return TabulatedSpectralDensity(self._w, self._j * factor,
                                        self.low_freq_exponent)

    def is_zero(self):
        return not np.any(self._j)


def reorganization_energy(density: SpectralDensity, spec=DEFAULT_SPEC) -> float:
    """Module-level convenience for lambda = int J/w dw."""
    return density.reorganization_energy(spec)


def b_exponent_weight(density: SpectralDensity, beta: float):
    """Weight J(w)/w^2 * coth(beta w / 2) entering the renormalization
    integral (finite at w -> 0 for every in-scope variant when multiplied
    by F^2 with V_R != 0)."""
    def w(omega):
        return density(omega) / omega**2 * coth_half(beta, omega)
    return w
