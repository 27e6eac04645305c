"""Adaptive quadrature on [0, inf) for bath integrals.

Thin, contract-carrying wrapper around QUADPACK: plain adaptive
Gauss-Kronrod for smooth weights, and the QAWO oscillatory algorithm for
the half-Fourier integrals int_0^inf w(omega) {cos,sin}(omega*tau) domega
that dominate the correlation-function work.  Integration runs on
[0, cutoff_mult * omega_scale] with a semi-infinite tail appended where
the integrand permits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "integrate",
    "half_fourier_cos",
    "half_fourier_sin",
    "half_fourier_cos_minus_one",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and truncation for all [0, inf) bath integrals."""

    rtol: float = 1e-9
    atol: float = 1e-12
    limit: int = 200
    cutoff_mult: float = 40.0

    def cutoff(self, omega_scale: float) -> float:
        return self.cutoff_mult * omega_scale


DEFAULT_SPEC = QuadratureSpec()


class QuadratureError(RuntimeError):
    """Non-convergence after the subdivision budget; carries the partial
    estimate in ``.partial``."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def _accept(ret, spec):
    """Tolerance policy for QUADPACK's full_output return.

    A flagged result is still accepted when the reported error is at the
    roundoff floor (QUADPACK declares "roundoff" once it cannot improve
    on ~machine precision for values near the absolute tolerance);
    anything worse is an explicit failure carrying the partial estimate.
    """
    if len(ret) < 4:
        return ret[0]
    val, abserr = ret[0], ret[1]
    if np.isfinite(val) and abserr <= max(100.0 * spec.atol,
                                          1e-7 * abs(val)):
        return val
    raise QuadratureError(ret[3], partial=val)


def _quad_checked(f, a, b, spec, **kwargs):
    ret = quad(f, a, b, epsabs=spec.atol, epsrel=spec.rtol,
               limit=spec.limit, full_output=1, **kwargs)
    return _accept(ret, spec)


def integrate(f, spec: QuadratureSpec = DEFAULT_SPEC, omega_scale: float = 1.0,
              tail: bool = True):
    """Integrate f over [0, inf); f may be real- or complex-valued.

    The result is the adaptive integral over [0, cutoff] plus, when
    ``tail`` is set, the QUADPACK semi-infinite tail.  Deterministic for a
    fixed spec; raises QuadratureError (with partial estimate) if the
    subdivision budget is exhausted.
    """
    probe = f(0.61803398875 * omega_scale)
    if np.iscomplexobj(probe):
        re = integrate(lambda w: f(w).real, spec, omega_scale, tail)
        im = integrate(lambda w: f(w).imag, spec, omega_scale, tail)
        return re + 1j * im
    cut = spec.cutoff(omega_scale)
    value = _quad_checked(f, 0.0, cut, spec)
    if tail:
        value += _quad_checked(f, cut, np.inf, spec)
    return value


def _weighted(w, tau, kind, spec, omega_scale, a=0.0):
    cut = spec.cutoff(omega_scale)
    if tau == 0.0:
        if kind == "sin":
            return 0.0
        return _quad_checked(w, a, cut, spec)
    ret = quad(w, a, cut, weight=kind, wvar=tau,
               epsabs=spec.atol, epsrel=spec.rtol,
               limit=spec.limit, maxp1=spec.limit, full_output=1)
    return _accept(ret, spec)


def half_fourier_cos(w, tau, spec: QuadratureSpec = DEFAULT_SPEC,
                     omega_scale: float = 1.0):
    """int_0^cutoff w(omega) cos(omega*tau) domega for tau >= 0."""
    return _weighted(w, tau, "cos", spec, omega_scale)


def half_fourier_sin(w, tau, spec: QuadratureSpec = DEFAULT_SPEC,
                     omega_scale: float = 1.0, singular: bool = False):
    """int_0^cutoff w(omega) sin(omega*tau) domega for tau >= 0.

    With ``singular`` set, the first oscillation period is integrated
    with sin(omega*tau) kept inside the integrand (w may then carry an
    integrable 1/omega singularity that sin regularizes, e.g. the Ohmic
    F = 1 lineshape weight) and only the remainder uses the
    oscillatory-weight algorithm.
    """
    if tau == 0.0:
        return 0.0
    if not singular:
        return _weighted(w, tau, "sin", spec, omega_scale)
    cut = spec.cutoff(omega_scale)
    split = min(2.0 * np.pi / abs(tau), cut)
    head = _quad_checked(lambda x: w(x) * np.sin(x * tau), 0.0, split, spec)
    if split >= cut:
        return head
    return head + _weighted(w, tau, "sin", spec, omega_scale, a=split)


def half_fourier_cos_minus_one(w, tau, spec: QuadratureSpec = DEFAULT_SPEC,
                               omega_scale: float = 1.0):
    """int_0^cutoff w(omega) (cos(omega*tau) - 1) domega.

    Safe for weights whose plain integral diverges at omega -> 0 (the
    Ohmic polaron lineshape): the (cos - 1) = -2 sin^2(omega tau / 2)
    factor is kept inside the integrand on the first oscillation period,
    and the integral is split only where both pieces converge separately.
    """
    if tau == 0.0:
        return 0.0
    cut = spec.cutoff(omega_scale)
    split = min(2.0 * np.pi / abs(tau), cut)
    head = _quad_checked(
        lambda x: -2.0 * w(x) * np.sin(0.5 * x * tau) ** 2, 0.0, split, spec)
    if split >= cut:
        return head
    osc = _weighted(w, tau, "cos", spec, omega_scale, a=split)
    flat = _quad_checked(w, split, cut, spec)
    return head + osc - flat
