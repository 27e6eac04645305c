"""Free-energy minimization: displacement fraction F(w) and the
self-consistent renormalized coupling V_R = V * B(V_R).

The variational transformation displaces bath mode w by a fraction

    F(w) = [1 + (2 V_R^2 / (eta w)) tanh(beta eta / 2) coth(beta w / 2)]^-1

with eta = sqrt(eps^2 + 4 V_R^2), which minimizes the Feynman-Bogoliubov
bound A_B = R - ln[2 cosh(beta eta / 2)] / beta.  All fixed points of
x -> V * B(x) on [0, |V|] are located by a sign-change scan plus bracketed
root polishing; the branch with minimal A_B is returned and every branch
is recorded for diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .quadrature import DEFAULT_SPEC, QuadratureSpec, _quad_checked
from .spectral import SpectralDensity
from .units import coth_half, tanh_half

__all__ = [
    "FProfile",
    "Branch",
    "VariationalSolution",
    "displacement_fraction",
    "renormalization_B",
    "shift_R",
    "free_energy_bound",
    "solve",
    "limit_solution",
]

# Fixed-point scan/polish parameters (see module docstring).
N_SCAN = 200
ROOT_XTOL_REL = 1e-13
RESIDUAL_TOL_REL = 1e-10


@dataclass(frozen=True)
class FProfile:
    """Displacement fraction F(w) in one of three modes.

    "variational" evaluates the closed-form minimizer at (v_r, eta, beta)
    (which degenerates to F = 1 when v_r = 0), "zero" is the Redfield
    limit and "one" the full polaron displacement.  ``spatial`` inserts
    the (1 - gamma(w)) common-bath weight of the correlated extension.
    """

    mode: str
    v_r: float = 0.0
    eta: float = 0.0
    beta: float = math.inf
    spatial: object = None

    def __call__(self, omega):
        if isinstance(omega, float) or np.ndim(omega) == 0:
            # scalar fast path (quadrature hot loop)
            if self.mode == "zero":
                return 0.0
            if self.mode == "one" or self.v_r == 0.0:
                return 1.0
            omega = float(omega)
            if omega == 0.0:
                return 0.0  # the correction diverges, so F -> 0
            corr = self._correction(omega)
            return 1.0 / (1.0 + corr) if math.isfinite(corr) else 0.0
        omega = np.asarray(omega, dtype=float)
        if self.mode == "zero":
            return np.zeros_like(omega)
        if self.mode == "one" or self.v_r == 0.0:
            return np.ones_like(omega)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            f = 1.0 / (1.0 + self._correction(omega))
        return np.where(omega == 0.0, 0.0, f)

    def _correction(self, omega):
        a = 2.0 * self.v_r**2 / self.eta
        if self.beta == 0.0:
            corr = a * (self.eta / omega) / omega
        else:
            corr = (a / omega) * tanh_half(self.beta, self.eta) \
                * coth_half(self.beta, omega)
        if self.spatial is not None:
            corr = corr * self.spatial.one_minus_gamma(omega)
        return corr

    @property
    def crossover_omega(self):
        """Frequency below which F rolls off (quadrature breakpoint hint)."""
        if self.mode != "variational" or self.v_r == 0.0:
            return None
        if self.beta in (0.0, math.inf) or self.beta is None:
            return 2.0 * self.v_r**2 / self.eta
        return 2.0 * abs(self.v_r) * math.sqrt(
            tanh_half(self.beta, self.eta) / (self.eta * self.beta))


def displacement_fraction(omega, v_r, eps, beta, spatial=None):
    """F(omega) for the given renormalized coupling and bias (Eq. of the
    module docstring); eta is formed internally from (eps, v_r)."""
    eta = math.hypot(eps, 2.0 * v_r)
    return FProfile("variational", v_r, eta, beta, spatial)(omega)


def _b_exponent(f: FProfile, density: SpectralDensity, beta, spec):
    """int dw J/w^2 * F^2 * coth(beta w/2) [* (1-gamma)]."""
    def w(omega):
        fw = f(omega)
        val = density(omega) / omega**2 * fw * fw * coth_half(beta, omega)
        if f.spatial is not None:
            val = val * f.spatial.one_minus_gamma(omega)
        return val
    return _integral(w, density, spec, f.crossover_omega)


def _integral(w, density, spec, breakpoint=None):
    cut = spec.cutoff(density.omega_c)
    pts = None
    if breakpoint is not None and 0.0 < breakpoint < cut:
        pts = [breakpoint]
    return _quad_checked(w, 0.0, cut, spec, points=pts)


def _diverges_at_zero_vr(density, beta, spatial):
    if spatial is not None and spatial.ir_regularizes:
        return False
    return density.polaron_b_diverges(beta)


def renormalization_B(v_r, density: SpectralDensity, beta, eps,
                      spec: QuadratureSpec = DEFAULT_SPEC, spatial=None):
    """Renormalization factor B = exp(-int J/w^2 F^2 coth) at the trial v_r.

    Returns (B, diverged).  When the exponent integral diverges (full
    polaron displacement on an Ohmic bath) B = 0 is reported with the
    divergence flag set rather than failing.
    """
    if density.is_zero():
        return 1.0, False
    eta = math.hypot(eps, 2.0 * v_r)
    f = FProfile("variational", v_r, eta, beta, spatial)
    if v_r == 0.0 and _diverges_at_zero_vr(density, beta, spatial):
        return 0.0, True
    return math.exp(-_b_exponent(f, density, beta, spec)), False


def shift_R(v_r, density: SpectralDensity, beta, eps,
            spec: QuadratureSpec = DEFAULT_SPEC, spatial=None):
    """Bath-induced shift R = int dw (J/w) F (F - 2) <= 0."""
    if density.is_zero():
        return 0.0
    eta = math.hypot(eps, 2.0 * v_r)
    f = FProfile("variational", v_r, eta, beta, spatial)
    return _shift_of_profile(f, density, spec)


def _shift_of_profile(f, density, spec):
    if density.is_zero():
        return 0.0

    def w(omega):
        fw = f(omega)
        return density(omega) / omega * fw * (fw - 2.0)
    return _integral(w, density, spec, f.crossover_omega)


def _log_2cosh(x):
    # overflow-free ln(2 cosh x)
    ax = abs(x)
    return ax + math.log1p(math.exp(-2.0 * ax))


def free_energy_bound(v_r, density: SpectralDensity, beta, eps,
                      spec: QuadratureSpec = DEFAULT_SPEC, spatial=None):
    """A_B = R - ln[2 cosh(beta eta / 2)]/beta at a self-consistent point.

    For beta = inf the T -> 0 limit A_B = R - eta/2 is returned; for
    beta = 0 the branch-independent -ln(2)/beta divergence is dropped and
    A_B reduces to R.
    """
    r = shift_R(v_r, density, beta, eps, spec, spatial)
    eta = math.hypot(eps, 2.0 * v_r)
    if math.isinf(beta):
        return r - 0.5 * eta
    if beta == 0.0:
        return r
    return r - _log_2cosh(0.5 * beta * eta) / beta


def free_energy_of_profile(f, v, density, beta, eps,
                           spec: QuadratureSpec = DEFAULT_SPEC):
    """A_B functional for an arbitrary displacement profile f(w) (used by
    the stationarity tests): B and R are recomputed from f and the bound
    is evaluated with eta_eff = sqrt(eps^2 + 4 (v B)^2)."""
    if density.is_zero():
        exponent = 0.0
        r = 0.0
    else:
        def w_b(omega):
            fw = f(omega)
            val = density(omega) / omega**2 * fw * fw * coth_half(beta, omega)
            if getattr(f, "spatial", None) is not None:
                val = val * f.spatial.one_minus_gamma(omega)
            return val
        bp = getattr(f, "crossover_omega", None)
        exponent = _integral(w_b, density, spec, bp)
        r = _shift_of_profile(f, density, spec)
    b = math.exp(-exponent)
    eta_eff = math.hypot(eps, 2.0 * v * b)
    if math.isinf(beta):
        return r - 0.5 * eta_eff
    if beta == 0.0:
        return r
    return r - _log_2cosh(0.5 * beta * eta_eff) / beta


@dataclass(frozen=True)
class Branch:
    v_r: float
    b: float
    r: float
    a_b: float
    diverged: bool
    residual: float


@dataclass
class VariationalSolution:
    """Converged transformation parameters plus branch diagnostics."""

    eps: float
    v: float
    beta: float
    density: SpectralDensity
    v_r: float
    b: float
    r: float
    a_b: float
    diverged: bool
    f: FProfile
    branches: list = field(default_factory=list)
    kind: str = "variational"
    spatial: object = None

    @property
    def eta(self) -> float:
        return math.hypot(self.eps, 2.0 * self.v_r)

    @property
    def theta(self) -> float:
        return 0.5 * math.atan2(2.0 * self.v_r, self.eps)

    def displacement_fraction(self, omega):
        return self.f(omega)


def _branch_at(x, sign, density, beta, eps, v, spec, spatial):
    b, div = renormalization_B(x, density, beta, eps, spec, spatial)
    r = shift_R(x, density, beta, eps, spec, spatial)
    a_b = free_energy_bound(x, density, beta, eps, spec, spatial)
    residual = abs(x - abs(v) * b)
    return Branch(sign * x, b, r, a_b, div, residual)


def solve(eps, v, density: SpectralDensity, beta,
          spec: QuadratureSpec = DEFAULT_SPEC, n_scan: int = N_SCAN,
          spatial=None) -> VariationalSolution:
    """Locate every fixed point of x = |V| B(x) on [0, |V|] and return the
    one minimizing the free-energy bound.

    g(x) = x - |V| B(x) satisfies g(0) <= 0 and g(|V|) >= 0, so at least
    one root exists; sign changes on the scan grid (one refinement pass)
    are polished with brentq.  The x = 0 Foerster branch is included
    whenever B(0) = 0 (Ohmic infrared divergence).  sign(V_R) = sign(V)
    since B depends on V_R^2 only.
    """
    vabs = abs(v)
    sign = 1.0 if v >= 0 else -1.0
    roots = []

    if vabs == 0.0 or density.is_zero():
        b, div = renormalization_B(0.0 if vabs == 0.0 else vabs,
                                   density, beta, eps, spec, spatial)
        roots.append(vabs * b if vabs else 0.0)
    else:
        cache = {}

        def b_of(x):
            if x not in cache:
                cache[x] = renormalization_B(x, density, beta, eps, spec,
                                             spatial)[0]
            return cache[x]

        def g(x):
            return x - vabs * b_of(x)

        if b_of(0.0) == 0.0:
            roots.append(0.0)

        xs = np.linspace(0.0, vabs, n_scan + 1)
        gs = np.array([g(x) for x in xs])
        brackets = [(xs[i], xs[i + 1]) for i in range(n_scan)
                    if gs[i] == 0.0 or (gs[i] < 0) != (gs[i + 1] < 0)]
        # refinement pass: subdivide around interior |g| minima that did
        # not bracket, in case a root pair hides between grid points
        interior = np.abs(gs[1:-1])
        for i in 1 + np.argsort(interior)[:4]:
            lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, n_scan)]
            fine = np.linspace(lo, hi, 21)
            gf = np.array([g(x) for x in fine])
            brackets += [(fine[k], fine[k + 1]) for k in range(20)
                         if (gf[k] < 0) != (gf[k + 1] < 0)]
        for lo, hi in brackets:
            glo, ghi = g(lo), g(hi)
            if glo == 0.0:
                root = lo
            elif ghi == 0.0:
                root = hi
            elif (glo < 0) == (ghi < 0):
                continue
            else:
                root = brentq(g, lo, hi, xtol=ROOT_XTOL_REL * vabs)
            if all(abs(root - r0) > 10 * ROOT_XTOL_REL * vabs + 1e-300
                   for r0 in roots):
                roots.append(root)

    if not roots:
        raise RuntimeError(
            "no fixed point found for V_R = V B(V_R); g(0) <= 0 <= g(V) "
            "should guarantee one -- numerical failure")

    branches = sorted((_branch_at(x, sign, density, beta, eps, v, spec,
                                  spatial) for x in sorted(roots)),
                      key=lambda br: (br.a_b, -abs(br.v_r)))
    best = branches[0]
    if vabs > 0 and best.residual > RESIDUAL_TOL_REL * vabs and best.v_r != 0.0:
        raise RuntimeError("fixed-point residual %.3e exceeds tolerance"
                           % best.residual)
    f = FProfile("variational", abs(best.v_r),
                 math.hypot(eps, 2.0 * best.v_r), beta, spatial)
    return VariationalSolution(
        eps=eps, v=v, beta=beta, density=density, v_r=best.v_r, b=best.b,
        r=best.r, a_b=best.a_b, diverged=best.diverged, f=f,
        branches=branches, kind="variational", spatial=spatial)


def limit_solution(kind, eps, v, density: SpectralDensity, beta,
                   spec: QuadratureSpec = DEFAULT_SPEC) -> VariationalSolution:
    """Redfield (F = 0) or polaron (F = 1) endpoint of the theory.

    Redfield: B = 1, V_R = V, R = 0.  Polaron: B from the F = 1 exponent
    (zero with the divergence flag for Ohmic baths), V_R = V B, R equal to
    minus the reorganization energy.
    """
    if kind == "redfield":
        f = FProfile("zero", beta=beta)
        eta = math.hypot(eps, 2.0 * v)
        a_b = free_energy_bound_of_limits(0.0, eta, beta)
        return VariationalSolution(eps, v, beta, density, v_r=v, b=1.0,
                                   r=0.0, a_b=a_b, diverged=False, f=f,
                                   kind="redfield")
    if kind == "polaron":
        b, div = renormalization_B(0.0, density, beta, eps, spec) \
            if not density.is_zero() else (1.0, False)
        v_r = v * b
        lam = density.analytic_reorganization() \
            if hasattr(density, "analytic_reorganization") \
            else density.reorganization_energy(spec)
        r = -lam
        eta = math.hypot(eps, 2.0 * v_r)
        a_b = free_energy_bound_of_limits(r, eta, beta)
        f = FProfile("one", v_r=abs(v_r), eta=eta, beta=beta)
        return VariationalSolution(eps, v, beta, density, v_r=v_r, b=b,
                                   r=r, a_b=a_b, diverged=div, f=f,
                                   kind="polaron")
    raise ValueError("kind must be 'redfield' or 'polaron', got %r" % (kind,))


def free_energy_bound_of_limits(r, eta, beta):
    if math.isinf(beta):
        return r - 0.5 * eta
    if beta == 0.0:
        return r
    return r - _log_2cosh(0.5 * beta * eta) / beta
