"""Bath correlation functions of the transformed interaction.

With the displacement fraction F(w) fixed by the variational solution, the
homogeneous generator needs

  Lam11(tau) = int dw J (1-F)^2 [cos(w tau) coth(beta w/2) - i sin(w tau)]
  phi(tau)   = 2 int dw J/w^2 F^2 [cos(w tau) coth(beta w/2) - i sin(w tau)]
  Lam33(tau) = (V_R^2/2)(e^phi + e^-phi - 2),   Lam44 = (V_R^2/2)(e^phi - e^-phi)
  LamC(tau)  = V_R int dw (J/w) F(1-F) [sin(w tau) coth(beta w/2) + i cos(w tau)]

and the inhomogeneous (bath-relaxation) terms additionally use

  C1(t)  = 2 int dw (J/w) F(1-F) cos(w t)
  psi(t) = 2 int dw J/w^2 F^2 sin(w t)      ( = -Im phi(t) identically )

Everything displaced is parameterized through phibar = phi - phi(0) and
phi0 = phi(0) = -2 ln B, so the Foerster branch (V_R = 0, B = 0, phi0
divergent) stays finite via V_R^2 e^phi = V^2 e^phibar.

Kernels are tabulated once per solution on a uniform tau grid and read
back through cubic splines; negative arguments use the exact symmetries
(Lam_ij(-tau) = Lam_ji(tau)*, psi odd, C1/C2 even).

For a spatially correlated common bath the cross-site kernel

  Lam12(tau) = int dw J (1-F)^2 gamma(w) [cos coth - i sin]

appears, C2 is the gamma-weighted C1, and the phi/LamC weights carry
(1 - gamma(w)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import (DEFAULT_SPEC, QuadratureSpec, half_fourier_cos,
                         half_fourier_cos_minus_one, half_fourier_sin)
from .units import coth_half
from .variational import VariationalSolution

__all__ = [
    "CorrelationKernels",
    "build_kernels",
    "lambda_linear",
    "phi",
    "phi_bar",
    "lambda_displaced",
    "lambda_cross",
    "c1_function",
    "psi_function",
    "HOMOGENEOUS_PAIRS",
    "CORRELATED_EXTRA_PAIRS",
    "INHOMOGENEOUS_PAIRS",
]

# Nonzero Lambda_ij pairs entering the homogeneous generator; the map to
# the scalar kernels is (11)=(22)=linear, (33)/(44)=displaced,
# (14)=(42)=+LamC, (24)=(41)=-LamC.
HOMOGENEOUS_PAIRS = ((1, 1), (2, 2), (3, 3), (4, 4),
                     (1, 4), (4, 1), (2, 4), (4, 2))
CORRELATED_EXTRA_PAIRS = ((1, 2), (2, 1))
INHOMOGENEOUS_PAIRS = tuple((i, j) for i in range(1, 5) for j in range(1, 5))


class _Weights:
    """Frequency-space weight functions for one variational solution.

    Frequencies are floored at 1e-13 * omega_c: every in-scope weight has
    a finite omega -> 0 limit, but the oscillatory (QAWO) quadrature
    evaluates at the omega = 0 endpoint where the bare factors are 0/0.
    """

    def __init__(self, solution: VariationalSolution):
        self.density = solution.density
        self.f = solution.f
        self.beta = solution.beta
        self.spatial = solution.spatial
        self._floor = 1e-13 * solution.density.omega_c

    def _one_minus_gamma(self, w):
        return self.spatial.one_minus_gamma(w) if self.spatial is not None else 1.0

    def _gamma(self, w):
        return self.spatial.gamma(w) if self.spatial is not None else 1.0

    def _floored(self, w):
        if isinstance(w, float) or np.ndim(w) == 0:
            return self._floor if w < self._floor else float(w)
        return np.maximum(w, self._floor)

    def lin(self, w, coth=False, gamma=False):
        w = self._floored(w)
        fw = self.f(w)
        val = self.density(w) * (1.0 - fw) ** 2
        if coth:
            val = val * coth_half(self.beta, w)
        if gamma:
            val = val * self._gamma(w)
        return val

    def disp(self, w, coth=False):
        w = self._floored(w)
        fw = self.f(w)
        val = 2.0 * self.density(w) / w**2 * fw * fw * self._one_minus_gamma(w)
        if coth:
            val = val * coth_half(self.beta, w)
        return val

    def cross(self, w, coth=False):
        w = self._floored(w)
        fw = self.f(w)
        val = self.density(w) / w * fw * (1.0 - fw) * self._one_minus_gamma(w)
        if coth:
            val = val * coth_half(self.beta, w)
        return val

    def c(self, w, gamma=False):
        w = self._floored(w)
        fw = self.f(w)
        val = 2.0 * self.density(w) / w * fw * (1.0 - fw)
        if gamma:
            val = val * self._gamma(w)
        return val


def _flags(solution):
    mode = solution.f.mode
    f_is_one = mode == "one" or (mode == "variational" and solution.v_r == 0.0)
    f_is_zero = mode == "zero"
    zero_j = solution.density.is_zero()
    need_lin = not zero_j and not f_is_one
    need_phi = not zero_j and not f_is_zero
    need_cross = not zero_j and mode == "variational" and solution.v_r != 0.0
    return need_lin, need_phi, need_cross


def lambda_linear(solution, tau, spec: QuadratureSpec = DEFAULT_SPEC):
    """Lambda_11(tau) = Lambda_22(tau) by direct quadrature (tau >= 0)."""
    need_lin, _, _ = _flags(solution)
    if not need_lin:
        return 0.0 + 0.0j
    w = _Weights(solution)
    wc = solution.density.omega_c
    re = half_fourier_cos(lambda x: w.lin(x, coth=True), tau, spec, wc)
    im = half_fourier_sin(lambda x: w.lin(x), tau, spec, wc)
    return re - 1j * im


def _phi_is_singular(solution):
    """Whether the phi-weights keep an integrable 1/omega singularity at
    omega = 0 (F = 1 with J softer than omega^2)."""
    return (solution.diverged or solution.b == 0.0
            or (solution.f.mode == "one"
                and solution.density.low_freq_exponent <= 2.0))


def phi_bar(solution, tau, spec: QuadratureSpec = DEFAULT_SPEC,
            phi0: float | None = None):
    """phi(tau) - phi(0); finite even when phi(0) diverges (Ohmic, F = 1)."""
    _, need_phi, _ = _flags(solution)
    if not need_phi:
        return 0.0 + 0.0j
    w = _Weights(solution)
    wc = solution.density.omega_c
    singular = _phi_is_singular(solution)
    if singular:
        re = half_fourier_cos_minus_one(lambda x: w.disp(x, coth=True),
                                        tau, spec, wc)
    else:
        if phi0 is None:
            phi0 = phi_zero(solution, spec)
        re = half_fourier_cos(lambda x: w.disp(x, coth=True),
                              tau, spec, wc) - phi0
    im = half_fourier_sin(lambda x: w.disp(x), tau, spec, wc,
                          singular=singular)
    return re - 1j * im


def phi_zero(solution, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """phi(0) = 2 int dw J/w^2 F^2 coth = -2 ln B; inf when divergent."""
    _, need_phi, _ = _flags(solution)
    if not need_phi:
        return 0.0
    if solution.diverged or solution.b == 0.0:
        return math.inf
    w = _Weights(solution)
    return half_fourier_cos(lambda x: w.disp(x, coth=True), 0.0, spec,
                            solution.density.omega_c)


def phi(solution, tau, spec: QuadratureSpec = DEFAULT_SPEC):
    """phi(tau); raises when phi(0) diverges (use phi_bar / the combined
    lineshape B^2 e^phi = e^phibar instead)."""
    p0 = phi_zero(solution, spec)
    if math.isinf(p0):
        raise ValueError("phi diverges for V_R = 0 on an Ohmic bath; "
                         "use phi_bar (B^2 e^phi stays finite)")
    return phi_bar(solution, tau, spec) + p0


def lambda_displaced(solution, tau, spec: QuadratureSpec = DEFAULT_SPEC):
    """(Lambda_33, Lambda_44)(tau), robust in the B -> 0 limit."""
    pb = phi_bar(solution, tau, spec)
    p0 = phi_zero(solution, spec)
    return _displaced_from_phibar(pb, p0, solution.v)


def _displaced_from_phibar(pb, p0, v):
    e1 = np.exp(pb)
    if math.isinf(p0):
        e2 = np.zeros_like(e1)
        e3 = 0.0
    else:
        e2 = np.exp(-pb - 2.0 * p0)
        e3 = math.exp(-p0)
    half_v2 = 0.5 * v * v
    return half_v2 * (e1 + e2 - 2.0 * e3), half_v2 * (e1 - e2)


def lambda_cross(solution, tau, spec: QuadratureSpec = DEFAULT_SPEC):
    """Lambda_C(tau) (assignment: Lam14 = Lam42 = +Lambda_C,
    Lam24 = Lam41 = -Lambda_C)."""
    _, _, need_cross = _flags(solution)
    if not need_cross:
        return 0.0 + 0.0j
    w = _Weights(solution)
    wc = solution.density.omega_c
    re = half_fourier_sin(lambda x: w.cross(x, coth=True), tau, spec, wc)
    im = half_fourier_cos(lambda x: w.cross(x), tau, spec, wc)
    return solution.v_r * (re + 1j * im)


def c1_function(solution, t, spec: QuadratureSpec = DEFAULT_SPEC):
    """C1(t) = 2 int (J/w) F(1-F) cos(w t); zero whenever F(1-F) = 0."""
    _, _, need_cross = _flags(solution)
    if not need_cross:
        return 0.0
    w = _Weights(solution)
    return half_fourier_cos(lambda x: w.c(x), t, spec, solution.density.omega_c)


def psi_function(solution, t, spec: QuadratureSpec = DEFAULT_SPEC):
    """psi(t) = 2 int J/w^2 F^2 sin(w t) = -Im phi(t)."""
    _, need_phi, _ = _flags(solution)
    if not need_phi:
        return 0.0
    w = _Weights(solution)
    return half_fourier_sin(lambda x: w.disp(x), t, spec,
                            solution.density.omega_c,
                            singular=_phi_is_singular(solution))


@dataclass
class CorrelationKernels:
    """Tabulated kernels on a uniform tau grid, with spline read-back.

    ``phi0`` is +inf on the Foerster branch; every displaced quantity is
    formed from phibar so that limit stays finite.  ``c2``/``lam12`` are
    None for independent (uncorrelated) baths.
    """

    tau: np.ndarray
    lam11: np.ndarray
    phibar: np.ndarray
    lam_c: np.ndarray
    c1: np.ndarray
    phi0: float
    b: float
    v: float
    v_r: float
    eta: float
    beta: float
    solution: VariationalSolution
    lam12: np.ndarray | None = None
    c2: np.ndarray | None = None
    quad_spec: QuadratureSpec = DEFAULT_SPEC
    kernel_scale: float = 0.0
    _splines: dict = field(default_factory=dict, repr=False)

    @property
    def dt(self) -> float:
        return float(self.tau[1] - self.tau[0])

    @property
    def t_max(self) -> float:
        return float(self.tau[-1])

    @property
    def correlated(self) -> bool:
        return self.lam12 is not None

    def _spline(self, name):
        if name not in self._splines:
            table = {"lam11": self.lam11, "phibar": self.phibar,
                     "lam_c": self.lam_c, "c1": self.c1,
                     "psi": -self.phibar.imag,
                     "lam12": self.lam12, "c2": self.c2}[name]
            self._splines[name] = CubicSpline(self.tau, table)
        return self._splines[name]

    # -- homogeneous kernels (tau >= 0 unless stated) -------------------

    def lam11_at(self, tau):
        """Lambda_11; negative tau via Lambda(-tau) = Lambda(tau)*."""
        tau = np.asarray(tau, dtype=float)
        val = self._spline("lam11")(np.abs(tau))
        return np.where(tau >= 0, val, np.conj(val))

    def lam12_at(self, tau):
        if self.lam12 is None:
            return np.zeros(np.shape(tau), dtype=complex)
        tau = np.asarray(tau, dtype=float)
        val = self._spline("lam12")(np.abs(tau))
        return np.where(tau >= 0, val, np.conj(val))

    def phibar_at(self, tau):
        tau = np.asarray(tau, dtype=float)
        val = self._spline("phibar")(np.abs(tau))
        return np.where(tau >= 0, val, np.conj(val))

    def lineshape_at(self, tau):
        """B^2 e^{phi(tau)} = e^{phibar(tau)} (Eq. for the Foerster rates)."""
        return np.exp(self.phibar_at(tau))

    def lam33_44_at(self, tau):
        return _displaced_from_phibar(self.phibar_at(tau), self.phi0, self.v)

    def lam_c_at(self, tau):
        """Lambda_C; odd-conjugate for negative tau
        (Lambda_C(-tau) = -Lambda_C(tau)*)."""
        tau = np.asarray(tau, dtype=float)
        val = self._spline("lam_c")(np.abs(tau))
        return np.where(tau >= 0, val, -np.conj(val))

    def pair_kernel_at(self, i, j, tau):
        """Lambda_ij(tau) for the nonzero homogeneous pairs."""
        if (i, j) in ((1, 1), (2, 2)):
            return self.lam11_at(tau)
        if (i, j) in ((1, 2), (2, 1)):
            return self.lam12_at(tau)
        if (i, j) == (3, 3):
            return self.lam33_44_at(tau)[0]
        if (i, j) == (4, 4):
            return self.lam33_44_at(tau)[1]
        if (i, j) in ((1, 4), (4, 2)):
            return self.lam_c_at(tau)
        if (i, j) in ((2, 4), (4, 1)):
            return -self.lam_c_at(tau)
        return np.zeros(np.shape(tau), dtype=complex)

    # -- inhomogeneous building blocks ----------------------------------

    def psi_at(self, t):
        """psi(t), odd in t."""
        t = np.asarray(t, dtype=float)
        return np.sign(t) * self._spline("psi")(np.abs(t))

    def c1_at(self, t):
        t = np.asarray(t, dtype=float)
        return self._spline("c1")(np.abs(t))

    def c2_at(self, t):
        if self.c2 is None:
            return np.zeros(np.shape(t))
        t = np.asarray(t, dtype=float)
        return self._spline("c2")(np.abs(t))

    def gamma_i_at(self, i, t):
        """Gamma_i(t) = <B_i(t)> over the displaced reference state:
        Gamma_1 = C1, Gamma_2 = C2 (0 for independent baths),
        Gamma_3 = V_R (cos psi - 1), Gamma_4 = -V_R sin psi."""
        if i == 1:
            return self.c1_at(t)
        if i == 2:
            return self.c2_at(t)
        if i == 3:
            return self.v_r * (np.cos(self.psi_at(t)) - 1.0)
        if i == 4:
            return -self.v_r * np.sin(self.psi_at(t))
        raise ValueError("operator index must be 1..4")

    def lambda_d_at(self, i, j, tau, t):
        """Deviation kernels Lambda^(d)_ij(tau, t) for 0 <= tau <= t
        (evaluated exactly as rederived from Appendix A.2, with the
        C2-bearing generalizations for a common bath)."""
        tau = np.asarray(tau, dtype=float)
        s = t - tau
        v2h = 0.5 * self.v * self.v
        if (i, j) in ((3, 3), (4, 4), (3, 4), (4, 3)):
            pb = self.phibar_at(tau)
            e1 = np.exp(pb)
            if math.isinf(self.phi0):
                e2 = np.zeros_like(e1)
                e3 = 0.0
            else:
                e2 = np.exp(-pb - 2.0 * self.phi0)
                e3 = math.exp(-self.phi0)
            psit = self.psi_at(t)
            psis = self.psi_at(s)
            if (i, j) == (3, 3):
                return v2h * (e1 * (np.cos(psit - psis) - 1.0)
                              + e2 * (np.cos(psit + psis) - 1.0)
                              - 2.0 * e3 * (np.cos(psit) + np.cos(psis) - 2.0))
            if (i, j) == (4, 4):
                return v2h * (e1 * (np.cos(psit - psis) - 1.0)
                              - e2 * (np.cos(psit + psis) - 1.0))
            if (i, j) == (3, 4):
                return v2h * (e1 * np.sin(psit - psis)
                              - e2 * np.sin(psit + psis)
                              + 2.0 * e3 * np.sin(psis))
            return v2h * (-e1 * np.sin(psit - psis)
                          - e2 * np.sin(psit + psis)
                          + 2.0 * e3 * np.sin(psit))
        if i in (1, 2) and j in (1, 2):
            return (self.gamma_i_at(i, t) * self.gamma_i_at(j, s)).astype(complex)
        # mixed linear/displaced pairs
        lc = self.lam_c_at(tau)
        sign = 1.0 if i == 1 or j == 1 else -1.0
        if j in (3, 4):  # (1,3),(2,3),(1,4),(2,4)
            trig = (np.sin(self.psi_at(s)) if j == 3
                    else np.cos(self.psi_at(s)) - 1.0)
            return sign * lc * trig + self.gamma_i_at(i, t) * self.gamma_i_at(j, s)
        # (3,1),(4,1),(3,2),(4,2)
        trig = (np.sin(self.psi_at(t)) if i == 3
                else np.cos(self.psi_at(t)) - 1.0)
        return -sign * lc * trig + self.gamma_i_at(i, t) * self.gamma_i_at(j, s)


def kernel_frequency_scale(solution: VariationalSolution,
                           spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Frequency content of the tabulated kernels.

    Beyond omega_c and eta this includes the thermal scale 2/beta and,
    for the displaced kernels, the lineshape curvature and drift

        |phibar''(0)| = 2 int J F^2 coth (1-gamma) dw = a2
        |Im phibar'(0)| = 2 int (J/w) F^2 (1-gamma) dw

    (at strong coupling e^{phibar} is a Gaussian of width 1/sqrt(a2),
    much narrower than 1/omega_c; the spec's min(0.2/omega_c, 0.2/eta)
    grid alone cannot resolve it)."""
    scale = max(solution.density.omega_c, solution.eta)
    beta = solution.beta
    if 0.0 < beta < math.inf:
        scale = max(scale, 2.0 / beta)
    _, need_phi, _ = _flags(solution)
    if need_phi:
        w = _Weights(solution)
        wc = solution.density.omega_c
        a2 = half_fourier_cos(lambda x: x**2 * w.disp(x, coth=True),
                              0.0, spec, wc)
        drift = half_fourier_cos(lambda x: x * w.disp(x), 0.0, spec, wc)
        scale = max(scale, 2.0 * math.sqrt(a2) + drift)
    return scale


def build_kernels(solution: VariationalSolution, t_max: float,
                  spec: QuadratureSpec = DEFAULT_SPEC,
                  dt: float | None = None) -> CorrelationKernels:
    """Tabulate all kernels for ``solution`` on [0, t_max].

    Default grid step is 0.2 over the kernel frequency scale; consumers
    interpolate with cubic splines (generator assembly reads the kernels
    O(steps^2) times, so on-demand quadrature would dominate the
    runtime).
    """
    kscale = kernel_frequency_scale(solution, spec)
    if dt is None:
        dt = 0.2 / kscale
    n = max(int(math.ceil(t_max / dt)) + 1, 8)
    tau = np.arange(n) * dt

    need_lin, need_phi, need_cross = _flags(solution)
    correlated = solution.spatial is not None
    w = _Weights(solution)
    wc = solution.density.omega_c
    p0 = phi_zero(solution, spec)
    singular = _phi_is_singular(solution)

    lam11 = np.zeros(n, dtype=complex)
    lam12 = np.zeros(n, dtype=complex) if correlated else None
    phibar = np.zeros(n, dtype=complex)
    lam_c = np.zeros(n, dtype=complex)
    c1 = np.zeros(n)
    c2 = np.zeros(n) if correlated else None

    for k, tk in enumerate(tau):
        if need_lin:
            lam11[k] = (half_fourier_cos(lambda x: w.lin(x, coth=True), tk, spec, wc)
                        - 1j * half_fourier_sin(lambda x: w.lin(x), tk, spec, wc))
            if correlated:
                lam12[k] = (half_fourier_cos(
                    lambda x: w.lin(x, coth=True, gamma=True), tk, spec, wc)
                    - 1j * half_fourier_sin(
                        lambda x: w.lin(x, gamma=True), tk, spec, wc))
        if need_phi:
            if singular:
                re = half_fourier_cos_minus_one(
                    lambda x: w.disp(x, coth=True), tk, spec, wc)
            else:
                re = half_fourier_cos(lambda x: w.disp(x, coth=True),
                                      tk, spec, wc) - p0
            phibar[k] = re - 1j * half_fourier_sin(
                lambda x: w.disp(x), tk, spec, wc, singular=singular)
        if need_cross:
            lam_c[k] = solution.v_r * (
                half_fourier_sin(lambda x: w.cross(x, coth=True), tk, spec, wc)
                + 1j * half_fourier_cos(lambda x: w.cross(x), tk, spec, wc))
            c1[k] = half_fourier_cos(lambda x: w.c(x), tk, spec, wc)
            if correlated:
                c2[k] = half_fourier_cos(lambda x: w.c(x, gamma=True),
                                         tk, spec, wc)
    return CorrelationKernels(
        tau=tau, lam11=lam11, phibar=phibar, lam_c=lam_c, c1=c1, phi0=p0,
        b=solution.b, v=solution.v, v_r=solution.v_r, eta=solution.eta,
        beta=solution.beta, solution=solution, lam12=lam12, c2=c2,
        quad_spec=spec, kernel_scale=kscale)


def extend_kernels(kernels: CorrelationKernels, t_max: float) -> CorrelationKernels:
    """New kernel table covering [0, t_max] (same solution and grid step)."""
    if t_max <= kernels.t_max:
        return kernels
    return build_kernels(kernels.solution, t_max, kernels.quad_spec,
                         dt=kernels.dt)


def dump_kernels_csv(kernels: CorrelationKernels, path):
    """CSV dump (columns: tau plus Re/Im of each tabulated kernel)."""
    l33, l44 = kernels.lam33_44_at(kernels.tau)
    cols = [("tau", kernels.tau),
            ("Re_Lambda11", kernels.lam11.real), ("Im_Lambda11", kernels.lam11.imag),
            ("Re_phibar", kernels.phibar.real), ("Im_phibar", kernels.phibar.imag),
            ("Re_Lambda33", l33.real), ("Im_Lambda33", l33.imag),
            ("Re_Lambda44", l44.real), ("Im_Lambda44", l44.imag),
            ("Re_LambdaC", kernels.lam_c.real), ("Im_LambdaC", kernels.lam_c.imag),
            ("C1", kernels.c1), ("psi", -kernels.phibar.imag)]
    if kernels.correlated:
        cols += [("Re_Lambda12", kernels.lam12.real),
                 ("Im_Lambda12", kernels.lam12.imag), ("C2", kernels.c2)]
    header = ",".join(name for name, _ in cols)
    data = np.column_stack([col for _, col in cols])
    np.savetxt(path, data, delimiter=",", header=header, comments="",
               fmt="%.11e")
