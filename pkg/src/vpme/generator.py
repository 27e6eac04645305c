"""Assembly of the time-local generator.

The system part H_S = (eps/2) sigma_z + V_R sigma_x + R*1 is decomposed
into eigenoperators Delta_{i,w} (w in {0, +eta, -eta}) of the coupling
operators A_1 = |1><1|, A_2 = |2><2|, A_3 = sigma_x, A_4 = sigma_y.  With
response functions

    K_ij(w, t) = int_0^t Lambda_ij(tau) e^{i w tau} dtau
    gamma_ij = 2 Re K,   S_ij = Im K

the homogeneous part reads (column-stacked superoperator form)

    L(t) rho = -i[H_S, rho]
               - sum_{ij,w} { K_ij(w,t) [A_i, Delta_jw rho]
                              - K_ij(w,t)* [A_i, rho Delta_jw^dag] }

which is the (1/2)gamma / S double-commutator form written compactly.
K integrals are evaluated as cubic-spline antiderivatives of the
tabulated kernels (O(h^4); cumulative trapezoid would dominate the
dt-halving error budget).

The inhomogeneous source for a bare (non-displaced) initial bath is

    s(t) = -i sum_{i,w} Gamma_i(t) e^{iwt} [A_i, Delta_{1,w}]
           - sum_{ij,w,w'} { e^{iwt} Kd_ij(w',t) [A_i, Delta_{jw'} Delta_{1w}]
                 - e^{-iwt} Kd_ij(w',t)* [A_i, (Delta_{jw'} Delta_{1w})^dag] }

with Kd_ij(w,t) = int_0^t Lambda^(d)_ij(tau,t) e^{iw tau} dtau over all
sixteen pairs; it vanishes identically for a displaced initial bath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .correlations import (CORRELATED_EXTRA_PAIRS, HOMOGENEOUS_PAIRS,
                           INHOMOGENEOUS_PAIRS, CorrelationKernels,
                           extend_kernels)

__all__ = [
    "EigenDecomposition",
    "eigen_decompose",
    "LiouvilleGenerator",
    "build_generator",
    "response",
    "forster_rates",
    "spre",
    "spost",
    "vec",
    "unvec",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
A_OPS = {1: np.diag([1.0, 0.0]).astype(complex),
         2: np.diag([0.0, 1.0]).astype(complex),
         3: SIGMA_X, 4: SIGMA_Y}
IDENTITY = np.eye(2, dtype=complex)

FREQ_LABELS = (0, +1, -1)


def vec(rho):
    """Column-stacking vectorization (Fortran order)."""
    return np.asarray(rho, dtype=complex).reshape(4, order="F")


def unvec(v):
    return np.asarray(v, dtype=complex).reshape((2, 2), order="F")


def spre(a):
    """Superoperator of rho -> a rho under column stacking."""
    return np.kron(IDENTITY, a)


def spost(a):
    """Superoperator of rho -> rho a under column stacking."""
    return np.kron(np.asarray(a, dtype=complex).T, IDENTITY)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigensystem of H_S and the Delta_{i,w} eigenoperator tables."""

    eps: float
    v_r: float
    r: float
    eta: float
    theta: float
    plus: np.ndarray
    minus: np.ndarray
    h_s: np.ndarray
    delta: dict

    def freq(self, label: int) -> float:
        return label * self.eta

    def delta_op(self, i: int, label: int) -> np.ndarray:
        return self.delta[(i, label)]


def eigen_decompose(eps: float, v_r: float, r: float = 0.0) -> EigenDecomposition:
    """Decompose the A_i into eigenoperators of H_S.

    theta = (1/2) arctan(2 V_R / eps) defines |+> = (cos t, sin t),
    |-> = (-sin t, cos t) with H_S |+-> = (1/2)(2R +- eta)|+->; the
    identity shift R never enters the Delta's or the commutator.
    """
    if eps == 0.0 and v_r == 0.0:
        raise ValueError("degenerate system (eps = V_R = 0) has no "
                         "eigenoperator decomposition")
    eta = math.hypot(eps, 2.0 * v_r)
    theta = 0.5 * math.atan2(2.0 * v_r, eps)
    plus = np.array([math.cos(theta), math.sin(theta)], dtype=complex)
    minus = np.array([-math.sin(theta), math.cos(theta)], dtype=complex)
    p_plus = np.outer(plus, plus.conj())
    p_minus = np.outer(minus, minus.conj())
    h_s = 0.5 * eps * SIGMA_Z + v_r * SIGMA_X + r * IDENTITY
    delta = {}
    for i, a in A_OPS.items():
        delta[(i, 0)] = p_plus @ a @ p_plus + p_minus @ a @ p_minus
        delta[(i, +1)] = p_minus @ a @ p_plus
        delta[(i, -1)] = p_plus @ a @ p_minus
    return EigenDecomposition(eps=eps, v_r=v_r, r=r, eta=eta, theta=theta,
                              plus=plus, minus=minus, h_s=h_s, delta=delta)


def _pairs_for(kernels: CorrelationKernels):
    pairs = list(HOMOGENEOUS_PAIRS)
    if kernels.correlated:
        pairs += list(CORRELATED_EXTRA_PAIRS)
    return pairs


def _k_tables(kernels, decomp, t_grid):
    """K_ij(w, t) on t_grid for each (pair, frequency label), via the
    antiderivative of the splined integrand Lambda_ij(tau) e^{iw tau}."""
    out = {}
    for (i, j) in _pairs_for(kernels):
        lam = kernels.pair_kernel_at(i, j, t_grid)
        if not np.any(lam):
            for label in FREQ_LABELS:
                out[(i, j, label)] = np.zeros(len(t_grid), dtype=complex)
            continue
        for label in FREQ_LABELS:
            integrand = lam * np.exp(1j * decomp.freq(label) * t_grid)
            anti = CubicSpline(t_grid, integrand).antiderivative()
            out[(i, j, label)] = anti(t_grid)
    return out


def response(kernels: CorrelationKernels, decomp: EigenDecomposition,
             pair, label, t):
    """K_ij(w_label, t) for one pair; extends the kernel table if t
    exceeds it."""
    t = float(t)
    if t == 0.0:
        return 0.0 + 0.0j
    if t > kernels.t_max:
        kernels = extend_kernels(kernels, 1.05 * t + 4.0 * kernels.dt)
    n = max(int(math.ceil(8.0 * kernels.t_max / kernels.dt)), 64)
    grid = np.linspace(0.0, kernels.t_max, n + 1)
    lam = kernels.pair_kernel_at(pair[0], pair[1], grid)
    integrand = lam * np.exp(1j * decomp.freq(label) * grid)
    return complex(CubicSpline(grid, integrand).antiderivative()(t))


def _simpson_weights(m, h):
    """Composite Simpson weights for m uniformly spaced samples."""
    w = np.zeros(m)
    if m == 1:
        return w
    if m == 2:
        w[:] = 0.5 * h
        return w
    n_simpson = m if m % 2 == 1 else m - 1
    w[0:n_simpson:2] += h / 3.0
    w[1:n_simpson:2] += 4.0 * h / 3.0
    w[2:n_simpson:2] += h / 3.0
    w[0] = h / 3.0
    w[n_simpson - 1] = h / 3.0
    if m % 2 == 0:
        # trailing trapezoid panel
        w[-2] += 0.5 * h
        w[-1] += 0.5 * h
    return w


class LiouvilleGenerator:
    """Time-dependent 4x4 generator L(t) (column-stacked), plus the
    traceless inhomogeneous source s(t).

    Values are precomputed on a uniform grid of step ``h`` covering the
    kernel horizon; beyond it the TCL2 rates have saturated and L is
    frozen at its final value (s has decayed and is set to zero).  In
    Markovian mode L is the frozen matrix at all times.
    """

    def __init__(self, decomp, kernels, h, l_array, s_array=None,
                 theory="variational", markovian=False):
        self.decomp = decomp
        self.kernels = kernels
        self.h = h
        self.l_array = l_array
        self.s_array = s_array
        self.theory = theory
        self.markovian = markovian
        self.include_inhomogeneous = s_array is not None
        self.t_grid = np.arange(len(l_array)) * h

    @property
    def t_table(self) -> float:
        return float(self.t_grid[-1])

    @property
    def l_frozen(self) -> np.ndarray:
        return self.l_array[-1]

    def matrix(self, t: float) -> np.ndarray:
        """L(t); frozen value beyond the table (and everywhere when
        Markovian)."""
        if self.markovian:
            return self.l_array[-1]
        k = int(round(t / self.h))
        if abs(k * self.h - t) > 1e-9 * max(1.0, abs(t)):
            # off-grid request: cubic-accurate local interpolation
            return self._interp_matrix(t)
        if k >= len(self.l_array):
            return self.l_array[-1]
        return self.l_array[k]

    def _interp_matrix(self, t):
        if t >= self.t_table:
            return self.l_array[-1]
        idx = min(max(int(t / self.h) - 1, 0), len(self.l_array) - 4)
        ts = self.t_grid[idx:idx + 4]
        out = np.zeros((4, 4), dtype=complex)
        for a, tk in enumerate(ts):
            w = np.prod([(t - ts[b]) / (tk - ts[b]) for b in range(4) if b != a])
            out += w * self.l_array[idx + a]
        return out

    def source(self, t: float) -> np.ndarray:
        """Inhomogeneous source s(t) (zero 2x2 when disabled or decayed)."""
        if self.s_array is None:
            return np.zeros((2, 2), dtype=complex)
        k = int(round(t / self.h))
        if k >= len(self.s_array):
            return np.zeros((2, 2), dtype=complex)
        return self.s_array[k]


def _homogeneous_structures(decomp, pairs):
    """Constant superoperator pieces multiplying K and K* per channel."""
    m1 = {}
    m2 = {}
    for (i, j) in pairs:
        a = A_OPS[i]
        for label in FREQ_LABELS:
            d = decomp.delta_op(j, label)
            dd = d.conj().T
            m1[(i, j, label)] = spre(a @ d) - spre(d) @ spost(a)
            m2[(i, j, label)] = spost(dd @ a) - spre(a) @ spost(dd)
    return m1, m2


def build_generator(kernels: CorrelationKernels, h: float,
                    t_max: float | None = None,
                    include_inhomogeneous: bool = False,
                    markovian: bool = False,
                    markov_time: float | None = None,
                    theory: str = "variational",
                    source_stride: int = 4) -> LiouvilleGenerator:
    """Precompute L(t) (and s(t) if requested) on a grid of step h.

    The grid covers min(t_max, kernel horizon); the returned generator
    freezes L beyond it.  ``markovian`` replaces K(w, t) by its value at
    ``markov_time`` (long-time limit), producing a constant generator.
    """
    sol = kernels.solution
    decomp = eigen_decompose(sol.eps, sol.v_r, sol.r)
    horizon = kernels.t_max if t_max is None else min(t_max, kernels.t_max)
    n = max(int(math.floor(horizon / h + 1e-9)) + 1, 4)
    t_grid = np.arange(n) * h

    pairs = _pairs_for(kernels)
    k_tab = _k_tables(kernels, decomp, t_grid)
    if markovian:
        tf = kernels.t_max if markov_time is None else min(markov_time,
                                                           kernels.t_max)
        full = np.arange(int(math.floor(tf / h + 1e-9)) + 1) * h
        k_full = _k_tables(kernels, decomp, full)
        for key in k_tab:
            k_tab[key] = np.full(n, k_full[key][-1])

    m1, m2 = _homogeneous_structures(decomp, pairs)
    l_h = -1j * (spre(decomp.h_s) - spost(decomp.h_s))
    l_array = np.broadcast_to(l_h, (n, 4, 4)).copy()
    for key, k_vals in k_tab.items():
        l_array -= (k_vals[:, None, None] * m1[key]
                    + np.conj(k_vals)[:, None, None] * m2[key])

    s_array = None
    if include_inhomogeneous:
        s_array = _source_array(kernels, decomp, t_grid, source_stride)

    return LiouvilleGenerator(decomp, kernels, h, l_array, s_array,
                              theory=theory, markovian=markovian)


def _source_array(kernels, decomp, t_grid, stride):
    """s(t) on t_grid: evaluated every ``stride`` points and splined
    through the three real components of the traceless Hermitian source."""
    n = len(t_grid)
    idx = np.arange(0, n, stride)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    samples = np.array([_source_at(kernels, decomp, t_grid, k) for k in idx])
    comps = np.stack([samples[:, 0, 0].real, samples[:, 0, 1].real,
                      samples[:, 0, 1].imag], axis=1)
    if len(idx) >= 4:
        spl = CubicSpline(t_grid[idx], comps)
        fine = spl(t_grid)
    else:
        fine = np.array([comps[np.searchsorted(idx, min(k, idx[-1]))]
                         for k in range(n)])
    out = np.empty((n, 2, 2), dtype=complex)
    out[:, 0, 0] = fine[:, 0]
    out[:, 1, 1] = -fine[:, 0]
    out[:, 0, 1] = fine[:, 1] + 1j * fine[:, 2]
    out[:, 1, 0] = fine[:, 1] - 1j * fine[:, 2]
    return out


def _source_at(kernels, decomp, t_grid, k):
    """s(t_k) by direct evaluation (first order plus both second-order
    double sums over all sixteen pairs)."""
    t = t_grid[k]
    s = np.zeros((2, 2), dtype=complex)
    # first order: -i sum_{i,w} Gamma_i(t) e^{iwt} [A_i, Delta_{1,w}]
    for i in range(1, 5):
        g = float(kernels.gamma_i_at(i, t))
        if g == 0.0:
            continue
        for label in FREQ_LABELS:
            d = decomp.delta_op(1, label)
            phase = np.exp(1j * decomp.freq(label) * t)
            a = A_OPS[i]
            s += -1j * g * phase * (a @ d - d @ a)
    if k == 0:
        return s
    # second order
    tau = t_grid[:k + 1]
    weights = _simpson_weights(k + 1, t_grid[1] - t_grid[0])
    phases = {label: np.exp(1j * decomp.freq(label) * tau)
              for label in FREQ_LABELS}
    for (i, j) in INHOMOGENEOUS_PAIRS:
        row = kernels.lambda_d_at(i, j, tau, t)
        if not np.any(row):
            continue
        a = A_OPS[i]
        for lp in FREQ_LABELS:  # w' of Kd
            kd = np.dot(weights, row * phases[lp])
            if kd == 0.0:
                continue
            djp = decomp.delta_op(j, lp)
            for label in FREQ_LABELS:  # w of Delta_{1,w}
                m = djp @ decomp.delta_op(1, label)
                ph = np.exp(1j * decomp.freq(label) * t)
                x = ph * kd * m
                x -= np.conj(ph) * np.conj(kd) * m.conj().T
                s -= a @ x - x @ a
    return s


def forster_rates(kernels: CorrelationKernels, t):
    """Time-dependent Foerster rates on the V_R = 0 branch:

        kappa(+-eps, t) = 2 V^2 Re int_0^t e^{+-i eps tau} B^2 e^{phi(tau)} dtau

    with B^2 e^{phi} = e^{phibar} kept finite even when B = 0.  Returns
    (kappa(+eps, t), kappa(-eps, t)) evaluated at the requested times.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t > kernels.t_max * (1 + 1e-12)):
        kernels = extend_kernels(kernels, float(np.max(t)) * 1.05)
    eps = kernels.solution.eps
    # resample finely enough for both the lineshape and the e^{i eps tau}
    # phase before forming the antiderivative
    h = min(kernels.dt, 0.2 / max(abs(eps), 1e-12)) / 4.0
    grid = np.arange(int(math.floor(kernels.t_max / h)) + 1) * h
    w_tau = kernels.lineshape_at(grid)
    v2 = kernels.v ** 2
    out = []
    for sign in (+1.0, -1.0):
        anti = CubicSpline(grid, np.exp(sign * 1j * eps * grid) * w_tau
                           ).antiderivative()
        out.append(2.0 * v2 * np.real(anti(t)))
    kp, km = out
    return (kp if kp.size > 1 else float(kp[0]),
            km if km.size > 1 else float(km[0]))
