"""Time propagation, observables and rate fitting.

drho/dt = L(t) rho + s(t) is integrated with classical fixed-step RK4
over the window where the generator is time dependent (its precomputed
grid); beyond that window L is constant by construction (saturated TCL2
rates, decayed source) and the trajectory is continued exactly through
the eigendecomposition of the frozen 4x4 Liouvillian, which keeps long
incoherent-rate runs cheap and free of step-error build-up.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .generator import LiouvilleGenerator, unvec, vec
from .units import tanh_half

__all__ = ["Trajectory", "propagate", "fit_rates", "RateFit",
           "niba_steady_state", "rabi_population"]

POPULATION_TOL = 1e-6
STEADY_SLOPE_TOL = 1e-6  # |d rho11/dt| threshold (1/ps), held for 50 steps
STEADY_HOLD_STEPS = 50


@dataclass
class Trajectory:
    """Uniformly sampled reduced density matrices with metadata."""

    times: np.ndarray
    rhos: np.ndarray
    theory: str = "variational"
    initial_condition: str = "displaced"
    metadata: dict = field(default_factory=dict)
    unphysical: bool = False

    @property
    def rho11(self) -> np.ndarray:
        return self.rhos[:, 0, 0].real

    @property
    def rho22(self) -> np.ndarray:
        return self.rhos[:, 1, 1].real

    @property
    def rho12(self) -> np.ndarray:
        return self.rhos[:, 0, 1]

    def trace_error(self) -> float:
        return float(np.max(np.abs(np.trace(self.rhos, axis1=1, axis2=2) - 1.0)))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rhos - np.conj(
            np.transpose(self.rhos, (0, 2, 1))))))

    def steady_state(self):
        """Plateau value of rho11, or None if the slope criterion
        (|d rho11/dt| < 1e-6 /ps over 50 consecutive steps) never holds."""
        p = self.rho11
        dt = self.times[1] - self.times[0]
        slope = np.abs(np.gradient(p, dt))
        ok = slope < STEADY_SLOPE_TOL
        run = 0
        for k, flag in enumerate(ok):
            run = run + 1 if flag else 0
            if run >= min(STEADY_HOLD_STEPS, len(p) - 1):
                return float(np.mean(p[k:]))
        return None

    def write_csv(self, path):
        data = np.column_stack([self.times, self.rho11, self.rho22,
                                self.rho12.real, self.rho12.imag])
        np.savetxt(path, data, delimiter=",", fmt="%.11e",
                   header="t_ps,rho11,rho22,Re_rho12,Im_rho12", comments="")


def _rk4_window(gen: LiouvilleGenerator, y0, n_steps, dt):
    """Fixed-step RK4 over the precomputed-generator window; the grid
    step of ``gen`` must be dt/2 so every stage lands on the grid."""
    h = gen.h
    l_arr = gen.l_array
    s_arr = gen.s_array
    n_grid = len(l_arr)
    frozen = l_arr[-1]
    zero2 = np.zeros((2, 2), dtype=complex)

    def stage(idx):
        l = l_arr[idx] if idx < n_grid else frozen
        if s_arr is None:
            s = None
        else:
            s = s_arr[idx] if idx < len(s_arr) else zero2
        return l, s

    ys = np.empty((n_steps + 1, 4), dtype=complex)
    ys[0] = y0
    y = y0.copy()
    for k in range(n_steps):
        i0 = 2 * k
        l0, s0 = stage(i0)
        lm, sm = stage(i0 + 1)
        l1, s1 = stage(i0 + 2)
        f0 = l0 @ y + (vec(s0) if s0 is not None else 0.0)
        k1 = f0
        k2 = lm @ (y + 0.5 * dt * k1) + (vec(sm) if sm is not None else 0.0)
        k3 = lm @ (y + 0.5 * dt * k2) + (vec(sm) if sm is not None else 0.0)
        k4 = l1 @ (y + dt * k3) + (vec(s1) if s1 is not None else 0.0)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[k + 1] = y
    return ys


def propagate(gen: LiouvilleGenerator, rho0, t_max, dt=None,
              max_outputs=4001) -> Trajectory:
    """Integrate drho/dt = L(t) rho + s(t) from rho0 over [0, t_max].

    dt defaults to 0.03 / max(eta, omega_c), well inside the resolution
    bound dt <= 0.05 * 2*pi / max(eta, omega_c); it is rounded so the
    generator grid step h = dt/2 tiles the RK4 stages exactly.  Beyond
    the generator window the frozen L is applied exactly (see module
    docstring).  Populations leaving [0 - 1e-6, 1 + 1e-6] only set the
    ``unphysical`` flag.
    """
    scale = max(gen.decomp.eta, gen.kernels.solution.density.omega_c)
    if dt is None:
        dt = 0.03 / scale
    if dt > 0.05 * 2.0 * math.pi / scale:
        raise ValueError("dt too coarse to resolve eta/omega_c oscillations")
    if abs(2.0 * gen.h - dt) > 1e-12 * dt:
        # propagate on the generator's own grid spacing
        dt = 2.0 * gen.h

    window_end = min(gen.t_table, t_max) if not gen.markovian else 0.0
    n_window = int(math.floor(window_end / dt + 1e-9))
    y = vec(np.asarray(rho0, dtype=complex))
    ys_window = _rk4_window(gen, y, n_window, dt)

    t_window = n_window * dt
    times_w = np.arange(n_window + 1) * dt

    if t_window >= t_max - 1e-12:
        times, rhos = _sample(times_w, ys_window, t_max, max_outputs)
    else:
        # exact continuation with the frozen generator
        l_frozen = gen.l_frozen
        n_tail = max(int(math.ceil((t_max - t_window) / dt)), 1)
        n_tail_out = min(n_tail, max(max_outputs, 16))
        t_tail = np.linspace(t_window, t_max, n_tail_out + 1)[1:]
        evals, vr = np.linalg.eig(l_frozen)
        if np.linalg.cond(vr) < 1e12:
            coeff = np.linalg.solve(vr, ys_window[-1])
            ys_tail = np.einsum("ke,e,je->kj",
                                np.exp(np.outer(t_tail - t_window, evals)),
                                coeff, vr, optimize=True)
        else:
            # near-defective Liouvillian: step with the exact propagator
            from scipy.linalg import expm
            step = expm(l_frozen * (t_tail[0] - t_window))
            ys_tail = np.empty((len(t_tail), 4), dtype=complex)
            y_cur = ys_window[-1]
            for k in range(len(t_tail)):
                y_cur = step @ y_cur
                ys_tail[k] = y_cur
        times = np.concatenate([times_w, t_tail])
        ys = np.vstack([ys_window, ys_tail])
        times, rhos = _sample(times, ys, t_max, max_outputs)

    traj = Trajectory(times=times, rhos=rhos)
    pop = traj.rho11
    if np.min(pop) < -POPULATION_TOL or np.max(pop) > 1.0 + POPULATION_TOL \
            or np.min(traj.rho22) < -POPULATION_TOL:
        traj.unphysical = True
    return traj


def _sample(times, ys, t_max, max_outputs):
    keep = times <= t_max + 1e-12
    times = times[keep]
    ys = ys[keep]
    if len(times) > max_outputs:
        idx = np.unique(np.linspace(0, len(times) - 1, max_outputs).astype(int))
        times = times[idx]
        ys = ys[idx]
    rhos = ys.reshape(-1, 2, 2).transpose(0, 2, 1)  # unvec (column stacking)
    return times, rhos


@dataclass
class RateFit:
    kappa_plus: float
    kappa_minus: float
    residual: float
    p_ss: float
    window: tuple
    coherent_warning: bool = False


def _oscillation_amplitude(pop):
    """Amplitude of oscillation after the first extremum, as a fraction
    of the overall population range."""
    d = np.diff(pop)
    sign_flips = np.nonzero(d[1:] * d[:-1] < 0)[0]
    if len(sign_flips) < 1:
        return 0.0
    k0 = sign_flips[0] + 1
    tail = pop[k0:]
    span = np.max(pop) - np.min(pop)
    if span == 0 or len(sign_flips) < 2:
        return 0.0
    return float((np.max(tail) - np.min(tail)) / span) if len(tail) else 0.0


def fit_rates(traj: Trajectory) -> RateFit:
    """Fit rho11(t) = p_ss + (1 - p_ss) exp(-(k+ + k-) t) with
    p_ss = k-/(k+ + k-), over t in [0, first time |rho11 - p_ss| < 0.01].

    Intended for predominantly incoherent trajectories; a residual
    oscillation amplitude above 5% after the first extremum only warns.
    """
    pop = traj.rho11
    t = traj.times
    p_tail = float(np.mean(pop[-max(len(pop) // 20, 2):]))
    osc = _oscillation_amplitude(pop)
    coherent = osc > 0.05
    if coherent:
        warnings.warn("trajectory shows >5%% residual oscillation "
                      "(amplitude %.3f); rate fit is dubious" % osc)

    inside = np.abs(pop - p_tail) < 0.01
    if not np.any(inside[1:]):
        raise ValueError("trajectory never comes within 0.01 of its "
                         "steady state; extend t_max before fitting")
    k_end = int(np.argmax(inside[1:])) + 1
    window = slice(0, k_end + 1)

    def model(tt, kp, km):
        tot = kp + km
        pss = km / tot
        return pss + (1.0 - pss) * np.exp(-tot * tt)

    tot0 = max(1.0 / max(t[k_end], 1e-12), 1e-6)
    kp0 = tot0 * (1.0 - p_tail)
    km0 = tot0 * p_tail
    popt, _ = curve_fit(model, t[window], pop[window],
                        p0=[max(kp0, 1e-12), max(km0, 1e-12)],
                        maxfev=20000)
    kp, km = float(popt[0]), float(popt[1])
    resid = float(np.sqrt(np.mean((model(t[window], kp, km)
                                   - pop[window]) ** 2)))
    return RateFit(kappa_plus=kp, kappa_minus=km, residual=resid,
                   p_ss=km / (kp + km), window=(float(t[0]), float(t[k_end])),
                   coherent_warning=coherent)


def niba_steady_state(eps: float, beta: float) -> float:
    """NIBA biased-system steady state (1/2)(1 - tanh(beta eps / 2));
    zero at T = 0 for eps > 0 regardless of the coupling."""
    return 0.5 * (1.0 - tanh_half(beta, eps))


def rabi_population(eps, v, t):
    """Closed-form donor population for J = 0:
    rho11(t) = 1 - (4 V^2 / eta^2) sin^2(eta t / 2)."""
    eta = math.hypot(eps, 2.0 * v)
    if eta == 0.0:
        return np.ones_like(np.asarray(t, dtype=float))
    t = np.asarray(t, dtype=float)
    return 1.0 - (4.0 * v * v / eta**2) * np.sin(0.5 * eta * t) ** 2
