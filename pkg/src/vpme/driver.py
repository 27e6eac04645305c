"""End-to-end orchestration: theory selection, kernel horizons,
propagation and rate extraction.

All quantities here are in internal units (rad per time unit, times in
the same unit); the config/CLI layer converts from cm^-1 / K / ps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .correlations import CorrelationKernels, build_kernels
from .dynamics import RateFit, Trajectory, fit_rates, propagate
from .generator import LiouvilleGenerator, build_generator, forster_rates
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .spectral import SpectralDensity
from .variational import VariationalSolution, limit_solution, solve

__all__ = ["SimulationResult", "make_solution", "simulate",
           "transfer_rate", "THEORIES"]

THEORIES = ("variational", "redfield", "polaron", "forster")
MARKOV_TIME_FACTOR = 50.0  # Redfield rates frozen at t = 50/omega_c
KERNEL_DECAY_REL = 1e-6


@dataclass
class SimulationResult:
    trajectory: Trajectory
    solution: VariationalSolution
    kernels: CorrelationKernels | None = None
    generator: LiouvilleGenerator | None = None
    fit: RateFit | None = None
    metadata: dict = field(default_factory=dict)


def make_solution(theory, eps, v, density, beta, spatial=None,
                  spec: QuadratureSpec = DEFAULT_SPEC) -> VariationalSolution:
    if theory == "variational":
        return solve(eps, v, density, beta, spec=spec, spatial=spatial)
    if spatial is not None:
        raise ValueError("correlated baths are defined for the variational "
                         "theory only")
    if theory in ("redfield", "polaron"):
        return limit_solution(theory, eps, v, density, beta, spec)
    if theory == "forster":
        # incoherent hopping: F = 1 lineshape, no coherent transfer term
        sol = limit_solution("polaron", eps, v, density, beta, spec)
        sol.kind = "forster"
        sol.v_r = 0.0
        return sol
    raise ValueError("unknown theory %r (expected one of %s)"
                     % (theory, THEORIES))


def _kernel_horizon(solution, t_max):
    """Initial tabulation horizon: a few bath correlation times (the
    decay test below doubles it as needed), capped by the run length."""
    wc = solution.density.omega_c
    guess = 10.0 / wc
    if not math.isinf(solution.beta) and solution.beta > 0:
        guess = max(guess, 10.0 * solution.beta)
    return min(t_max, guess)


def _kernels_decayed(kernels):
    """True when every tabulated kernel has decayed at the table end
    (freezing L there is then safe)."""
    tail = slice(max(len(kernels.tau) - 5, 0), None)
    l33, l44 = kernels.lam33_44_at(kernels.tau)
    for table in (kernels.lam11, l33, l44, kernels.lam_c):
        scale = np.max(np.abs(table))
        if scale > 0 and np.max(np.abs(table[tail])) > KERNEL_DECAY_REL * scale:
            return False
    return True


def _probe_decayed(solution, t, spec):
    """Cheap decay test at a few sample times before committing to a
    tabulation horizon (max over samples avoids oscillation zeros)."""
    from .correlations import lambda_cross, lambda_displaced, lambda_linear
    samples = (0.83 * t, 0.93 * t, t)
    l11_0 = abs(lambda_linear(solution, 0.0, spec))
    l33_0, l44_0 = lambda_displaced(solution, 0.0, spec)
    lc_ref = abs(lambda_cross(solution, 0.25 / solution.density.omega_c, spec))
    for ts in samples:
        if l11_0 > 0 and abs(lambda_linear(solution, ts, spec)) \
                > KERNEL_DECAY_REL * l11_0:
            return False
        l33, l44 = lambda_displaced(solution, ts, spec)
        scale = max(abs(l33_0), abs(l44_0))
        if scale > 0 and max(abs(l33), abs(l44)) > KERNEL_DECAY_REL * scale:
            return False
        if lc_ref > 0 and abs(lambda_cross(solution, ts, spec)) \
                > KERNEL_DECAY_REL * lc_ref:
            return False
    return True


def build_decayed_kernels(solution, t_max, spec=DEFAULT_SPEC,
                          dt=None) -> CorrelationKernels:
    """Tabulate kernels out to their decay (or t_max, whichever is
    first): probe for the horizon first, then verify on the full table,
    doubling until the tail test passes."""
    horizon = _kernel_horizon(solution, t_max)
    while horizon < t_max and not _probe_decayed(solution, horizon, spec):
        horizon = min(2.0 * horizon, t_max)
    while True:
        kernels = build_kernels(solution, horizon, spec=spec, dt=dt)
        if horizon >= t_max or _kernels_decayed(kernels):
            return kernels
        horizon = min(2.0 * horizon, t_max)


def _forster_trajectory(kernels, t_max, dt, max_outputs=4001) -> Trajectory:
    """Populations from the incoherent rate equation
    d rho11/dt = -kappa(+eps,t) rho11 + kappa(-eps,t) (1 - rho11)."""
    table_end = min(kernels.t_max, t_max)
    n_win = int(math.floor(table_end / dt + 1e-9))
    t_win = np.arange(n_win + 1) * dt
    half = np.arange(2 * n_win + 1) * (dt / 2.0)
    kp, km = forster_rates(kernels, half)
    kp = np.atleast_1d(kp)
    km = np.atleast_1d(km)
    p = np.empty(n_win + 1)
    p[0] = 1.0
    for k in range(n_win):
        i0 = 2 * k

        def f(idx, val):
            return -kp[idx] * val + km[idx] * (1.0 - val)

        y = p[k]
        k1 = f(i0, y)
        k2 = f(i0 + 1, y + 0.5 * dt * k1)
        k3 = f(i0 + 1, y + 0.5 * dt * k2)
        k4 = f(i0 + 2, y + dt * k3)
        p[k + 1] = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    times = t_win
    if table_end < t_max - 1e-12:
        # frozen rates beyond the table: exact exponential tail
        kpf, kmf = kp[-1], km[-1]
        tot = kpf + kmf
        pss = kmf / tot if tot > 0 else p[-1]
        n_tail = min(max(int((t_max - table_end) / dt), 1), max_outputs)
        t_tail = np.linspace(table_end, t_max, n_tail + 1)[1:]
        p_tail = pss + (p[-1] - pss) * np.exp(-tot * (t_tail - table_end))
        times = np.concatenate([times, t_tail])
        p = np.concatenate([p, p_tail])
    if len(times) > max_outputs:
        idx = np.unique(np.linspace(0, len(times) - 1, max_outputs).astype(int))
        times, p = times[idx], p[idx]
    rhos = np.zeros((len(times), 2, 2), dtype=complex)
    rhos[:, 0, 0] = p
    rhos[:, 1, 1] = 1.0 - p
    return Trajectory(times=times, rhos=rhos, theory="forster")


def simulate(theory, eps, v, density: SpectralDensity, beta, t_max,
             dt=None, initial_condition="displaced", spatial=None,
             spec: QuadratureSpec = DEFAULT_SPEC, max_outputs=4001,
             kernel_dt=None) -> SimulationResult:
    """Run one theory at one parameter point.

    The inhomogeneous (bath-relaxation) source is active for a bare
    initial bath under the variational/polaron theories; a displaced
    initial bath gives the identically-zero source.  Redfield uses the
    Markovian long-time rates (K frozen at 50/omega_c).
    """
    if initial_condition not in ("displaced", "bare"):
        raise ValueError("initial_condition must be 'displaced' or 'bare'")
    solution = make_solution(theory, eps, v, density, beta, spatial, spec)
    markovian = theory == "redfield"
    markov_time = MARKOV_TIME_FACTOR / density.omega_c if markovian else None
    if markovian:
        # K is frozen at 50/omega_c; once the kernel has decayed the
        # response integral is already saturated, so the table may stop
        # at the decay horizon instead.
        kernels = build_decayed_kernels(solution, markov_time, spec=spec,
                                        dt=kernel_dt)
    else:
        kernels = build_decayed_kernels(solution, t_max, spec=spec,
                                        dt=kernel_dt)

    # dt resolves the system frequencies and the generator's own ramp
    # (set by the kernel frequency content at strong coupling)
    scale = max(density.omega_c, solution.eta, 0.5 * kernels.kernel_scale,
                1e-12)
    if dt is None:
        dt = 0.03 / scale
    h = 0.5 * dt

    if theory == "forster":
        traj = _forster_trajectory(kernels, t_max, dt, max_outputs)
        traj.initial_condition = initial_condition
        return SimulationResult(trajectory=traj, solution=solution,
                                kernels=kernels)

    include_inhomogeneous = (initial_condition == "bare"
                             and theory in ("variational", "polaron"))
    gen = build_generator(kernels, h, t_max=t_max,
                          include_inhomogeneous=include_inhomogeneous,
                          markovian=markovian, markov_time=markov_time,
                          theory=theory)
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    traj = propagate(gen, rho0, t_max, dt=dt, max_outputs=max_outputs)
    traj.theory = theory
    traj.initial_condition = initial_condition
    return SimulationResult(trajectory=traj, solution=solution,
                            kernels=kernels, generator=gen)


def _relaxation_estimate(result: SimulationResult) -> float:
    """1/e relaxation time inferred from the frozen generator (or frozen
    Foerster rates)."""
    if result.generator is not None:
        evals = np.linalg.eigvals(result.generator.l_frozen)
        decaying = evals[evals.real < -1e-14]
        if len(decaying) == 0:
            return math.inf
        return 1.0 / float(-np.max(decaying.real))
    kp, km = forster_rates(result.kernels, result.kernels.t_max)
    tot = float(kp + km)
    return math.inf if tot <= 0 else 1.0 / tot


def transfer_rate(theory, eps, v, density, beta, t_max_cap=4000.0,
                  spec: QuadratureSpec = DEFAULT_SPEC, **kwargs):
    """Fit kappa_+ for one parameter point, extending t_max until the
    trajectory relaxes to within the fit window (cap guards runaway
    cases).  Returns (RateFit, SimulationResult)."""
    probe = simulate(theory, eps, v, density, beta,
                     t_max=min(_probe_horizon(density, eps, v), t_max_cap),
                     spec=spec, **kwargs)
    t_relax = _relaxation_estimate(probe)
    t_max = min(max(12.0 * t_relax, probe.trajectory.times[-1]), t_max_cap)
    result = probe
    if t_max > probe.trajectory.times[-1] * (1 + 1e-9):
        result = simulate(theory, eps, v, density, beta, t_max=t_max,
                          spec=spec, **kwargs)
    fit = fit_rates(result.trajectory)
    result.fit = fit
    return fit, result


def _probe_horizon(density, eps, v):
    scale = max(density.omega_c, math.hypot(eps, 2 * v))
    return 600.0 / scale
