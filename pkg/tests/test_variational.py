import math

import numpy as np
import pytest

from vpme.spectral import OhmicDrude, SuperOhmicExp
from vpme.units import PS_UNITS
from vpme.variational import (FProfile, displacement_fraction,
                              free_energy_bound, free_energy_of_profile,
                              limit_solution, renormalization_B, shift_R,
                              solve)

U = PS_UNITS
BETA300 = U.inverse_temperature(300.0)
EPS = U.to_internal(100.0)
V100 = U.to_internal(100.0)

# high-resolution mpmath quadrature of the F = 1 renormalization exponent,
# frozen before the self-consistent solver was built
B_POLARON_20_53_300K = 0.22304605440845031


def test_displacement_fraction_limits():
    # V_R = 0 -> F = 1 everywhere
    assert displacement_fraction(1.0, 0.0, EPS, BETA300) == 1.0
    # omega -> infinity -> F -> 1
    assert displacement_fraction(1e9, 0.4 * V100, EPS, BETA300) == \
        pytest.approx(1.0, abs=1e-6)
    # beta -> 0: F = [1 + 2 V_R^2/w^2]^-1
    v_r = 0.37 * V100
    for w in (0.5, 3.0, 40.0):
        got = displacement_fraction(w, v_r, EPS, 0.0)
        assert got == pytest.approx(1.0 / (1.0 + 2.0 * v_r**2 / w**2),
                                    rel=1e-12)
    # omega -> 0 limit is finite (F -> 0 at finite beta)
    assert displacement_fraction(0.0, v_r, EPS, BETA300) == 0.0
    f = FProfile("variational", v_r, math.hypot(EPS, 2 * v_r), BETA300)
    w = np.geomspace(1e-8, 1e2, 50)
    assert np.all((f(w) >= 0.0) & (f(w) <= 1.0))


def test_renormalization_limits_and_golden():
    j0 = SuperOhmicExp.from_cm1(0.0, 53.0)
    assert renormalization_B(0.3 * V100, j0, BETA300, EPS) == (1.0, False)
    # Ohmic with the full polaron displacement: infrared divergence
    j1 = OhmicDrude.from_cm1(5.0, 53.0)
    b, diverged = renormalization_B(0.0, j1, BETA300, EPS)
    assert b == 0.0 and diverged
    # frozen golden value (F = 1 exponent, J3 lam=20 wc=53 at 300 K)
    j3 = SuperOhmicExp.from_cm1(20.0, 53.0)
    b, diverged = renormalization_B(0.0, j3, BETA300, EPS)
    assert not diverged
    assert b == pytest.approx(B_POLARON_20_53_300K, rel=1e-8)


def test_shift_bounds():
    j3 = SuperOhmicExp.from_cm1(20.0, 53.0)
    lam = j3.analytic_reorganization()
    # F = 1 -> R = -lambda  (polaron); intermediate F -> R in (-lambda, 0)
    sol = limit_solution("polaron", EPS, V100, j3, BETA300)
    assert sol.r == pytest.approx(-lam, rel=1e-12)
    r_mid = shift_R(0.5 * V100, j3, BETA300, EPS)
    assert -lam < r_mid < 0.0
    # F = 0 (huge V_R suppresses all displacement at fixed formula) -> R -> 0
    f0 = FProfile("zero")
    from vpme.variational import _shift_of_profile
    from vpme.quadrature import DEFAULT_SPEC
    assert _shift_of_profile(f0, j3, DEFAULT_SPEC) == pytest.approx(0.0,
                                                                    abs=1e-15)


def test_free_energy_bound_closed_forms():
    j3 = SuperOhmicExp.from_cm1(20.0, 53.0)
    # V_R = 0: A_B = R - ln[2 cosh(beta eps/2)]/beta
    a = free_energy_bound(0.0, j3, BETA300, EPS)
    r0 = shift_R(0.0, j3, BETA300, EPS)
    expected = r0 - math.log(2.0 * math.cosh(0.5 * BETA300 * EPS)) / BETA300
    assert a == pytest.approx(expected, rel=1e-12)
    # J = 0, T -> 0: ground-state energy -sqrt(eps^2+4V^2)/2
    j0 = SuperOhmicExp.from_cm1(0.0, 53.0)
    a0 = free_energy_bound(V100, j0, math.inf, EPS)
    assert a0 == pytest.approx(-0.5 * math.hypot(EPS, 2 * V100), rel=1e-14)


def test_branch_selection_flips_across_jump():
    """Fig. 6 parameters: the selected branch jumps from V_R > 0 to the
    V_R = 0 Foerster branch as lambda_1 crosses ~4 cm^-1, driven by the
    free-energy comparison."""
    v20 = U.to_internal(20.0)
    below = solve(EPS, v20, OhmicDrude.from_cm1(2.0, 53.0), BETA300)
    above = solve(EPS, v20, OhmicDrude.from_cm1(10.0, 53.0), BETA300)
    assert below.v_r > 0.5 * v20
    assert above.v_r == 0.0 and above.diverged
    # below the jump both branches exist and A_B ranks the coherent one first
    zero_branch = [b for b in below.branches if b.v_r == 0.0]
    assert zero_branch and zero_branch[0].a_b > below.a_b


def test_solve_trivial_and_residual():
    j0 = SuperOhmicExp.from_cm1(0.0, 53.0)
    sol = solve(EPS, V100, j0, BETA300)
    assert (sol.v_r, sol.b, sol.r) == (V100, 1.0, 0.0)
    j3 = SuperOhmicExp.from_cm1(20.0, 53.0)
    sol = solve(EPS, V100, j3, BETA300)
    b, _ = renormalization_B(sol.v_r, j3, BETA300, EPS)
    assert abs(sol.v_r - sol.v * b) < 1e-10 * abs(sol.v)
    assert 0.0 <= sol.b <= 1.0 and abs(sol.v_r) <= abs(sol.v)
    assert sol.eta >= abs(EPS)
    assert 0.0 < sol.theta <= math.pi / 4


def test_solve_fig1b_polaron_like():
    """lam3=200, wc=200: minimization approximates the full polaron
    displacement; the solver's fixed point is confirmed by damped
    iteration."""
    j = SuperOhmicExp.from_cm1(200.0, 200.0)
    sol = solve(EPS, V100, j, BETA300)
    f_support = sol.f(np.linspace(j.omega_c, 6 * j.omega_c, 50))
    assert np.all(f_support > 0.8)
    x = 0.8 * V100
    for _ in range(300):
        x_new = V100 * renormalization_B(x, j, BETA300, EPS)[0]
        if abs(x_new - x) < 1e-13 * V100:
            break
        x = 0.5 * (x + x_new)
    assert sol.v_r == pytest.approx(x, rel=1e-9)


def test_solve_negative_coupling_sign():
    j = OhmicDrude.from_cm1(35.0, 106.0)
    sol = solve(U.to_internal(-120.0), U.to_internal(-87.7), j,
                U.inverse_temperature(77.0))
    assert sol.v_r < 0.0  # sign(V_R) = sign(V)
    assert abs(sol.v_r) <= abs(sol.v)


def test_limit_solutions():
    j3 = SuperOhmicExp.from_cm1(20.0, 53.0)
    red = limit_solution("redfield", EPS, V100, j3, BETA300)
    assert (red.v_r, red.b, red.r) == (V100, 1.0, 0.0)
    pol = limit_solution("polaron", EPS, V100, j3, BETA300)
    assert pol.v_r == pytest.approx(V100 * B_POLARON_20_53_300K, rel=1e-8)
    # polaron on Ohmic: V_R = 0 with the divergence flag
    j1 = OhmicDrude.from_cm1(5.0, 53.0)
    pol1 = limit_solution("polaron", EPS, V100, j1, BETA300)
    assert pol1.v_r == 0.0 and pol1.diverged
    # J = 0: polaron and Redfield coincide
    j0 = SuperOhmicExp.from_cm1(0.0, 53.0)
    pol0 = limit_solution("polaron", EPS, V100, j0, BETA300)
    red0 = limit_solution("redfield", EPS, V100, j0, BETA300)
    assert pol0.v_r == red0.v_r and pol0.b == red0.b and pol0.r == red0.r
    with pytest.raises(ValueError):
        limit_solution("bogus", EPS, V100, j3, BETA300)


def test_interpolation_properties():
    # coupling -> 0: solution -> Redfield limit
    j = SuperOhmicExp.from_cm1(1e-6, 53.0)
    sol = solve(EPS, V100, j, BETA300)
    assert sol.v_r == pytest.approx(V100, rel=1e-6)
    assert sol.b == pytest.approx(1.0, abs=1e-6)
    # V -> 0 with fixed J: F -> 1 pointwise
    j3 = SuperOhmicExp.from_cm1(20.0, 53.0)
    sol = solve(EPS, U.to_internal(1e-4), j3, BETA300)
    w = np.linspace(0.1, 20 * j3.omega_c, 60)
    assert np.all(sol.f(w) > 1.0 - 1e-6)


def test_variational_optimality():
    """The returned solution minimizes A_B: strictly within the
    closed-form family (perturb V_R), advisedly for clamped smooth
    perturbations of F."""
    j3 = SuperOhmicExp.from_cm1(50.0, 53.0)
    sol = solve(EPS, V100, j3, BETA300)
    a_star = free_energy_of_profile(sol.f, V100, j3, BETA300, EPS)
    for delta in (-0.02, -0.005, 0.005, 0.02):
        x = sol.v_r * (1.0 + delta)
        f = FProfile("variational", x, math.hypot(EPS, 2 * x), BETA300)
        a = free_energy_of_profile(f, V100, j3, BETA300, EPS)
        assert a >= a_star - 1e-9 * abs(a_star)

    rng = np.random.default_rng(20260810)
    w_nodes = np.linspace(0.0, 40.0 * j3.omega_c, 9)
    for _ in range(20):
        coeffs = 0.05 * rng.uniform(-1.0, 1.0, len(w_nodes))

        class Perturbed:
            spatial = None
            crossover_omega = None

            def __call__(self, w):
                base = sol.f(w)
                delta = np.interp(w, w_nodes, coeffs)
                return np.clip(base + delta, 0.0, 1.0)

        a = free_energy_of_profile(Perturbed(), V100, j3, BETA300, EPS)
        assert a >= a_star - 1e-6 * abs(a_star)
