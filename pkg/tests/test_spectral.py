import math

import numpy as np
import pytest

from vpme.spectral import (OhmicDrude, SuperOhmicExp,
                           TabulatedSpectralDensity)
from vpme.units import PS_UNITS

U = PS_UNITS


def test_super_ohmic_values():
    j3 = SuperOhmicExp.from_cm1(20.0, 53.0)
    assert j3(0.0) == 0.0
    # J3(wc) = a3 wc^3 / e = (lam/2)/e = 10/e cm^-1 for lam3 = 20
    val = U.from_internal(j3(j3.omega_c))
    assert val == pytest.approx(10.0 / math.e, rel=1e-12)
    w = np.linspace(0.0, 10 * j3.omega_c, 500)
    assert np.all(j3(w) >= 0.0)


def test_ohmic_drude_peak():
    j1 = OhmicDrude.from_cm1(35.0, 106.0)
    assert j1(0.0) == 0.0
    # peak of the w-Lorentzian at w = wc: (2/pi) lam wc^2/(2 wc^2) = lam/pi
    val = U.from_internal(j1(j1.omega_c))
    assert val == pytest.approx(35.0 / math.pi, rel=1e-12)


def test_negative_frequency_rejected():
    j = SuperOhmicExp.from_cm1(20.0, 53.0)
    with pytest.raises(ValueError):
        j.evaluate(-1.0)


@pytest.mark.parametrize("density,slope", [
    (SuperOhmicExp.from_cm1(20.0, 53.0), 3.0),
    (OhmicDrude.from_cm1(35.0, 53.0), 1.0),
])
def test_low_frequency_exponent(density, slope):
    w = np.geomspace(1e-6, 1e-4, 30) * density.omega_c
    y = density(w)
    fitted = np.polyfit(np.log(w), np.log(y), 1)[0]
    assert abs(fitted - slope) < 0.01
    assert density.low_freq_exponent == slope


def test_reorganization_energy_closed_forms():
    j3 = SuperOhmicExp.from_cm1(20.0, 53.0)
    assert j3.analytic_reorganization() == pytest.approx(
        U.to_internal(20.0), rel=1e-14)
    # quadrature must match the closed form 2 a3 wc^3 to 1e-8
    assert j3.reorganization_energy() == pytest.approx(
        j3.analytic_reorganization(), rel=1e-8)
    j1 = OhmicDrude.from_cm1(35.0, 106.0)
    assert j1.analytic_reorganization() == pytest.approx(
        U.to_internal(35.0), rel=1e-14)
    assert j1.reorganization_energy() == pytest.approx(
        j1.analytic_reorganization(), rel=1e-8)
    assert SuperOhmicExp.from_cm1(0.0, 53.0).reorganization_energy() == 0.0


def test_coupling_scale_linearity():
    j3 = SuperOhmicExp.from_cm1(20.0, 53.0)
    assert j3.scaled(2.5).reorganization_energy() == pytest.approx(
        2.5 * j3.reorganization_energy(), rel=1e-12)
    j1 = OhmicDrude.from_cm1(5.0, 53.0)
    assert j1.scaled(7.0).analytic_reorganization() == pytest.approx(
        7.0 * j1.analytic_reorganization(), rel=1e-14)


def test_tabulated_round_trip():
    j3 = SuperOhmicExp.from_cm1(20.0, 53.0)
    w = np.linspace(1e-4 * j3.omega_c, 40 * j3.omega_c, 20001)
    table = TabulatedSpectralDensity(w, j3(w))
    assert table(0.5 * j3.omega_c) == pytest.approx(
        float(j3(0.5 * j3.omega_c)), rel=2e-6)
    assert table.reorganization_energy() == pytest.approx(
        j3.analytic_reorganization(), rel=1e-3)


def test_tabulated_divergent_rejected():
    w = np.linspace(1e-8, 1.0, 100)
    with pytest.raises(ValueError):
        TabulatedSpectralDensity(w, -np.ones_like(w))  # negative J
    with pytest.raises(ValueError):
        # divergent J/omega at the table head
        TabulatedSpectralDensity(np.array([1e-300, 0.5, 1.0]),
                                 np.array([1e300, 1.0, 1.0]))


def test_polaron_divergence_rule():
    j1 = OhmicDrude.from_cm1(5.0, 53.0)
    j3 = SuperOhmicExp.from_cm1(5.0, 53.0)
    beta = U.inverse_temperature(300.0)
    assert j1.polaron_b_diverges(beta)
    assert j1.polaron_b_diverges(math.inf)
    assert not j3.polaron_b_diverges(beta)
    assert not j3.polaron_b_diverges(math.inf)
    assert j3.polaron_b_diverges(0.0)  # infinite temperature
    assert not SuperOhmicExp.from_cm1(0.0, 53.0).polaron_b_diverges(beta)
