import math

import numpy as np
import pytest

from vpme.quadrature import (QuadratureError, QuadratureSpec,
                             half_fourier_cos, half_fourier_cos_minus_one,
                             half_fourier_sin, integrate)

SPEC = QuadratureSpec()


def test_gamma_function_example():
    assert integrate(lambda w: w**3 * math.exp(-w)) == pytest.approx(
        6.0, rel=1e-10)


def test_gaussian_example():
    assert integrate(lambda w: math.exp(-w * w)) == pytest.approx(
        math.sqrt(math.pi) / 2.0, rel=1e-10)


def test_reorganization_integrand_super_ohmic():
    # int J3/w dw = 2 a3 wc^3 for J3 = a3 w^3 exp(-w/wc)
    a3, wc = 3.7e-4, 9.98
    val = integrate(lambda w: a3 * w**2 * math.exp(-w / wc), omega_scale=wc)
    assert val == pytest.approx(2.0 * a3 * wc**3, rel=1e-10)


def test_complex_integrand():
    val = integrate(lambda w: math.exp(-w) * (1.0 + 2.0j))
    assert val == pytest.approx(1.0 + 2.0j, rel=1e-10)


def test_doubling_subdivisions_stable():
    # a converged result moves by less than the reported tolerance when
    # the subdivision budget doubles
    f = lambda w: w**3 * math.exp(-w) * math.cos(3.0 * w)
    a = integrate(f, QuadratureSpec(limit=100))
    b = integrate(f, QuadratureSpec(limit=200))
    assert abs(a - b) <= 1e-9 * abs(a) + 1e-12


def test_non_convergence_raises_with_partial():
    bad = lambda w: math.cos(w * w) * math.cos(50.0 / (w + 1e-3))
    with pytest.raises(QuadratureError) as err:
        integrate(bad, QuadratureSpec(rtol=1e-13, atol=1e-300, limit=3),
                  omega_scale=30.0, tail=False)
    assert isinstance(err.value.partial, float)


def test_half_fourier_against_closed_forms():
    # int_0^inf e^{-w} cos(w t) = 1/(1+t^2); sin -> t/(1+t^2)
    for t in (0.0, 0.4, 2.0, 11.0):
        c = half_fourier_cos(lambda w: math.exp(-w), t)
        assert c == pytest.approx(1.0 / (1.0 + t * t), rel=1e-8)
    for t in (0.4, 2.0, 11.0):
        s = half_fourier_sin(lambda w: math.exp(-w), t)
        assert s == pytest.approx(t / (1.0 + t * t), rel=1e-8)
        s2 = half_fourier_sin(lambda w: math.exp(-w), t, singular=True)
        assert s2 == pytest.approx(s, rel=1e-8)
    assert half_fourier_sin(lambda w: math.exp(-w), 0.0) == 0.0


def test_half_fourier_cos_minus_one_regularizes():
    # weight with an integrable 1/w singularity once (cos - 1) is attached:
    # int_0^inf e^{-w}(cos(wt) - 1)/w dw = -log(1 + t^2)/2
    for t in (0.3, 1.0, 5.0):
        val = half_fourier_cos_minus_one(lambda w: math.exp(-w) / w, t)
        assert val == pytest.approx(-0.5 * math.log1p(t * t), rel=1e-7)
    assert half_fourier_cos_minus_one(lambda w: 1.0 / w, 0.0) == 0.0


def test_determinism():
    f = lambda w: w**2 * math.exp(-w) * math.cos(2.0 * w)
    assert integrate(f) == integrate(f)
    assert half_fourier_cos(lambda w: math.exp(-w), 1.7) == \
        half_fourier_cos(lambda w: math.exp(-w), 1.7)
