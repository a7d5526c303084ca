import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.special import gamma

from fpheom import (BathSpec, SampleGrid, SpectralParams, SpinSystem, correlation_oracle,
                    correlation_series, frequency_grid, noise_power, spectral_density)
from fpheom.bath import SIGMA_X, SIGMA_Z


def closed_form_zero_t(t, p):
    return p.alpha * p.omega_c ** 2 * gamma(p.s + 1) / (1 + 1j * p.omega_c * t) ** (p.s + 1)


def test_hamiltonian_and_coupling():
    sys = SpinSystem(0.3, 1.2)
    np.testing.assert_allclose(sys.hamiltonian, 0.3 * SIGMA_Z + 1.2 * SIGMA_X)
    np.testing.assert_allclose(sys.hamiltonian, sys.hamiltonian.conj().T)
    np.testing.assert_allclose(sys.coupling_operator, SIGMA_Z)


@pytest.mark.parametrize("eps, delta", [(0.0, -1.0), (float("nan"), 1.0), (0.0, float("inf"))])
def test_spin_system_rejects_bad_parameters(eps, delta):
    with pytest.raises(ValueError):
        SpinSystem(eps, delta)


def test_spectral_density_values():
    p = SpectralParams(0.1, 0.5, 20.0)
    w = np.array([0.0, 1.0, 20.0])
    expected = 0.5 * np.pi * 0.1 * 20.0 ** 0.5 * w ** 0.5 * np.exp(-w / 20.0)
    np.testing.assert_allclose(spectral_density(w, p), expected)
    with pytest.raises(ValueError):
        spectral_density(np.array([-1.0]), p)


def test_zero_temperature_noise_power_is_one_sided():
    b = BathSpec(SpectralParams(0.1, 0.5, 20.0))
    w = np.array([-3.0, -0.1, 0.5, 4.0])
    s = noise_power(w, b)
    assert np.all(s[:2] == 0)
    np.testing.assert_allclose(s[2:], 2 * spectral_density(w[2:], b.spectral))


@given(st.floats(0.05, 30.0), st.floats(0.1, 5.0), st.floats(0.2, 1.0))
def test_detailed_balance(w, beta, s):
    b = BathSpec(SpectralParams(0.1, s, 20.0), beta=beta)
    pos, neg = noise_power(np.array([w, -w]), b)
    assert neg == pytest.approx(math.exp(-beta * w) * pos, rel=1e-10)


def test_correlation_at_origin():
    b = BathSpec(SpectralParams(0.1, 0.5, 20.0))
    c0 = correlation_oracle(0.0, b)
    assert c0.imag == 0
    assert c0.real == pytest.approx(35.4491, abs=1e-4)
    assert c0.real == pytest.approx(40 * gamma(1.5), rel=1e-10)


@given(st.floats(0.0, 200.0), st.floats(0.2, 1.0))
def test_correlation_matches_closed_form(t, s):
    p = SpectralParams(0.1, s, 20.0)
    c = correlation_oracle(t, BathSpec(p))
    assert abs(c - closed_form_zero_t(t, p)) <= 1e-9 * abs(closed_form_zero_t(0, p))


@given(st.floats(0.01, 20.0))
def test_correlation_time_reversal(t):
    b = BathSpec(SpectralParams(0.1, 0.5, 20.0), beta=2.0)
    assert correlation_oracle(-t, b) == pytest.approx(np.conj(correlation_oracle(t, b)), rel=1e-12)


def test_finite_temperature_origin_against_plain_quadrature():
    p = SpectralParams(0.05, 0.75, 20.0)
    beta = 3.0
    ref, _ = integrate.quad(lambda w: (2 / np.pi) * spectral_density(np.array([w]), p)[0] / math.tanh(beta * w / 2),
                            0, np.inf, epsabs=0, epsrel=1e-12, limit=500)
    assert correlation_oracle(0.0, BathSpec(p, beta)).real == pytest.approx(ref, rel=1e-9)


def test_zero_coupling_gives_zero_correlation():
    b = BathSpec(SpectralParams(0.0, 0.5, 20.0))
    np.testing.assert_array_equal(correlation_series([0.0, 1.0], b), [0, 0])


def test_frequency_grid():
    g = frequency_grid(SpectralParams(0.1, 0.5, 20.0))
    assert g.spacing_kind == "composite"
    assert len(g) >= 500
    np.testing.assert_allclose(g.points, -g.points[::-1])
    with pytest.raises(ValueError):
        frequency_grid(SpectralParams(0.1, 0.5, 20.0), n=100)


def test_sample_grid_validation():
    with pytest.raises(ValueError):
        SampleGrid(np.array([0.0, 0.0, 1.0]), "uniform")
    with pytest.raises(ValueError):
        SampleGrid(np.array([0.0, 1.0]), "random")
