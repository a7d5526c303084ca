import numpy as np
import pytest
from hypothesis import given, strategies as st

from fpheom import (InteractionPictureCache, ModeSet, PropagatorConfig, SpinSystem, propagate,
                    redfield_plus_propagate, redfield_propagate)
from fpheom.bath import SIGMA_Z

from conftest import PLUS, UNBIASED, heom_run, redfield_plus_run

ONE_MODE = ModeSet.from_arrays([0.5 + 0.2j], [1.5 + 2.0j])
TWO_MODES = ModeSet.from_arrays([0.3 - 0.1j, 0.2 + 0.05j], [0.6 + 1.8j, 1.5 - 0.7j])


@pytest.mark.parametrize("solver", [redfield_plus_propagate, redfield_propagate])
def test_free_dynamics(solver):
    tr = solver(PLUS, UNBIASED, ModeSet(), PropagatorConfig(0.01, 5.0, 10))
    np.testing.assert_allclose(tr.population, np.cos(2 * tr.times), atol=1e-10)


def test_interaction_picture_cache():
    system = SpinSystem(0.3, 1.1)
    cache = InteractionPictureCache.build(system, ONE_MODE, np.array([0.0, 0.7]))
    np.testing.assert_allclose(cache.q[0], SIGMA_Z, atol=1e-14)
    u = cache.propagator(0.7)
    np.testing.assert_allclose(cache.q[1], u.conj().T @ SIGMA_Z @ u, atol=1e-13)
    np.testing.assert_allclose(cache.corr, ONE_MODE.amplitudes[0] * np.exp(-ONE_MODE.rates[0] * cache.times))


def test_first_tier_hierarchy_equals_redfield_plus():
    cfg = PropagatorConfig(0.005, 6.0, 10)
    system = SpinSystem(0.2, 1.0)
    a = propagate(PLUS, system, TWO_MODES, cfg, 1)
    b = redfield_plus_propagate(PLUS, system, TWO_MODES, cfg)
    assert np.max(np.abs(a.rho - b.rho)) < 1e-5


@given(st.floats(-1, 1), st.floats(0.2, 1.5))
def test_trace_and_hermiticity(eps, delta):
    cfg = PropagatorConfig(0.02, 2.0, 5)
    for solver in (redfield_plus_propagate, redfield_propagate):
        tr = solver(PLUS, SpinSystem(eps, delta), TWO_MODES, cfg)
        assert np.max(tr.trace_error) < 1e-12
        assert tr.hermiticity_error < 1e-12


def test_time_local_and_memory_forms_agree_at_short_times():
    # rho_I(s) -> rho_I(t) inside the memory costs O(alpha t^3)
    cfg = PropagatorConfig(0.0005, 0.4, 1)
    a = redfield_plus_propagate(PLUS, UNBIASED, ONE_MODE, cfg)
    b = redfield_propagate(PLUS, UNBIASED, ONE_MODE, cfg)
    diff = np.abs(a.population - b.population)
    checks = [int(round(t / 0.0005)) for t in (0.1, 0.2, 0.4)]
    d = diff[checks]
    assert d[0] < 1e-6
    assert d[1] / d[0] > 8 and d[2] / d[1] > 8


def test_redfield_plus_error_is_second_order_in_coupling():
    # error against the converged hierarchy on [0, 2] at s = 0.75
    n = int(round(2.0 / 0.01)) + 1
    errs = []
    for alpha in (0.05, 0.025):
        ref = heom_run(alpha, 0.75, 4, 10.0 if alpha == 0.05 else 2.0).population[:n]
        rp = redfield_plus_run(alpha, 0.75, 10.0 if alpha == 0.05 else 2.0).population[:n]
        errs.append(np.max(np.abs(ref - rp)))
    ratio = errs[0] / errs[1]
    assert 2.0 <= ratio <= 6.0, (errs, ratio)


def test_rejects_fast_modes():
    with pytest.raises(ValueError):
        redfield_plus_propagate(PLUS, UNBIASED, ModeSet.from_arrays([1.0], [100.0]), PropagatorConfig(0.01, 1.0))
