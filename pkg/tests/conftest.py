import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fpheom import (BathSpec, SpectralParams, SpinSystem, decompose, default_time_step, propagate,
                    redfield_plus_propagate)
from fpheom.experiment import sampled_config

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

UNBIASED = SpinSystem(0.0, 1.0)
PLUS = np.diag([1.0, 0.0]).astype(complex)


@functools.lru_cache(maxsize=None)
def certified_modes(alpha, s, omega_c=20.0, tol=1e-3):
    return decompose(BathSpec(SpectralParams(alpha, s, omega_c)), tol, 20.0)


def matched_config(modes, t_final, sample_dt=0.01):
    return sampled_config(default_time_step(UNBIASED, modes), sample_dt, t_final)


@functools.lru_cache(maxsize=None)
def heom_run(alpha, s, L, t_final=10.0):
    """Unbiased FP-HEOM trajectory from |+><+| at the default step, shared across tests."""
    modes = certified_modes(alpha, s)
    return propagate(PLUS, UNBIASED, modes, matched_config(modes, t_final), L)


@functools.lru_cache(maxsize=None)
def redfield_plus_run(alpha, s, t_final=10.0):
    modes = certified_modes(alpha, s)
    return redfield_plus_propagate(PLUS, UNBIASED, modes, matched_config(modes, t_final))


@pytest.fixture(scope="session")
def fig1_modes():
    return certified_modes(0.1, 0.5)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}")
