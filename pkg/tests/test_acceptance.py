"""Acceptance criteria, one test each.

Every test stores a PASS/FAIL line in ``conftest.ACCEPTANCE`` (printed in the
pytest terminal summary) before asserting. Run as a script to print the lines
directly: ``python tests/test_acceptance.py``.
"""

import math

import numpy as np
import pytest

from fpheom import (BathSpec, MemoryKernelSeries, ModeSet, PropagatorConfig, SpectralParams, SpinSystem,
                    correlation_series, extract_kernel, gme_forward, hierarchy_size, niba_kernel,
                    observe_population, pair_interaction, propagate, reconstruct_correlation,
                    redfield_plus_propagate, redfield_propagate)
from fpheom.gme import asymptotic_rates

from conftest import ACCEPTANCE, PLUS, UNBIASED, certified_modes, heom_run, matched_config, redfield_plus_run

STABILITY_BOUND = 1.5


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    assert ok, detail


def sign_changes(k):
    return int(np.sum(np.diff(np.sign(k)) != 0))


def niba(alpha, s, t):
    return niba_kernel(t, UNBIASED, BathSpec(SpectralParams(alpha, s, 20.0)))


def test_criterion_1_decomposition_certified():
    m = certified_modes(0.1, 0.5)
    # independent check on a uniform grid not used by the certifier
    t = np.linspace(0, 20, 2001)
    c = correlation_series(t, BathSpec(SpectralParams(0.1, 0.5, 20.0)))
    res = np.max(np.abs(reconstruct_correlation(m, t) - c)) / abs(c[0])
    ok = m.certified and m.certified_residual <= 1e-3 and res <= 1e-3
    record(1, ok, f"K={m.K}, certified residual {m.certified_residual:.2e}, uniform-grid residual {res:.2e} (<= 1e-3)")


def test_criterion_2_closed_system_limit():
    free = ModeSet()
    cfg = PropagatorConfig(0.005, 10.0, 2)
    errs = {}
    for L in (1, 3):
        tr = propagate(PLUS, UNBIASED, free, cfg, L)
        errs[f"heom L={L}"] = np.max(np.abs(tr.population - np.cos(2 * tr.times)))
    for name, solver in (("redfield_plus", redfield_plus_propagate), ("redfield", redfield_propagate)):
        tr = solver(PLUS, UNBIASED, free, cfg)
        errs[name] = np.max(np.abs(tr.population - np.cos(2 * tr.times)))
    t = np.arange(2001) * 0.005
    k = niba(0.0, 0.5, t)
    p = gme_forward(MemoryKernelSeries(t, k), 1.0)
    errs["niba gme"] = np.max(np.abs(p.values - np.cos(2 * t)))
    worst = max(errs.values())
    record(2, worst <= 1e-6, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + " (<= 1e-6)")


def test_criterion_3_first_tier_equals_redfield_plus():
    m = certified_modes(0.1, 0.5)
    cfg = matched_config(m, 20.0)
    a = propagate(PLUS, UNBIASED, m, cfg, 1).population
    b = redfield_plus_propagate(PLUS, UNBIASED, m, cfg).population
    err = np.max(np.abs(a - b))
    record(3, err <= 1e-4, f"max|P_L1 - P_redfield_plus| on [0, 20] = {err:.2e} (<= 1e-4), dt={cfg.dt:.3e}")


def test_criterion_4_tier_convergence():
    levels = (1, 2, 3, 4)
    pops = {L: heom_run(0.1, 0.5, L).population for L in levels}
    gaps = {L: np.max(np.abs(pops[L] - pops[L + 2])) for L in levels if L + 2 in pops}
    peaks = {L: np.max(np.abs(p)) for L, p in pops.items()}
    decreasing = all(gaps[a] > gaps[b] for a, b in zip(list(gaps), list(gaps)[1:]))
    below = min(gaps.values()) < 1e-3
    K = certified_modes(0.1, 0.5).K
    detail = (f"K={K}; max|P_L - P_L+2|: " + ", ".join(f"L={L} {g:.2e}" for L, g in gaps.items())
              + "; max|P_L|: " + ", ".join(f"L={L} {p:.2f}" for L, p in peaks.items())
              + f"; unbounded (|P| > {STABILITY_BOUND}) tiers: "
              + str([L for L, p in peaks.items() if p > STABILITY_BOUND])
              + f"; L=12 would need {hierarchy_size(K, 12):.2e} ADOs")
    record(4, decreasing and below, detail)


def test_criterion_5_redfield_plus_validity_window():
    parts = []
    ref75 = heom_run(0.05, 0.75, 4).population
    gap75 = np.max(np.abs(heom_run(0.05, 0.75, 3).population - ref75))
    rp75 = np.max(np.abs(redfield_plus_run(0.05, 0.75).population - ref75))
    ok75 = rp75 <= 0.05 and np.max(np.abs(ref75)) <= STABILITY_BOUND
    parts.append(f"s=0.75: |RP - L4| = {rp75:.3f} (<= 0.05), |L3 - L4| = {gap75:.1e}")
    peaks25 = {L: np.max(np.abs(heom_run(0.05, 0.25, L).population)) for L in (2, 3)}
    stable25 = all(p <= STABILITY_BOUND for p in peaks25.values())
    if stable25:
        rp25 = np.max(np.abs(redfield_plus_run(0.05, 0.25).population - heom_run(0.05, 0.25, 3).population))
        ok25 = rp25 > 0.05
        parts.append(f"s=0.25: |RP - L3| = {rp25:.3f} (> 0.05)")
    else:
        ok25 = False
        parts.append("s=0.25: no converged reference, max|P_L| " +
                     ", ".join(f"L={L} {p:.1f}" for L, p in peaks25.items()))
    record(5, ok75 and ok25, "; ".join(parts))


def test_criterion_6_niba_anchors():
    t = np.linspace(0, 5, 501)
    k0 = float(niba(0.05, 0.5, np.array([0.0]))[0])
    tt = np.linspace(0, 10, 101)
    q = pair_interaction(tt, BathSpec(SpectralParams(0.05, 1.0, 20.0)))
    ohmic = max(np.max(np.abs(q.q_real - 0.1 * np.log1p(400 * tt ** 2))),
                np.max(np.abs(q.q_imag - 0.2 * np.arctan(20 * tt))))
    k75 = niba(0.05, 0.75, t)
    k25 = niba(0.05, 0.25, t)
    shape75 = bool(np.all(k75 > 0) and np.all(np.diff(k75) < 0))
    n25 = sign_changes(k25)
    ok = k0 == 4.0 and ohmic <= 1e-8 and shape75 and n25 > 0
    record(6, ok, f"K(0)={k0!r}, s=1 closed-form error {ohmic:.1e}, s=0.75 positive+decreasing={shape75}, "
                  f"s=0.25 sign changes on [0, 5] = {n25}")


def test_criterion_7_extraction_round_trip():
    kernels = {"constant": lambda t: np.full_like(t, 4.0), "exp": lambda t: np.exp(-t),
               "damped_cos": lambda t: np.exp(-t) * np.cos(3 * t)}
    parts, ok = [], True
    for name, f in kernels.items():
        errs = []
        for h in (0.02, 0.01):
            t = np.arange(int(round(5.0 / h)) + 1) * h
            k = f(t)
            out = extract_kernel(gme_forward(MemoryKernelSeries(t, k), 1.0), method="derivative")
            errs.append(np.max(np.abs(out.values - k)))
        ratio = errs[0] / errs[1]
        const = errs[1] / 0.01 ** 2
        ok &= 2.8 <= ratio <= 5.2 and const < 10
        parts.append(f"{name}: err {errs[0]:.1e} -> {errs[1]:.1e}, ratio {ratio:.2f}, C={const:.2f}")
    record(7, ok, "; ".join(parts) + " (ratio 4 +-30%)")


def test_criterion_8_exact_kernel_shapes():
    parts = []
    kern75 = extract_kernel(observe_population(heom_run(0.05, 0.75, 4)), method="second_kind")
    v = kern75.values
    window = kern75.times <= 10.0
    positive = bool(np.all(v[window] > 0))
    monotone = bool(np.all(np.diff(v[window]) < 0))
    parts.append(f"s=0.75 (L=4): positive={positive}, monotone={monotone}, K(0)={v[0]:.4f}")
    rates75 = asymptotic_rates(kern75)
    k75 = rates75.k
    parts.append(f"k(0.75)={k75:.3f}" if k75 is not None else "k(0.75) divergent")

    t = kern75.times
    n_niba = sign_changes(niba(0.05, 0.25, t))
    peaks25 = {L: np.max(np.abs(heom_run(0.05, 0.25, L).population)) for L in (2, 3)}
    if all(p <= STABILITY_BOUND for p in peaks25.values()):
        kern25 = extract_kernel(observe_population(heom_run(0.05, 0.25, 3)), method="second_kind")
        n_exact = sign_changes(kern25.values)
        k25 = asymptotic_rates(kern25).k
        fewer = n_exact <= n_niba
        ordered = k25 is not None and k75 is not None and k25 < k75
        parts.append(f"s=0.25: N_exact={n_exact}, N_NIBA={n_niba}, k(0.25)={k25}")
    else:
        fewer = ordered = False
        parts.append(f"s=0.25: N_NIBA={n_niba}; no stable FP-HEOM reference (max|P_L| "
                     + ", ".join(f"L={L} {p:.1f}" for L, p in peaks25.items())
                     + "), zero-crossing count and k ordering not assessable")
    record(8, positive and monotone and fewer and ordered, "; ".join(parts))


def test_criterion_9_structural_invariants():
    modes = ModeSet.from_arrays([0.3 - 0.1j, 0.2 + 0.05j, 0.15 + 0.1j], [0.6 + 1.8j, 1.5 - 0.7j, 3.0 + 0.5j])
    system = SpinSystem(0.3, 1.0)
    rho0 = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    cfg = PropagatorConfig(0.01, 2.0, 10)
    tr = propagate(rho0, system, modes, cfg, 4, keep_states=True)
    trace = float(np.max(tr.trace_error))
    herm = tr.hermiticity_error
    sym = max(s.symmetry_error() for s in tr.states)
    gauge = float(np.max(np.abs(propagate(rho0, system, modes, cfg, 4, sqrt_signs=[-1, 1, -1]).rho - tr.rho)))
    final = lambda dt: propagate(rho0, system, modes, PropagatorConfig(dt, 1.8, 1), 4).rho[-1]
    ref = final(0.00375)
    e1 = np.max(np.abs(final(0.03) - ref))
    e2 = np.max(np.abs(final(0.015) - ref))
    order = math.log2(e1 / e2)
    ok = trace < 1e-12 and herm < 1e-12 and sym < 1e-12 and gauge < 1e-12 and 3.5 <= order <= 4.5
    record(9, ok, f"K=3, L=4: trace {trace:.1e}, hermiticity {herm:.1e}, ADO symmetry {sym:.1e}, "
                  f"gauge {gauge:.1e} (< 1e-12); RK4 observed order {order:.2f} (4 +- 0.5)")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}")
