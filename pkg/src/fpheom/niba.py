"""Non-interacting blip approximation for the unbiased spin-boson model.

The pair interaction is Q(t) = Q'(t) + i Q''(t) with

    Q(t) = (8/pi) int_0^inf dw J(w)/w^2 [coth(beta w/2)(1 - cos wt) + i sin wt],

so that Q' = 4 Re W(t) and Q'' = 4 Im W(t) + 4 lambda t, where W is the twice-integrated
bath correlation and lambda = (2/pi) int J(w)/w dw is the reorganization energy (blip
charge 2). For the Ohmic case Q' = 2 alpha ln(1 + w_c^2 t^2), Q'' = 4 alpha arctan(w_c t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import BathSpec, SpinSystem, _checked_quad, _cutoff_frequency


@dataclass(frozen=True)
class PairInteraction:
    times: np.ndarray
    q_real: np.ndarray
    q_imag: np.ndarray

    def __post_init__(self):
        if not (self.times.shape == self.q_real.shape == self.q_imag.shape):
            raise ValueError("times, q_real and q_imag must share a shape")


def _one_minus_cos_over_w2(w, t):
    # 2 sin^2(wt/2) / w^2, finite at w = 0
    if w * t < 1e-4:
        return 0.5 * t * t * (1.0 - (w * t) ** 2 / 12.0)
    return 2.0 * math.sin(0.5 * w * t) ** 2 / (w * w)


def _sin_over_w(w, t):
    x = w * t
    return t * (1.0 - x * x / 6.0) if x < 1e-4 else math.sin(x) / w


def _pair_single(t: float, b: BathSpec, quad_tol: float):
    p = b.spectral
    if t == 0.0 or p.alpha == 0:
        return 0.0, 0.0
    wc = p.omega_c
    pref = 4.0 * p.alpha * wc ** (1 - p.s)  # (8/pi) * (pi/2) alpha w_c^(1-s)
    a = 1.0 / max(t, 1.0 / wc)
    w_max = _cutoff_frequency(p)
    opts = dict(epsabs=0.0, epsrel=quad_tol, limit=400)

    if b.zero_temperature:
        power = p.s

        def thermal(w):
            return 1.0
    else:
        power = p.s - 1.0
        beta = b.beta

        def thermal(w):
            # w coth(beta w / 2), finite at w = 0
            x = 0.5 * beta * w
            return w / math.tanh(x) if x > 1e-8 else 2.0 / beta + w * x / 3.0

    # real part: low panel with the algebraic endpoint weight, high panel split into
    # a plain and a cosine-weighted integral of w^(s-2) e^(-w/w_c)
    lo_re, _ = _checked_quad(lambda w: thermal(w) * _one_minus_cos_over_w2(w, t) * math.exp(-w / wc),
                             0.0, a, weight="alg", wvar=(power, 0.0), **opts)

    def tail(w):
        return w ** (power - 2.0) * thermal(w) * math.exp(-w / wc)

    hi_plain, _ = _checked_quad(tail, a, w_max, **opts)
    hi_cos, _ = _checked_quad(tail, a, w_max, weight="cos", wvar=t, **opts)
    q_re = pref * (lo_re + hi_plain - hi_cos)

    lo_im, _ = _checked_quad(lambda w: _sin_over_w(w, t) * math.exp(-w / wc), 0.0, a,
                             weight="alg", wvar=(p.s - 1.0, 0.0), **opts)
    hi_im, _ = _checked_quad(lambda w: w ** (p.s - 2.0) * math.exp(-w / wc), a, w_max,
                             weight="sin", wvar=t, **opts)
    q_im = pref * (lo_im + hi_im)
    return q_re, q_im


def pair_interaction(t, b: BathSpec, quad_tol: float = 1e-10) -> PairInteraction:
    """Q'(t) and Q''(t) by adaptive quadrature on an array of non-negative times."""
    if quad_tol <= 0:
        raise ValueError("quad_tol must be positive")
    if b.spectral.s <= 0:
        raise ValueError("pair interaction diverges for s <= 0")
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0) or not np.all(np.isfinite(times)):
        raise ValueError("times must be finite and non-negative")
    out = np.array([_pair_single(float(x), b, quad_tol) for x in times]).reshape(-1, 2)
    return PairInteraction(times, out[:, 0], out[:, 1])


def niba_kernel(t, system: SpinSystem, b: BathSpec, quad_tol: float = 1e-10) -> np.ndarray:
    """K(t) = 4 Delta^2 exp(-Q'(t)) cos Q''(t) for the unbiased model."""
    if system.epsilon != 0:
        raise ValueError("NIBA kernel is implemented for the unbiased case (epsilon = 0) only")
    q = pair_interaction(t, b, quad_tol)
    return 4.0 * system.delta ** 2 * np.exp(-q.q_real) * np.cos(q.q_imag)
