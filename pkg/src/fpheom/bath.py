"""Spin-boson system parameters, the sub-Ohmic spectral density and bath correlations.

Zero temperature is represented by ``beta = math.inf`` throughout; a large finite
``beta`` is never substituted for it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (estimated error {error_estimate:.3e})")
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class SpinSystem:
    """Two-level system ``H_s = epsilon * sigma_z + delta * sigma_x`` coupled through sigma_z."""

    epsilon: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and math.isfinite(self.delta)):
            raise ValueError("epsilon and delta must be finite")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.epsilon * SIGMA_Z + self.delta * SIGMA_X

    @property
    def coupling_operator(self) -> np.ndarray:
        return SIGMA_Z


@dataclass(frozen=True)
class SpectralParams:
    alpha: float
    s: float
    omega_c: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.omega_c > 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")
        if not 0 <= self.s <= 1:
            raise ValueError(f"s must lie in [0, 1], got {self.s}")


@dataclass(frozen=True)
class BathSpec:
    spectral: SpectralParams
    beta: float = math.inf

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"inverse temperature must be > 0 or inf, got {self.beta}")

    @classmethod
    def from_temperature(cls, spectral: SpectralParams, temperature: float) -> "BathSpec":
        if temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {temperature}")
        return cls(spectral, math.inf if temperature == 0 else 1.0 / temperature)

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)


@dataclass(frozen=True)
class SampleGrid:
    points: np.ndarray
    spacing_kind: str = "composite"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("grid must be a nonempty 1-D array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if self.spacing_kind not in ("uniform", "logarithmic", "composite"):
            raise ValueError(f"unknown spacing kind {self.spacing_kind!r}")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.size


def spectral_density(omega, p: SpectralParams):
    """J(w) = (pi/2) alpha w_c^(1-s) w^s exp(-w/w_c), defined for w >= 0."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral density is defined for omega >= 0 only")
    with np.errstate(divide="ignore", invalid="ignore"):
        powered = np.where(w > 0, w ** p.s, 1.0 if p.s == 0 else 0.0)
    out = 0.5 * math.pi * p.alpha * p.omega_c ** (1 - p.s) * powered * np.exp(-w / p.omega_c)
    return out if out.ndim else float(out)


def noise_power(omega, b: BathSpec):
    """Noise power S(w) = 2 [n(w) + 1] J(|w|) extended to negative frequencies.

    At zero temperature S vanishes identically for w <= 0.
    """
    w = np.asarray(omega, dtype=float)
    j = spectral_density(np.abs(w), b.spectral)
    if b.zero_temperature:
        out = np.where(w > 0, 2.0 * j, 0.0)
    else:
        x = b.beta * w
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            # 2 (n + 1) = 2 / (1 - exp(-x)), times the odd extension sign(w) J(|w|)
            factor = 2.0 / -np.expm1(-x)
            out = np.where(w != 0, factor * np.sign(w) * j, 0.0)
        sp = b.spectral
        # w -> 0 limit of 2 J(w) / (beta w)
        if sp.alpha == 0:
            origin = 0.0
        elif sp.s < 1:
            origin = math.inf
        else:
            origin = math.pi * sp.alpha / b.beta
        out = np.where(w == 0, origin, out)
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def _checked_quad(func, a, b, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(func, a, b, full_output=1, **kwargs)
    value, abserr = res[0], res[1]
    if len(res) > 3:
        raise QuadratureError(f"quadrature on [{a}, {b}] failed: {res[3]}", abserr)
    return value, abserr


def _cutoff_frequency(p: SpectralParams) -> float:
    # beyond 60 omega_c the integrand is below 1e-24 of its peak
    return 60.0 * p.omega_c


def correlation_oracle(t, b: BathSpec, quad_tol: float = 1e-10) -> complex:
    """Bath correlation C(t) = (1/pi) int S(w) exp(-i w t) dw by adaptive quadrature.

    Written in one-sided form, C(t) = (2/pi) int_0^inf J(w) [coth(beta w / 2) cos(wt)
    - i sin(wt)] dw. The low-frequency panel [0, a] with a = 1/max(|t|, 1/w_c) carries
    the w^s endpoint singularity through an algebraic weight; the remainder uses an
    oscillatory (Clenshaw-Curtis moment) rule.
    """
    if quad_tol <= 0:
        raise ValueError("quad_tol must be positive")
    p = b.spectral
    if p.alpha == 0:
        return 0j
    t = float(t)
    at = abs(t)
    a = 1.0 / max(at, 1.0 / p.omega_c)
    w_max = _cutoff_frequency(p)
    pref = p.alpha * p.omega_c ** (1 - p.s)  # (2/pi) * (pi/2) alpha w_c^(1-s)

    if b.zero_temperature:
        power = p.s

        def smooth(w):
            return math.exp(-w / p.omega_c)

        def full(w):
            return w ** p.s * math.exp(-w / p.omega_c)
    else:
        if p.s == 0:
            raise ValueError("finite-temperature correlation diverges for s = 0")
        power = p.s - 1.0
        beta = b.beta

        def coth_times_w(w):
            x = 0.5 * beta * w
            return w / math.tanh(x) if x > 1e-8 else 2.0 / beta + w * x / 3.0

        def smooth(w):
            return coth_times_w(w) * math.exp(-w / p.omega_c)

        def full(w):
            return w ** power * coth_times_w(w) * math.exp(-w / p.omega_c)

    def smooth_sin(w):
        return math.exp(-w / p.omega_c)

    opts = dict(epsabs=0.0, epsrel=quad_tol, limit=400)
    # real (cosine) part
    lo_re, _ = _checked_quad(lambda w: smooth(w) * math.cos(w * at), 0.0, a,
                             weight="alg", wvar=(power, 0.0), **opts)
    if at == 0:
        hi_re, _ = _checked_quad(full, a, w_max, **opts)
    else:
        hi_re, _ = _checked_quad(full, a, w_max, weight="cos", wvar=at, **opts)
    # imaginary (sine) part: J(w) sin(wt), temperature independent
    if at == 0:
        im = 0.0
    else:
        lo_im, _ = _checked_quad(lambda w: smooth_sin(w) * math.sin(w * at), 0.0, a,
                                 weight="alg", wvar=(p.s, 0.0), **opts)
        hi_im, _ = _checked_quad(lambda w: w ** p.s * smooth_sin(w), a, w_max,
                                 weight="sin", wvar=at, **opts)
        im = lo_im + hi_im
    sign = 1.0 if t >= 0 else -1.0
    return complex(pref * (lo_re + hi_re), -sign * pref * im)


def correlation_series(times, b: BathSpec, quad_tol: float = 1e-10) -> np.ndarray:
    return np.array([correlation_oracle(t, b, quad_tol) for t in np.asarray(times, float)])


def frequency_grid(p: SpectralParams, n: int = 500, lo: float = 1e-4, hi: float = 1e2) -> SampleGrid:
    """Symmetric fitting grid: +-logspace(lo*w_c, hi*w_c, n) plus the origin."""
    if n < 500:
        raise ValueError("the fitting grid needs at least 500 points per half-axis")
    pos = np.logspace(math.log10(lo * p.omega_c), math.log10(hi * p.omega_c), n)
    return SampleGrid(np.concatenate([-pos[::-1], [0.0], pos]), "composite")
