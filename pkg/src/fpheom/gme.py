"""Generalized master equation for populations: forward solve, kernel inversion, rates.

All routines share one discretization of the memory integral, the trapezoid rule

    I_i = h * (K_i P_0 / 2 + sum_{0<j<i} K_{i-j} P_j + K_0 P_i / 2),

so that ``dP/dt (t_i) = -I_i``. Kernels may be scalars (unbiased case, P = <sigma_z>)
or 2x2 matrices acting on the population vector (P_+, P_-).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .csvio import write_csv

# one-sided 4th-order stencils (offsets 0..4 and 0..5)
_D1_FORWARD = np.array([-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -1.0 / 4.0])
_D1_CENTRAL = np.array([1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0])
_D2_CENTRAL = np.array([-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0])
_D2_FORWARD = np.array([15.0 / 4.0, -77.0 / 6.0, 107.0 / 6.0, -13.0, 61.0 / 12.0, -5.0 / 6.0])


class IllPosedExtraction(ValueError):
    pass


def _uniform_spacing(times) -> float:
    t = np.asarray(times, dtype=float)
    if t.size < 2:
        raise ValueError("need at least two time points")
    h = t[1] - t[0]
    if abs(t[0]) > 1e-12 * max(1.0, abs(h)):
        raise ValueError("time grid must start at 0")
    if np.max(np.abs(np.diff(t) - h)) > 1e-9 * max(1.0, abs(h)):
        raise ValueError("time grid must be uniform")
    return float(h)


@dataclass
class PopulationSeries:
    times: np.ndarray
    values: np.ndarray
    imag_residual: float = 0.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)

    @property
    def h(self) -> float:
        return _uniform_spacing(self.times)

    def to_csv(self, path):
        return write_csv(path, {"t": self.times, "P": self.values})


@dataclass
class MemoryKernelSeries:
    times: np.ndarray
    values: np.ndarray  # (n,) scalar kernel or (n, 2, 2)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values)

    @property
    def h(self) -> float:
        return _uniform_spacing(self.times)

    @property
    def is_matrix(self) -> bool:
        return self.values.ndim == 3

    def to_csv(self, path, name: str = "K"):
        if self.is_matrix:
            v = self.values.real
            cols = {"t": self.times, "K_pp": v[:, 0, 0], "K_pm": v[:, 0, 1],
                    "K_mp": v[:, 1, 0], "K_mm": v[:, 1, 1]}
        else:
            cols = {"t": self.times, name: self.values.real}
        return write_csv(path, cols)


@dataclass
class RateMatrix:
    k: float | np.ndarray | None
    horizon: float
    tail_exponent: float
    tail_estimate: float
    converged: bool
    integrable: bool

    def to_json(self) -> dict:
        k = self.k
        if isinstance(k, np.ndarray):
            k = k.tolist()
        return {"k": k, "horizon": self.horizon, "tail_exponent": self.tail_exponent,
                "converged": self.converged}


def _as_matrices(values):
    v = np.asarray(values)
    return v.reshape(v.shape[0], 1, 1) if v.ndim == 1 else v


def _history(kmat, pmat, i):
    """h-free trapezoid sum without the K_i P_0 / 2 term."""
    acc = np.zeros(pmat.shape[1:], dtype=np.result_type(kmat, pmat))
    if i >= 2:
        # sum_{j=1}^{i-1} K_{i-j} P_j
        acc = np.einsum("jab,jbc->ac", kmat[i - 1:0:-1], pmat[1:i])
    return acc + 0.5 * kmat[0] @ pmat[i]


def gme_forward(kernel: MemoryKernelSeries, P0, t_final: float | None = None,
                extrapolate: bool = True) -> PopulationSeries:
    """Solve dP/dt = -int_0^t K(t - s) P(s) ds with Heun (RK2) outer steps.

    ``P0`` is a scalar for a scalar kernel and a length-2 vector (P_+, P_-) for a
    matrix kernel; the returned series then carries P = P_+ - P_-.

    With ``extrapolate`` the Heun solutions at steps h and h/2 (kernel values at
    midpoints from a cubic spline) are Richardson-combined. A plain second-order
    solution has dP/dt(0) = O(h^2) instead of 0, which kernel inversion turns into
    an O(h) artefact; the combination removes it.
    """
    h = kernel.h
    n_avail = kernel.times.size - 1
    n = n_avail if t_final is None else int(round(t_final / h))
    if t_final is not None and n > n_avail:
        raise ValueError(f"kernel grid ends at {kernel.times[-1]:g} < t_final={t_final:g}")
    kmat = _as_matrices(kernel.values)[: n + 1]
    p0 = np.atleast_1d(np.asarray(P0, dtype=float)).reshape(kmat.shape[1], 1)
    p = _solve_forward(kmat, p0, h, n)
    if extrapolate:
        fine_t = np.arange(2 * n + 1) * (h / 2)
        fine_k = CubicSpline(kernel.times[: n + 1], kmat, axis=0)(fine_t)
        fine_k[::2] = kmat
        p_half = _solve_forward(fine_k, p0, h / 2, 2 * n)
        p = (4.0 * p_half[::2] - p) / 3.0
    if kernel.is_matrix:
        values = (p[:, 0, 0] - p[:, 1, 0]).real
    else:
        values = p[:, 0, 0].real
    return PopulationSeries(np.arange(n + 1) * h, values)


def _solve_forward(kmat, p0, h, n):
    p = np.zeros((n + 1,) + p0.shape, dtype=np.result_type(kmat, p0))
    p[0] = p0
    f_i = np.zeros_like(p0, dtype=p.dtype)
    for i in range(n):
        pred = p[i] - h * f_i
        p[i + 1] = pred
        f_next = h * (0.5 * kmat[i + 1] @ p[0] + _history(kmat, p, i + 1))
        p[i + 1] = p[i] - 0.5 * h * (f_i + f_next)
        # memory integral at t_{i+1} re-evaluated with the corrected value
        f_i = h * (0.5 * kmat[i + 1] @ p[0] + _history(kmat, p, i + 1))
    return p


def time_derivative(values, h: float) -> np.ndarray:
    """4th-order finite differences (one-sided at the two boundary points)."""
    y = np.asarray(values)
    n = y.shape[0]
    if n < 6:
        raise ValueError("need at least 6 samples for 4th-order differences")
    out = np.empty_like(y, dtype=np.result_type(y, float))
    out[2:-2] = (y[:-4] * _D1_CENTRAL[0] + y[1:-3] * _D1_CENTRAL[1]
                 + y[3:-1] * _D1_CENTRAL[3] + y[4:] * _D1_CENTRAL[4])
    for i in (0, 1):
        out[i] = np.tensordot(_D1_FORWARD, y[i:i + 5], axes=1)
        out[n - 1 - i] = -np.tensordot(_D1_FORWARD, y[n - 1 - i - np.arange(5)], axes=1)
    return out / h


def second_derivative_at_origin(values, h: float):
    y = np.asarray(values)
    return np.tensordot(_D2_FORWARD, y[:6], axes=1) / h ** 2


def second_derivative(values, h: float) -> np.ndarray:
    """4th-order second differences (one-sided 6-point stencils at the boundaries)."""
    y = np.asarray(values)
    n = y.shape[0]
    if n < 6:
        raise ValueError("need at least 6 samples for 4th-order differences")
    out = np.empty_like(y, dtype=np.result_type(y, float))
    out[2:-2] = (y[:-4] * _D2_CENTRAL[0] + y[1:-3] * _D2_CENTRAL[1] + y[2:-2] * _D2_CENTRAL[2]
                 + y[3:-1] * _D2_CENTRAL[3] + y[4:] * _D2_CENTRAL[4])
    for i in (0, 1):
        out[i] = np.tensordot(_D2_FORWARD, y[i:i + 6], axes=1)
        out[n - 1 - i] = np.tensordot(_D2_FORWARD, y[n - 1 - i - np.arange(6)], axes=1)
    return out / h ** 2


def _solve_second_kind(pddot, pdot, pmat, h):
    # K_i (P_0 + h/2 P'_0) = -P''_i - h (sum_{0<j<i} K_{i-j} P'_j + K_0 P'_i / 2)
    n = pmat.shape[0] - 1
    kmat = np.zeros((n + 1,) + pmat.shape[1:], dtype=np.result_type(pddot, pmat))
    kmat[0] = -pddot[0] @ np.linalg.inv(pmat[0])
    lead = np.linalg.inv(pmat[0] + 0.5 * h * pdot[0])
    for i in range(1, n + 1):
        kmat[i] = (-pddot[i] - h * _history(kmat, pdot, i)) @ lead
    return kmat


def _solve_volterra(pdot, pmat, h, k0):
    n = pmat.shape[0] - 1
    p0_inv = np.linalg.inv(pmat[0])
    kmat = np.zeros((n + 1,) + k0.shape, dtype=np.result_type(pdot, pmat, k0))
    kmat[0] = k0
    for i in range(1, n + 1):
        rhs = -pdot[i] / h - _history(kmat, pmat, i)
        kmat[i] = 2.0 * rhs @ p0_inv
    return kmat


def _check_conditioning(p0, series_max):
    if abs(np.linalg.det(np.atleast_2d(p0))) <= 1e-10 * max(series_max, 1e-300):
        raise IllPosedExtraction(
            "initial population is (nearly) zero; the triangular system is singular. "
            "Use extract_kernel_matrix with the two trajectories P(0) = +1 and P(0) = -1.")


def extract_kernel(P: PopulationSeries, method: str = "derivative",
                   k0: float | None = None) -> MemoryKernelSeries:
    """Invert dP/dt = -int K(t - s) P(s) ds for the scalar kernel on the grid of ``P``.

    ``method="derivative"`` takes dP/dt from 4th-order differences and K(0) from
    P''(0) = -K(0) P(0). ``method="scheme"`` inverts the plain Heun/trapezoid
    recursion of ``gme_forward(..., extrapolate=False)`` step by step; it needs
    ``k0`` because the recursion only fixes K(0) + K(h) at the first step.
    ``method="second_kind"`` differentiates once more, K(t) P(0) = -P''(t) - int K(s) P'(t - s) ds,
    a second-kind equation whose trapezoid solve has no odd-even parasitic mode.
    """
    h = P.h
    y = P.values
    _check_conditioning(y[0], np.max(np.abs(y)))
    if method == "derivative":
        if k0 is None:
            k0 = -second_derivative_at_origin(y, h) / y[0]
        pdot = time_derivative(y, h)
        kmat = _solve_volterra(pdot.reshape(-1, 1, 1), y.reshape(-1, 1, 1), h,
                               np.array([[k0]], dtype=float))
        return MemoryKernelSeries(P.times, kmat[:, 0, 0].real)
    if method == "second_kind":
        kmat = _solve_second_kind(second_derivative(y, h).reshape(-1, 1, 1),
                                  time_derivative(y, h).reshape(-1, 1, 1), y.reshape(-1, 1, 1), h)
        return MemoryKernelSeries(P.times, kmat[:, 0, 0].real)
    if method == "scheme":
        if k0 is None:
            raise ValueError("scheme inversion needs k0")
        return MemoryKernelSeries(P.times, _invert_scheme(y, h, float(k0)))
    raise ValueError(f"unknown method {method!r}")


def _invert_scheme(y, h, k0):
    n = y.size - 1
    p = y.reshape(-1, 1, 1).astype(float)
    kmat = np.zeros((n + 1, 1, 1))
    kmat[0] = k0
    f_i = np.zeros((1, 1))
    for i in range(n):
        # p[i+1] = p[i] - h/2 (f_i + h (K_{i+1} P_0 / 2 + history(P*_{i+1})))
        pred = p[i] - h * f_i
        saved = p[i + 1].copy()
        p[i + 1] = pred
        hist = _history(kmat, p, i + 1)
        p[i + 1] = saved
        target = (p[i] - p[i + 1]) / (0.5 * h) - f_i
        kmat[i + 1] = (target / h - hist) / (0.5 * p[0])
        f_i = h * (0.5 * kmat[i + 1] @ p[0] + _history(kmat, p, i + 1))
    return kmat[:, 0, 0]


def extract_kernel_matrix(from_plus: PopulationSeries, from_minus: PopulationSeries) -> MemoryKernelSeries:
    """2x2 kernel K_{s,s'} from trajectories started in |+> and in |->.

    Each series carries P = <sigma_z>; populations are (1 + P)/2 and (1 - P)/2.
    """
    h = from_plus.h
    if from_minus.values.shape != from_plus.values.shape or abs(from_minus.h - h) > 1e-12:
        raise ValueError("both trajectories must share one grid")
    cols = []
    for series in (from_plus, from_minus):
        cols.append(np.stack([(1 + series.values) / 2, (1 - series.values) / 2], axis=1))
    pmat = np.stack(cols, axis=2)  # (n, sigma, initial condition)
    _check_conditioning(pmat[0], 1.0)
    pdot = time_derivative(pmat, h)
    k0 = -second_derivative_at_origin(pmat, h) @ np.linalg.inv(pmat[0])
    kmat = _solve_volterra(pdot, pmat, h, k0)
    return MemoryKernelSeries(from_plus.times, kmat.real)


def _tail_fit(times, values, decade_bins: int = 10):
    t_end = times[-1]
    sel = times >= t_end / 10.0
    t, v = times[sel], values[sel]
    if t.size < 4 or t[0] <= 0:
        return math.nan, math.nan, False
    edges = np.logspace(math.log10(t[0]), math.log10(t_end), decade_bins + 1)
    centers, env = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (t >= lo) & (t <= hi)
        if np.any(m):
            centers.append(math.sqrt(lo * hi))
            env.append(np.max(np.abs(v[m])))
    env = np.array(env)
    if np.all(env == 0):
        return math.inf, 0.0, True
    if len(env) < 3 or np.any(env <= 0):
        return math.nan, math.nan, False
    slope, intercept = np.polyfit(np.log(centers), np.log(env), 1)
    same_sign = bool(np.all(v >= 0) or np.all(v <= 0))
    return -slope, math.exp(intercept), same_sign


def asymptotic_rates(kernel: MemoryKernelSeries, rel_tol: float = 1e-2) -> RateMatrix:
    """k = int_0^inf K(t) dt: trapezoid over the horizon plus a power-law tail.

    The tail A t^-p is fitted to the envelope of |K| over the final decade. For
    p <= 1 the integral is reported as divergent (``k=None``). The tail integral is
    added when K keeps one sign over that decade and otherwise only bounds the error.
    """
    t = kernel.times
    h = kernel.h
    v = kernel.values.real
    flat = v.reshape(v.shape[0], -1)
    horizon = float(t[-1])
    k_body = h * (flat.sum(axis=0) - 0.5 * (flat[0] + flat[-1]))
    exps, tails, signed = [], [], []
    for col in flat.T:
        p, amp, same_sign = _tail_fit(t, col)
        exps.append(p)
        if math.isinf(p):
            tails.append(0.0)
        elif math.isnan(p) or p <= 1:
            tails.append(math.inf)
        else:
            tails.append(amp * horizon ** (1 - p) / (p - 1))
        signed.append(same_sign and np.isfinite(tails[-1]))
    worst = float(np.nanmin(exps)) if not np.all(np.isnan(exps)) else math.nan
    tail = np.array(tails)
    integrable = bool(np.all(np.isfinite(tail)))
    if not integrable:
        return RateMatrix(None, horizon, worst, math.inf, False, False)
    sign = np.sign(flat[-1])
    k = k_body + np.where(signed, sign * tail, 0.0)
    scale = np.maximum(np.abs(k), 1e-300)
    converged = bool(np.all(tail <= rel_tol * scale) or np.all(tail == 0))
    k_out = float(k[0]) if v.ndim == 1 else k.reshape(v.shape[1:])
    return RateMatrix(k_out, horizon, worst, float(np.max(tail)), converged, True)
