"""Barycentric (AAA) rational fits of the noise power and their exponential mode sets.

The pipeline is ``aaa_fit -> poles_and_residues -> modes_from_poles -> certify``.
Closing the Fourier contour in the lower half plane turns a pole ``w_p = W - i g``
with residue ``r`` into the mode ``d = -2i r``, ``z = g + i W`` so that
``C(t) = sum_k d_k exp(-z_k t)`` for ``t >= 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .bath import BathSpec, SampleGrid, correlation_series, frequency_grid, noise_power


class CertificationError(RuntimeError):
    def __init__(self, t_worst: float, residual: float, tolerance: float):
        super().__init__(
            f"mode set fails certification: residual {residual:.3e} at t={t_worst:.4g} "
            f"exceeds tolerance {tolerance:.1e}; refit with a tighter rel_tol or wider sampling"
        )
        self.t_worst = t_worst
        self.residual = residual


@dataclass(frozen=True)
class BarycentricApproximant:
    """r(x) = sum_j w_j f_j / (x - x_j) / sum_j w_j / (x - x_j)."""

    support_points: np.ndarray
    support_values: np.ndarray
    weights: np.ndarray
    max_error: float = 0.0
    converged: bool = True
    error_history: tuple = ()

    def __post_init__(self):
        n = len(self.support_points)
        if n < 1 or len(self.support_values) != n or len(self.weights) != n:
            raise ValueError("support points, values and weights must have equal length >= 1")
        if len(np.unique(self.support_points)) != n:
            raise ValueError("support points must be distinct")

    @property
    def degree(self) -> int:
        return len(self.weights) - 1

    def __call__(self, x):
        x = np.asarray(x)
        xv = np.atleast_1d(x).astype(complex).ravel()
        with np.errstate(divide="ignore", invalid="ignore"):
            cauchy = 1.0 / np.subtract.outer(xv, self.support_points)
            r = (cauchy @ (self.weights * self.support_values)) / (cauchy @ self.weights)
        hit = np.equal.outer(xv, self.support_points)
        rows, cols = np.nonzero(hit)
        r[rows] = self.support_values[cols]
        return r.reshape(x.shape) if x.ndim else complex(r[0])


def _decay_constraints(values, points, order):
    # rows force the O(1/x^0) and O(1/x) terms of r at infinity to vanish
    rows = [values, values * points][:order]
    return np.array(rows)


def aaa_fit(points, values, rel_tol: float = 1e-3, max_degree: int = 60,
            decay_order: int = 0, keep_history: bool = False):
    """Greedy AAA fit of ``values`` sampled at ``points``.

    Each iteration adds the worst-approximated sample (lowest index on ties) as a
    support point and takes the weights from the smallest right singular vector of
    the Loewner matrix. ``decay_order`` of 1 or 2 restricts the weights so that the
    approximant decays like ``1/x`` or ``1/x**2`` at infinity, which keeps the
    contour closure for the Fourier transform free of boundary terms.

    Returns the approximant, or ``(approximant, history)`` when ``keep_history``
    is set; ``history`` lists the approximant after every iteration.
    """
    z = np.asarray(points if not isinstance(points, SampleGrid) else points.points, dtype=float)
    f = np.asarray(values, dtype=complex)
    if z.shape != f.shape or z.ndim != 1:
        raise ValueError("points and values must be 1-D arrays of equal length")
    if z.size < 3:
        raise ValueError("aaa_fit needs at least 3 samples")
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    if decay_order not in (0, 1, 2):
        raise ValueError("decay_order must be 0, 1 or 2")

    scale = np.max(np.abs(f))
    if scale == 0 or np.all(f == f[0]):
        approx = BarycentricApproximant(z[:1], f[:1], np.ones(1, complex), 0.0, True, (0.0,))
        return (approx, [approx]) if keep_history else approx

    free = np.ones(z.size, dtype=bool)
    support: list[int] = []
    cauchy = np.zeros((z.size, 0), dtype=complex)
    r = np.full(z.size, np.mean(f))
    errors: list[float] = []
    history = []
    approx = None
    for _ in range(max_degree + 1):
        j = int(np.argmax(np.abs(f - r)))
        support.append(j)
        free[j] = False
        with np.errstate(divide="ignore"):
            cauchy = np.column_stack([cauchy, 1.0 / (z - z[j])])
        zs, fs = z[support], f[support]
        loewner = f[free, None] * cauchy[free] - cauchy[free] * fs[None, :]
        if decay_order and len(support) > decay_order:
            basis = scipy.linalg.null_space(_decay_constraints(fs, zs, decay_order))
            _, _, vh = np.linalg.svd(loewner @ basis, full_matrices=False)
            w = basis @ vh[-1].conj()
        else:
            _, _, vh = np.linalg.svd(loewner, full_matrices=False)
            w = vh[-1].conj()
        r = f.copy()
        with np.errstate(divide="ignore", invalid="ignore"):
            r[free] = (cauchy[free] @ (w * fs)) / (cauchy[free] @ w)
        err = float(np.max(np.abs(f - r)))
        errors.append(err)
        approx = BarycentricApproximant(zs.copy(), fs.copy(), w, err, err <= rel_tol * scale,
                                        tuple(errors))
        if keep_history:
            history.append(approx)
        if approx.converged:
            break
    return (approx, history) if keep_history else approx


def _pencil_eigs(a: BarycentricApproximant, numerator: bool):
    m = len(a.weights)
    b = np.eye(m + 1, dtype=complex)
    b[0, 0] = 0
    e = np.zeros((m + 1, m + 1), dtype=complex)
    e[0, 1:] = a.weights * a.support_values if numerator else a.weights
    e[1:, 0] = 1
    e[np.arange(1, m + 1), np.arange(1, m + 1)] = a.support_points
    try:
        ev = scipy.linalg.eigvals(e, b)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise RuntimeError(f"pencil eigenvalue solver failed: {exc}") from exc
    return ev[np.isfinite(ev)]


def poles_and_residues(a: BarycentricApproximant, doublet_tol: float = 1e-10,
                       residue_floor: float = 1e-13):
    """Finite poles of the approximant with their residues.

    Poles with ``|r| < residue_floor * max|r|`` and poles lying within
    ``doublet_tol`` of a zero (Froissart doublets) are discarded.
    """
    if not np.any(a.weights):
        raise ValueError("weights are all zero")
    poles = _pencil_eigs(a, numerator=False)
    if poles.size == 0:
        return []
    zeros = _pencil_eigs(a, numerator=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        cauchy = 1.0 / np.subtract.outer(poles, a.support_points)
        num = cauchy @ (a.weights * a.support_values)
        dden = -(cauchy ** 2) @ a.weights
        residues = num / dden
    keep = np.isfinite(residues)
    if zeros.size:
        dist = np.min(np.abs(np.subtract.outer(poles, zeros)), axis=1)
        keep &= dist > doublet_tol
    if np.any(keep):
        keep &= np.abs(residues) >= residue_floor * np.max(np.abs(residues[keep]))
    order = np.lexsort((poles.imag, poles.real))
    return [(complex(poles[i]), complex(residues[i])) for i in order if keep[i]]


@dataclass(frozen=True)
class BathMode:
    amplitude: complex
    rate: complex

    def __post_init__(self):
        if not self.rate.real > 0:
            raise ValueError(f"mode rate must have positive real part, got {self.rate}")


@dataclass(frozen=True)
class ModeSet:
    modes: tuple = ()
    fit_tolerance: float = 1e-3
    certified_residual: float | None = None

    @property
    def K(self) -> int:
        return len(self.modes)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([m.amplitude for m in self.modes], dtype=complex)

    @property
    def rates(self) -> np.ndarray:
        return np.array([m.rate for m in self.modes], dtype=complex)

    @property
    def certified(self) -> bool:
        return self.certified_residual is not None and self.certified_residual <= self.fit_tolerance

    @classmethod
    def from_arrays(cls, amplitudes, rates, fit_tolerance=1e-3, certified_residual=None):
        modes = tuple(BathMode(complex(d), complex(z)) for d, z in zip(amplitudes, rates))
        return cls(modes, fit_tolerance, certified_residual)

    def scaled(self, factor: float) -> "ModeSet":
        """Same rates, amplitudes times ``factor`` (C scales linearly with alpha)."""
        return replace(self, modes=tuple(BathMode(m.amplitude * factor, m.rate) for m in self.modes))

    def to_json(self) -> str:
        doc = {
            "modes": [{"d_re": m.amplitude.real, "d_im": m.amplitude.imag,
                       "z_re": m.rate.real, "z_im": m.rate.imag} for m in self.modes],
            "tol": self.fit_tolerance,
            "residual": self.certified_residual,
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ModeSet":
        doc = json.loads(text)
        modes = tuple(BathMode(complex(m["d_re"], m["d_im"]), complex(m["z_re"], m["z_im"]))
                      for m in doc["modes"])
        return cls(modes, doc["tol"], doc.get("residual"))


def modes_from_poles(pr: Sequence[tuple], fit_tolerance: float = 1e-3) -> ModeSet:
    modes = []
    for pole, res in pr:
        if pole.imag < 0:
            modes.append(BathMode(-2j * res, 1j * pole))
    return ModeSet(tuple(modes), fit_tolerance, None)


def reconstruct_correlation(m: ModeSet, t):
    t_arr = np.asarray(t, dtype=float)
    if m.K == 0:
        out = np.zeros(t_arr.shape, dtype=complex)
    else:
        out = np.exp(-np.multiply.outer(t_arr, m.rates)) @ m.amplitudes
    return out if t_arr.ndim else complex(out)


def certification_grid(t_max: float, omega_c: float, n: int = 400) -> SampleGrid:
    """The origin plus ``n`` log-spaced times on [1e-3/omega_c, t_max]."""
    t0 = 1e-3 / omega_c
    return SampleGrid(np.concatenate([[0.0], np.logspace(math.log10(t0), math.log10(t_max), n)]),
                      "composite")


def _residual(m: ModeSet, times, reference):
    scale = abs(reference[0]) if times[0] == 0 else np.max(np.abs(reference))
    err = np.abs(reconstruct_correlation(m, times) - reference)
    if scale == 0:
        return 0, float(np.max(err))
    i = int(np.argmax(err))
    return i, float(err[i] / scale)


def certify(m: ModeSet, oracle: Callable, grid: SampleGrid, reference=None) -> ModeSet:
    """Compare the mode reconstruction with ``oracle`` on ``grid``.

    The residual is max |reconstruction - oracle| / |C(0)|; ``reference`` may carry
    precomputed oracle values on the grid.
    """
    times = grid.points
    ref = np.asarray(reference if reference is not None else [oracle(t) for t in times])
    i, res = _residual(m, times, ref)
    if not res <= m.fit_tolerance:
        raise CertificationError(float(times[i]), res, m.fit_tolerance)
    return replace(m, certified_residual=res)


def decompose(bath: BathSpec, tol: float = 1e-3, t_max: float = 20.0, max_degree: int = 60,
              quad_tol: float = 1e-10, grid: SampleGrid | None = None) -> ModeSet:
    """Smallest certified mode set along the AAA greedy path.

    Every AAA iterate (fit with the 1/w**2 decay constraint) is converted to modes
    and checked against the quadrature oracle on the certification grid; the first
    iterate whose residual is within ``tol`` is returned.
    """
    p = bath.spectral
    if p.alpha == 0:
        return ModeSet((), tol, 0.0)
    grid = grid or frequency_grid(p)
    # fit the alpha-free shape; amplitudes rescale linearly
    unit = BathSpec(replace(p, alpha=1.0), bath.beta)
    values = noise_power(grid.points, unit)
    cgrid = certification_grid(t_max, p.omega_c)
    reference = correlation_series(cgrid.points, unit, quad_tol)
    _, history = aaa_fit(grid, values, rel_tol=1e-14, max_degree=max_degree, decay_order=2,
                         keep_history=True)
    best = None
    for approx in history:
        try:
            modes = modes_from_poles(poles_and_residues(approx), tol)
        except (RuntimeError, ValueError):
            continue
        if modes.K == 0:
            continue
        i, res = _residual(modes, cgrid.points, reference)
        if best is None or res < best[1]:
            best = (float(cgrid.points[i]), res)
        if res <= tol:
            return replace(modes, certified_residual=res).scaled(p.alpha)
    t_worst, res = best if best else (0.0, 1.0)
    raise CertificationError(t_worst, res, tol)
