"""Second-order master equations: Redfield-plus (full memory) and time-local Redfield.

Both are solved in the interaction picture with respect to ``H_s`` and returned in
the Schroedinger picture. The bath enters only through ``C(t)`` reconstructed from
a mode set, so the memory integral here is independent of the hierarchy code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import SIGMA_Z, SpinSystem
from .barycentric import ModeSet, reconstruct_correlation
from .hierarchy import NumericalInstability, PropagatorConfig, Trajectory, check_density


def _dagger(a):
    return np.swapaxes(a, -1, -2).conj()


@dataclass
class InteractionPictureCache:
    times: np.ndarray
    q: np.ndarray  # (n, 2, 2) q_I(t) = exp(iHt) sigma_z exp(-iHt)
    corr: np.ndarray  # (n,) C(t)
    energies: np.ndarray
    vectors: np.ndarray

    @classmethod
    def build(cls, system: SpinSystem, modes: ModeSet, times) -> "InteractionPictureCache":
        times = np.asarray(times, dtype=float)
        energies, vectors = np.linalg.eigh(system.hamiltonian)
        q = _q_interaction(energies, vectors, times)
        return cls(times, q, reconstruct_correlation(modes, times), energies, vectors)

    def propagator(self, t):
        """exp(-i H t) for an array of times."""
        phase = np.exp(-1j * np.multiply.outer(np.asarray(t), self.energies))
        return np.einsum("ij,...j,kj->...ik", self.vectors, phase, self.vectors.conj())

    def to_schroedinger(self, rho_int, t):
        u = self.propagator(t)
        return u @ rho_int @ _dagger(u)


def _q_interaction(energies, vectors, times):
    qe = vectors.conj().T @ SIGMA_Z @ vectors  # sigma_z in the eigenbasis
    freq = np.subtract.outer(energies, energies)  # E_a - E_b
    phases = np.exp(1j * np.multiply.outer(times, freq))
    return vectors @ (qe * phases) @ vectors.conj().T


def _commutator(a, b):
    return a @ b - b @ a


def redfield_plus_propagate(initial, system: SpinSystem, modes: ModeSet, cfg: PropagatorConfig) -> Trajectory:
    """Integro-differential Born equation with the full memory of rho_I(tau).

    d rho_I/dt = -int_0^t ds { [q(t), C(t-s) q(s) rho_I(s)] - [q(t), C*(t-s) rho_I(s) q(s)] }.
    The memory is the trapezoid sum over all stored steps; each step is a Heun
    predictor-corrector where the prediction enters only the newest history node.
    """
    rho0 = check_density(initial)
    cfg.check_rates(modes)
    h = cfg.dt
    n = cfg.n_steps
    grid = np.arange(n + 1) * h
    cache = InteractionPictureCache.build(system, modes, grid)
    q, c = cache.q, cache.corr
    rho = np.zeros((n + 1, 2, 2), dtype=complex)
    x = np.zeros((n + 1, 4), dtype=complex)  # q_I(s) rho_I(s), flattened
    rho[0] = rho0
    x[0] = (q[0] @ rho0).ravel()

    def generator(i, memory):
        y = memory.reshape(2, 2)
        return -_commutator(q[i], y - y.conj().T)

    f = np.zeros((2, 2), dtype=complex)  # memory vanishes at t = 0
    for i in range(n):
        j = i + 1
        # trapezoid weights: 1/2 at s = 0 and at s = t_j (added below)
        hist = h * (c[j:0:-1] @ x[:j] - 0.5 * c[j] * x[0])
        pred = rho[i] + h * f
        f_pred = generator(j, hist + 0.5 * h * c[0] * (q[j] @ pred).ravel())
        rho[j] = rho[i] + 0.5 * h * (f + f_pred)
        x[j] = (q[j] @ rho[j]).ravel()
        f = generator(j, hist + 0.5 * h * c[0] * x[j])
        if not np.all(np.isfinite(rho[j])):
            raise NumericalInstability("non-finite density in Redfield-plus", (j - 1) * h)
    sel = np.arange(0, n + 1, cfg.record_stride)
    return Trajectory(grid[sel], cache.to_schroedinger(rho[sel], grid[sel]))


def _memory_segment(z, freq, t, dt):
    """int_t^{t+dt} exp(-z (t+dt-s)) exp(i w s) ds for mode rates z and frequencies w."""
    a = z[:, None, None] + 1j * freq[None]
    return np.exp(1j * freq * t)[None] * (np.exp(1j * freq * dt)[None] - np.exp(-z[:, None, None] * dt)) / a


def redfield_propagate(initial, system: SpinSystem, modes: ModeSet, cfg: PropagatorConfig) -> Trajectory:
    """Time-local Redfield equation, rho_I(s) -> rho_I(t) inside the memory integral.

    d rho_I/dt = -[q(t), Lam(t) rho_I - rho_I Lam(t)^+] with
    Lam(t) = sum_k d_k int_0^t exp(-z_k (t - s)) q_I(s) ds, advanced in half steps by
    an exact one-step recurrence per mode.
    """
    rho0 = check_density(initial)
    cfg.check_rates(modes)
    h = cfg.dt
    n = cfg.n_steps
    energies, vectors = np.linalg.eigh(system.hamiltonian)
    qe = vectors.conj().T @ SIGMA_Z @ vectors
    freq = np.subtract.outer(energies, energies)
    z, d = modes.rates, modes.amplitudes
    decay = np.exp(-z * 0.5 * h)

    def to_site(mat_eig):
        return vectors @ mat_eig @ vectors.conj().T

    def q_at(t):
        return to_site(qe * np.exp(1j * freq * t))

    lam_modes = np.zeros((modes.K, 2, 2), dtype=complex)  # eigenbasis, without d_k

    def step_lam(lm, t):
        return decay[:, None, None] * lm + qe[None] * _memory_segment(z, freq, t, 0.5 * h)

    def rhs(rho, qt, lam):
        a = lam @ rho
        return -_commutator(qt, a - a.conj().T)

    rho = rho0.copy()
    grid = np.arange(n + 1) * h
    out = [rho.copy()]
    times = [0.0]
    lam_now = np.zeros((2, 2), dtype=complex)
    for i in range(n):
        t = i * h
        lam_mid_modes = step_lam(lam_modes, t)
        lam_end_modes = step_lam(lam_mid_modes, t + 0.5 * h)
        lam_mid = to_site(np.tensordot(d, lam_mid_modes, axes=1)) if modes.K else lam_now * 0
        lam_end = to_site(np.tensordot(d, lam_end_modes, axes=1)) if modes.K else lam_now * 0
        q0, qm, q1 = q_at(t), q_at(t + 0.5 * h), q_at(t + h)
        k1 = rhs(rho, q0, lam_now)
        k2 = rhs(rho + 0.5 * h * k1, qm, lam_mid)
        k3 = rhs(rho + 0.5 * h * k2, qm, lam_mid)
        k4 = rhs(rho + h * k3, q1, lam_end)
        rho = rho + (h / 6.0) * (k1 + 2 * (k2 + k3) + k4)
        lam_modes, lam_now = lam_end_modes, lam_end
        if (i + 1) % cfg.record_stride == 0:
            if not np.all(np.isfinite(rho)):
                raise NumericalInstability("non-finite density in Redfield", t)
            out.append(rho.copy())
            times.append((i + 1) * h)
    times = np.array(times)
    rho_int = np.array(out)
    u = np.einsum("ij,tj,kj->tik", vectors, np.exp(-1j * np.multiply.outer(times, energies)), vectors.conj())
    return Trajectory(times, u @ rho_int @ _dagger(u))
