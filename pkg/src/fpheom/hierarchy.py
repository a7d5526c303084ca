"""Free-pole hierarchical equations of motion for the spin-boson model.

ADOs are stored densely as an ``(N, 2, 2)`` array ordered by tier and then
descending lexicographic order of the ``2K`` multi-index ``(m | n)``. The
generator is assembled once as a sparse matrix acting on the flattened array.
ADOs beyond tier ``L`` are identically zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .bath import SIGMA_Z, SpinSystem
from .barycentric import ModeSet
from .csvio import write_csv
from .gme import PopulationSeries

DEFAULT_MAX_ADOS = 5_000_000


class HierarchyTooLarge(MemoryError):
    pass


class NumericalInstability(RuntimeError):
    def __init__(self, message: str, last_stable_time: float):
        super().__init__(f"{message}; last stable time {last_stable_time:.6g}")
        self.last_stable_time = last_stable_time


def hierarchy_size(K: int, L: int) -> int:
    """Number of nonnegative integer 2K-vectors with sum <= L."""
    return math.comb(2 * K + L, L)


def _binomial_table(n_max: int) -> np.ndarray:
    table = np.zeros((n_max + 1, n_max + 1), dtype=np.int64)
    for n in range(n_max + 1):
        for k in range(n + 1):
            table[n, k] = math.comb(n, k)
    return table


@dataclass(frozen=True, eq=False)
class HierarchyIndexSet:
    K: int
    L: int
    indices: np.ndarray  # (N, 2K) int16, columns m_1..m_K, n_1..n_K

    def __len__(self):
        return self.indices.shape[0]

    @cached_property
    def tiers(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    @cached_property
    def _binom(self):
        return _binomial_table(2 * self.K + self.L + 1)

    def rank(self, vectors) -> np.ndarray:
        """Ordinal of each multi-index row; -1 for rows outside the set."""
        v = np.atleast_2d(np.asarray(vectors, dtype=np.int64))
        slots = 2 * self.K
        out = np.full(v.shape[0], -1, dtype=np.int64)
        ok = np.all(v >= 0, axis=1)
        tier = v.sum(axis=1)
        ok &= tier <= self.L
        if slots == 0:
            out[ok] = 0
            return out
        binom = self._binom
        # vectors with smaller total come first
        r = np.where(tier > 0, binom[np.clip(slots + tier - 1, 0, None), slots], 0)
        rem = tier.copy()
        for p in range(slots - 1):
            free = slots - p - 1
            for u in range(1, self.L + 1):
                # completions with a larger entry u at position p
                ahead = (u > v[:, p]) & (u <= rem)
                left = np.where(ahead, rem - u, 0)
                r += np.where(ahead, binom[left + free - 1, free - 1], 0)
            rem -= v[:, p]
        out[ok] = r[ok]
        return out

    @property
    def lookup(self) -> dict:
        return {tuple(int(x) for x in row): i for i, row in enumerate(self.indices)}

    @cached_property
    def neighbors(self):
        """(plus, minus): arrays (2K, N) with ordinals of idx +- e_k, or -1."""
        slots = 2 * self.K
        plus = np.full((slots, len(self)), -1, dtype=np.int64)
        minus = np.full((slots, len(self)), -1, dtype=np.int64)
        base = self.indices.astype(np.int64)
        for k in range(slots):
            shifted = base.copy()
            shifted[:, k] += 1
            plus[k] = self.rank(shifted)
            shifted[:, k] -= 2
            minus[k] = self.rank(shifted)
        return plus, minus


def _compositions(total: int, slots: int):
    if slots == 1:
        yield (total,)
        return
    for v in range(total, -1, -1):
        for rest in _compositions(total - v, slots - 1):
            yield (v,) + rest


def enumerate_hierarchy(K: int, L: int, max_ados: int = DEFAULT_MAX_ADOS) -> HierarchyIndexSet:
    if K < 0 or L < 0:
        raise ValueError("K and L must be nonnegative")
    size = hierarchy_size(K, L)
    if size > max_ados:
        raise HierarchyTooLarge(f"K={K}, L={L} needs {size} ADOs (cap {max_ados})")
    if K == 0:
        return HierarchyIndexSet(0, L, np.zeros((1, 0), dtype=np.int16))
    rows = [c for tier in range(L + 1) for c in _compositions(tier, 2 * K)]
    return HierarchyIndexSet(K, L, np.array(rows, dtype=np.int16).reshape(size, 2 * K))


@dataclass
class HierarchyState:
    index_set: HierarchyIndexSet
    ados: np.ndarray  # (N, 2, 2) complex
    time: float = 0.0

    @classmethod
    def factorized(cls, index_set: HierarchyIndexSet, rho0, time: float = 0.0) -> "HierarchyState":
        ados = np.zeros((len(index_set), 2, 2), dtype=complex)
        ados[0] = rho0
        return cls(index_set, ados, time)

    @property
    def rho(self) -> np.ndarray:
        return self.ados[0]

    def conjugate_partner(self) -> np.ndarray:
        """Ordinal of (n, m) for every stored (m, n)."""
        K = self.index_set.K
        swapped = np.concatenate([self.index_set.indices[:, K:], self.index_set.indices[:, :K]], axis=1)
        return self.index_set.rank(swapped)

    def symmetry_error(self) -> float:
        partner = self.conjugate_partner()
        return float(np.max(np.abs(self.ados - self.ados[partner].conj().transpose(0, 2, 1))))


class HEOMGenerator:
    """Sparse linear generator of the truncated hierarchy.

    ``sqrt_signs`` flips the branch of sqrt(d_k) per mode; physical observables
    do not depend on it.
    """

    def __init__(self, index_set: HierarchyIndexSet, system: SpinSystem, modes: ModeSet,
                 sqrt_signs=None):
        if modes.K != index_set.K:
            raise ValueError(f"mode count {modes.K} does not match hierarchy K={index_set.K}")
        self.index_set = index_set
        self.system = system
        self.modes = modes
        K = modes.K
        z = modes.rates
        root = np.sqrt(modes.amplitudes.astype(complex))
        if sqrt_signs is not None:
            root = root * np.asarray(sqrt_signs, dtype=float)
        self.matrix = self._assemble(index_set, system.hamiltonian, z, root)

    @staticmethod
    def _assemble(index_set, H, z, root):
        N = len(index_set)
        K = index_set.K
        idx = index_set.indices.astype(float)
        q = np.diag(SIGMA_Z).real
        # flattened entry a = 2 i + j of rho_ij
        qi = np.repeat(q, 2)
        qj = np.tile(q, 2)
        eye = np.eye(2)
        lsys = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
        damping = idx[:, :K] @ z + idx[:, K:] @ z.conj() if K else np.zeros(N, complex)
        base = 4 * np.arange(N)
        rows, cols, vals = [], [], []

        def add(r, c, v):
            rows.append(r)
            cols.append(c)
            vals.append(np.broadcast_to(v, r.shape).astype(complex))

        for a in range(4):
            for b in range(4):
                coef = lsys[a, b] - (damping if a == b else 0.0)
                if np.any(coef != 0):
                    add(base + a, base + b, coef)
        if K:
            plus, minus = index_set.neighbors
            for k in range(2 * K):
                mode = k % K
                c = root[mode] if k < K else root[mode].conjugate()
                up = np.nonzero(plus[k] >= 0)[0]
                if up.size:
                    fac = -1j * np.sqrt(idx[up, k] + 1.0) * c
                    for a in range(4):
                        comm = qi[a] - qj[a]
                        if comm:
                            add(4 * up + a, 4 * plus[k][up] + a, fac * comm)
                down = np.nonzero(minus[k] >= 0)[0]
                if down.size:
                    amp = np.sqrt(idx[down, k]) * c
                    for a in range(4):
                        # m-branch: -i q rho ; n-branch: +i rho q
                        fac = -1j * qi[a] if k < K else 1j * qj[a]
                        add(4 * down + a, 4 * minus[k][down] + a, fac * amp)
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        return sp.csr_matrix((vals, (rows, cols)), shape=(4 * N, 4 * N))

    def __call__(self, ados: np.ndarray) -> np.ndarray:
        return (self.matrix @ ados.reshape(-1)).reshape(ados.shape)


def heom_rhs(state: HierarchyState, system: SpinSystem, modes: ModeSet) -> np.ndarray:
    """Time derivative of every ADO in ``state``."""
    return HEOMGenerator(state.index_set, system, modes)(state.ados)


def default_time_step(system: SpinSystem, modes: ModeSet) -> float:
    zmax = float(np.max(np.abs(modes.rates))) if modes.K else 0.0
    dt_sys = 0.05 / max(abs(system.epsilon) + abs(system.delta), 1.0)
    return min(0.1 / zmax, dt_sys) if zmax > 0 else dt_sys


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float
    t_final: float
    record_stride: int = 1
    method: str = "rk4"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final >= 0:
            raise ValueError("t_final must be nonnegative")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.method != "rk4":
            raise ValueError(f"unsupported method {self.method!r}")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_final / self.dt - 1e-9))

    def check_rates(self, modes: ModeSet):
        if modes.K and self.dt * np.max(np.abs(modes.rates)) > 0.1 * (1 + 1e-12):
            raise ValueError(
                f"dt={self.dt:g} violates dt * max|z| <= 0.1 (max|z|={np.max(np.abs(modes.rates)):.4g})")


@dataclass
class Trajectory:
    times: np.ndarray
    rho: np.ndarray  # (T, 2, 2)
    states: list | None = None

    @property
    def population(self) -> np.ndarray:
        return (self.rho[:, 0, 0] - self.rho[:, 1, 1]).real

    @property
    def trace_error(self) -> np.ndarray:
        return np.abs(np.trace(self.rho, axis1=1, axis2=2) - 1.0)

    @property
    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().transpose(0, 2, 1))))

    def to_csv(self, path):
        r = self.rho
        return write_csv(path, {
            "t": self.times,
            "P": self.population,
            "Re_rho00": r[:, 0, 0].real,
            "Re_rho11": r[:, 1, 1].real,
            "Re_rho01": r[:, 0, 1].real,
            "Im_rho01": r[:, 0, 1].imag,
            "trace_error": self.trace_error,
        })


def check_density(rho0) -> np.ndarray:
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (2, 2):
        raise ValueError("initial density must be 2x2")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-12:
        raise ValueError("initial density must be Hermitian")
    if abs(np.trace(rho0) - 1) > 1e-12:
        raise ValueError("initial density must have unit trace")
    return rho0


def rk4_integrate(rhs, y0: np.ndarray, dt: float, n_steps: int, stride: int, observe,
                  keep=None):
    """Fixed-step RK4 for a linear autonomous right-hand side.

    ``observe(y)`` is recorded at step 0 and every ``stride`` steps; ``keep`` (if
    given) receives copies of the full state at the same points.
    """
    y = y0.copy()
    records = [observe(y)]
    times = [0.0]
    if keep is not None:
        keep.append(y.copy())
    for step in range(1, n_steps + 1):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y += (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if step % stride == 0 or step == n_steps:
            if not np.all(np.isfinite(y)):
                raise NumericalInstability("non-finite ADOs", times[-1])
            if step % stride == 0:
                records.append(observe(y))
                times.append(step * dt)
                if keep is not None:
                    keep.append(y.copy())
    return np.array(times), np.array(records), y


def propagate(initial, system: SpinSystem, modes: ModeSet, cfg: PropagatorConfig, L: int,
              keep_states: bool = False, max_ados: int = DEFAULT_MAX_ADOS,
              sqrt_signs=None) -> Trajectory:
    """Propagate the tier-``L`` hierarchy from a factorized initial state."""
    rho0 = check_density(initial)
    if L < 0:
        raise ValueError("L must be >= 0")
    cfg.check_rates(modes)
    index_set = enumerate_hierarchy(modes.K, L, max_ados)
    gen = HEOMGenerator(index_set, system, modes, sqrt_signs)
    state = HierarchyState.factorized(index_set, rho0)
    kept = [] if keep_states else None
    times, rho, _ = rk4_integrate(gen, state.ados, cfg.dt, cfg.n_steps, cfg.record_stride,
                                  lambda y: y[0].copy(), kept)
    states = None
    if keep_states:
        states = [HierarchyState(index_set, y, t) for y, t in zip(kept, times)]
    return Trajectory(times, rho, states)


def observe_population(traj: Trajectory) -> PopulationSeries:
    p = traj.rho[:, 0, 0] - traj.rho[:, 1, 1]
    return PopulationSeries(traj.times, p.real, float(np.max(np.abs(p.imag))) if p.size else 0.0)
