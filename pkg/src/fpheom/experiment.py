"""Experiment orchestration: decompose, propagate, compare, extract; one directory per run."""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bath import BathSpec, QuadratureError, SpectralParams, SpinSystem
from .barycentric import CertificationError, ModeSet, decompose
from .config import ExperimentConfig
from .csvio import write_csv
from .gme import (IllPosedExtraction, MemoryKernelSeries, PopulationSeries, asymptotic_rates,
                  extract_kernel, gme_forward)
from .hierarchy import (HierarchyTooLarge, NumericalInstability, PropagatorConfig, default_time_step,
                        observe_population, propagate)
from .niba import niba_kernel
from .perturbative import redfield_plus_propagate, redfield_propagate

NUMERICAL_ERRORS = (CertificationError, NumericalInstability, HierarchyTooLarge, QuadratureError,
                    IllPosedExtraction)
INITIAL_STATE = np.diag([1.0, 0.0]).astype(complex)  # |+><+|, P(0) = 1


@dataclass
class RunManifest:
    config: dict
    modes: dict | None = None
    solver: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    checksums: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> str:
        doc = {"status": "ok" if self.ok else "failed", "config": self.config, "modes": self.modes,
               "solver": self.solver, "wall_clock_s": round(self.wall_clock, 3),
               "checksums": self.checksums, "failures": self.failures}
        return json.dumps(_json_safe(doc), indent=2, sort_keys=True)


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _tag(x: float) -> str:
    return format(float(x), "g")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def bath_from_config(cfg: ExperimentConfig) -> BathSpec:
    b = cfg.bath
    return BathSpec.from_temperature(SpectralParams(b.alpha, b.s, b.omega_c), b.temperature)


def system_from_config(cfg: ExperimentConfig) -> SpinSystem:
    return SpinSystem(cfg.system.epsilon, cfg.system.delta)


def propagator_config(cfg: ExperimentConfig, system: SpinSystem, modes: ModeSet) -> PropagatorConfig:
    r = cfg.run
    if r.dt is None and r.record_stride is None:
        return sampled_config(default_time_step(system, modes), r.sample_dt, r.t_final)
    dt = r.dt if r.dt is not None else default_time_step(system, modes)
    stride = r.record_stride or max(1, int(round(r.sample_dt / dt)))
    return PropagatorConfig(dt, r.t_final, stride)


def sampled_config(dt_max: float, sample_dt: float, t_final: float) -> PropagatorConfig:
    """Largest step <= ``dt_max`` that divides ``sample_dt``; records land on multiples of it."""
    stride = max(1, math.ceil(sample_dt / dt_max - 1e-9))
    return PropagatorConfig(sample_dt / stride, t_final, stride)


class _Runner:
    def __init__(self, cfg: ExperimentConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.system = system_from_config(cfg)
        self.bath = bath_from_config(cfg)
        self.manifest = RunManifest(cfg.to_dict())
        self.modes = None
        self.populations = {}
        self.kernels = {}

    def fail(self, task, exc):
        self.manifest.failures.append({"task": task, "error": type(exc).__name__, "message": str(exc)})

    def emit_csv(self, name, columns):
        path = write_csv(self.out / name, columns)
        self.manifest.checksums[name] = _sha256(path)

    def emit_json(self, name, text):
        path = self.out / name
        path.write_text(text + "\n")
        self.manifest.checksums[name] = _sha256(path)

    def check_stable(self, task, traj):
        bound = self.cfg.run.stability_bound
        big = np.abs(traj.population) > bound
        if np.any(big):
            t_bad = float(traj.times[np.argmax(big)])
            self.fail(task, NumericalInstability(f"|P| exceeds {bound:g} at t={t_bad:.6g}", t_bad))

    def decompose(self):
        c = self.cfg.fit
        modes = decompose(self.bath, c.tol, c.t_max, c.max_degree)
        self.emit_json("modes.json", modes.to_json())
        self.manifest.modes = {"K": modes.K, "residual": modes.certified_residual, "tol": c.tol}
        self.modes = modes
        self.pcfg = propagator_config(self.cfg, self.system, modes)
        self.manifest.solver = {"dt": self.pcfg.dt, "record_stride": self.pcfg.record_stride,
                                "sample_spacing": self.pcfg.dt * self.pcfg.record_stride,
                                "t_final": self.pcfg.t_final, "method": self.pcfg.method}

    def heom(self, levels):
        for L in levels:
            task = f"heom[L={L}]"
            try:
                traj = propagate(INITIAL_STATE, self.system, self.modes, self.pcfg, L,
                                 max_ados=self.cfg.run.max_ados)
            except NUMERICAL_ERRORS as exc:
                self.fail(task, exc)
                continue
            traj.to_csv(self.out / f"P_heom_L{L}.csv")
            self.manifest.checksums[f"P_heom_L{L}.csv"] = _sha256(self.out / f"P_heom_L{L}.csv")
            self.check_stable(task, traj)
            self.populations[L] = traj

    def perturbative(self, name, solver):
        try:
            traj = solver(INITIAL_STATE, self.system, self.modes, self.pcfg)
        except NUMERICAL_ERRORS as exc:
            self.fail(name, exc)
            return
        fname = f"P_{name}.csv"
        traj.to_csv(self.out / fname)
        self.manifest.checksums[fname] = _sha256(self.out / fname)
        self.check_stable(name, traj)

    def niba(self):
        r = self.cfg.run
        h = r.sample_dt
        t = np.arange(int(round(r.t_final / h)) + 1) * h
        tag = _tag(self.cfg.bath.s)
        try:
            k = niba_kernel(t, self.system, self.bath)
        except NUMERICAL_ERRORS as exc:
            self.fail("niba", exc)
            return
        self.emit_csv(f"K_niba_s{tag}.csv", {"t": t, "K_niba": k})
        kernel = MemoryKernelSeries(t, k)
        self.kernels["niba"] = kernel
        p = gme_forward(kernel, 1.0)
        self.emit_csv(f"P_niba_s{tag}.csv", {"t": p.times, "P": p.values})

    def extract(self):
        levels = self.cfg.run.L
        L = max(levels)
        if L not in self.populations:
            self.heom([L])
        if L not in self.populations:
            self.fail("extract_kernel", RuntimeError(f"no FP-HEOM trajectory at L={L}"))
            return
        try:
            kernel = extract_kernel(observe_population(self.populations[L]), method=self.cfg.extract.method)
        except NUMERICAL_ERRORS as exc:
            self.fail("extract_kernel", exc)
            return
        tag = _tag(self.cfg.bath.s)
        kernel.to_csv(self.out / f"K_exact_s{tag}.csv")
        self.manifest.checksums[f"K_exact_s{tag}.csv"] = _sha256(self.out / f"K_exact_s{tag}.csv")
        self.kernels["exact"] = kernel

    def rates(self):
        if not self.kernels:
            self.fail("rates", RuntimeError("rates need a kernel task (niba or extract_kernel)"))
        tag = _tag(self.cfg.bath.s)
        for name, kernel in sorted(self.kernels.items()):
            rm = asymptotic_rates(kernel)
            self.emit_json(f"rates_{name}_s{tag}.json", json.dumps(_json_safe(rm.to_json()), sort_keys=True))


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> RunManifest:
    """Run every requested task and write CSV/JSON outputs plus ``manifest.json``.

    Numerical failures (certification, instability, size caps, quadrature) are
    recorded per task in the manifest rather than aborting the remaining tasks.
    """
    start = time.perf_counter()
    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    run = _Runner(cfg, out)
    tasks = set(cfg.tasks)
    needs_modes = tasks & {"heom", "redfield_plus", "redfield", "extract_kernel"}
    if needs_modes:
        try:
            run.decompose()
        except NUMERICAL_ERRORS as exc:
            run.fail("decompose", exc)
    if run.modes is not None:
        if "heom" in tasks:
            run.heom(cfg.run.L)
        if "redfield_plus" in tasks:
            run.perturbative("redfield_plus", redfield_plus_propagate)
        if "redfield" in tasks:
            run.perturbative("redfield", redfield_propagate)
    if "niba" in tasks:
        run.niba()
    if "extract_kernel" in tasks and run.modes is not None:
        run.extract()
    if "rates" in tasks:
        run.rates()
    run.manifest.wall_clock = time.perf_counter() - start
    (out / "manifest.json").write_text(run.manifest.to_json() + "\n")
    return run.manifest


def decompose_only(cfg: ExperimentConfig, out_dir=None) -> RunManifest:
    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    run = _Runner(cfg, out)
    try:
        run.decompose()
    except NUMERICAL_ERRORS as exc:
        run.fail("decompose", exc)
    run.manifest.wall_clock = time.perf_counter() - start
    (out / "manifest.json").write_text(run.manifest.to_json() + "\n")
    return run.manifest


def _sweep_point(args):
    cfg, out = args
    return run_experiment(cfg, out)


def run_sweep(cfg: ExperimentConfig, out_dir=None, jobs: int = 1) -> list:
    """Run one experiment per value of ``cfg.sweep.param``, each in its own subdirectory."""
    if not cfg.sweep.values:
        raise ValueError("sweep.values is empty")
    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    name = cfg.sweep.param
    points = [(cfg.with_param(name, v), out / f"{name}_{_tag(v)}") for v in cfg.sweep.values]
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            manifests = list(pool.map(_sweep_point, points))
    else:
        manifests = [_sweep_point(p) for p in points]
    summary = [{"value": v, "directory": p[1].name, "status": "ok" if m.ok else "failed"}
               for v, p, m in zip(cfg.sweep.values, points, manifests)]
    (out / "sweep.json").write_text(json.dumps({"param": name, "points": summary}, indent=2) + "\n")
    return manifests
