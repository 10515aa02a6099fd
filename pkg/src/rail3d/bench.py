"""Experiment driver: time loop, diagnostics, CSV/JSON output, order fits."""
from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import ContractError
from .imex import tableau
from .integrator import TruncationPolicy, cfl_dt, rail_step
from .lomac import moments, qcm_maxwellian, relative_entropy
from .problems import problem
from .tucker import mode_n_product

CSV_COLUMNS = ("t", "r1", "r2", "r3", "ravg", "mass", "px", "py", "pz", "energy", "l1err", "entropy")
_SPEED_SAMPLES = 65


@dataclass
class ExperimentConfig:
    problem: str
    scheme: Optional[str] = None
    n: int = 64
    lam: Optional[float] = None
    tol: Optional[float] = None
    tf: Optional[float] = None
    trunc: Optional[str] = None
    weight_s: Optional[float] = None
    d: Optional[float] = None
    out: Optional[str] = None
    seed: int = 0
    threads: Optional[int] = None

    def resolved(self, spec):
        """Copy with every unset field filled from the problem defaults."""
        vals = asdict(self)
        for key in ("scheme", "lam", "tol", "tf", "trunc", "weight_s"):
            if vals[key] is None:
                vals[key] = spec.defaults[key]
        cfg = ExperimentConfig(**vals)
        if cfg.n % 2 or cfg.n < 4:
            raise ContractError(f"N must be even and >= 4, got {cfg.n}")
        if not cfg.lam > 0:
            raise ContractError(f"lambda must be positive, got {cfg.lam}")
        if not cfg.tf > 0:
            raise ContractError(f"final time must be positive, got {cfg.tf}")
        return cfg


@dataclass
class RunRecord:
    t: float
    mlrank: tuple
    ravg: float
    mass: float
    momentum: tuple
    energy: float
    l1err: Optional[float] = None
    entropy: Optional[float] = None
    wall: float = 0.0

    def row(self):
        def fmt(x):
            return "" if x is None else format(float(x), ".17g")

        vals = [self.t, *self.mlrank, self.ravg, self.mass, *self.momentum, self.energy, self.l1err, self.entropy]
        return [str(v) if isinstance(v, (int, np.integer)) else fmt(v) for v in vals]


def l1_error(f, g, grid, block=16):
    """``dx dy dz sum |f - g|`` with ``f`` (Tucker) rebuilt slab by slab."""
    g = np.asarray(g)
    if g.shape != f.shape:
        raise ContractError(f"shapes differ: {f.shape} vs {g.shape}")
    v1, v2, v3 = f.factors
    partial = mode_n_product(mode_n_product(f.core, v1, 0), v2, 1)
    total = 0.0
    for k0 in range(0, g.shape[2], block):
        slab = np.tensordot(partial, v3[k0:k0 + block].T, axes=(2, 0))
        total += float(np.sum(np.abs(slab - g[:, :, k0:k0 + block])))
    return total * grid.cell_volume


def planned_dt(spec, lam, tf, u, t=0.0):
    """CFL step for the next step (Burgers) or for the whole run (fixed flows)."""
    if spec.is_burgers:
        return cfl_dt(lam, spec.max_speeds(t, u), spec.grid)
    if spec.time_dependent_flow:
        samples = np.linspace(0.0, tf, _SPEED_SAMPLES)
        speeds = np.max([spec.max_speeds(s) for s in samples], axis=0)
        return cfl_dt(lam, speeds, spec.grid)
    return cfl_dt(lam, spec.max_speeds(t), spec.grid)


class _Diagnostics:
    def __init__(self, spec):
        self.spec = spec
        self.equilibrium = None
        if spec.name == "dfp":
            self.equilibrium = qcm_maxwellian(moments(spec.initial, spec.grid), spec.grid)
            self.equilibrium_dense = self.equilibrium.full()

    def record(self, u, t, wall):
        g = self.spec.grid
        m = moments(u, g)
        l1 = ent = None
        if self.spec.exact is not None:
            l1 = l1_error(u, self.spec.exact(t), g)
        if self.equilibrium is not None:
            l1 = l1_error(u, self.equilibrium_dense, g)
            ent = relative_entropy(u, self.equilibrium_dense, g)
        r = u.mlrank
        return RunRecord(t, r, sum(r) / 3.0, m.n, m.nu, m.E, l1, ent, wall)


def _drifts(records):
    first = records[0]
    out = {}
    mass0 = abs(first.mass)
    out["mass_rel"] = max(abs(r.mass - first.mass) for r in records) / (mass0 if mass0 > 0 else 1.0)
    out["mass_abs"] = max(abs(r.mass - first.mass) for r in records)
    for i, name in enumerate(("px", "py", "pz")):
        out[f"{name}_abs"] = max(abs(r.momentum[i] - first.momentum[i]) for r in records)
    e0 = abs(first.energy)
    out["energy_rel"] = max(abs(r.energy - first.energy) for r in records) / (e0 if e0 > 0 else 1.0)
    return out


def run_experiment(cfg, spec=None, callback=None):
    """Integrate one benchmark from 0 to ``tf``.

    Returns ``(records, summary)``.  When ``cfg.out`` is set, writes
    ``history.csv`` (flushed after every step) and ``summary.json`` there.
    """
    if spec is None:
        spec = problem(cfg.problem, n=cfg.n, d=cfg.d)
    cfg = cfg.resolved(spec)
    tab = tableau(cfg.scheme)
    policy = TruncationPolicy(cfg.trunc, cfg.tol, cfg.weight_s)
    diag = _Diagnostics(spec)

    writer = fh = None
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        fh = open(os.path.join(cfg.out, "history.csv"), "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)

    start = time.perf_counter()
    u = spec.initial
    t = 0.0
    records = []
    steps = 0
    dts = []
    try:
        rec = diag.record(u, t, 0.0)
        records.append(rec)
        if writer:
            writer.writerow(rec.row())
            fh.flush()
        dt = None if spec.is_burgers else planned_dt(spec, cfg.lam, cfg.tf, u)
        while cfg.tf - t > 1e-12 * cfg.tf:
            step_dt = planned_dt(spec, cfg.lam, cfg.tf, u, t) if spec.is_burgers else dt
            step_dt = min(step_dt, cfg.tf - t)
            u = rail_step(u, spec, tab, step_dt, policy, t=t, threads=cfg.threads)
            t = cfg.tf if cfg.tf - (t + step_dt) <= 1e-12 * cfg.tf else t + step_dt
            steps += 1
            dts.append(step_dt)
            rec = diag.record(u, t, time.perf_counter() - start)
            records.append(rec)
            if writer:
                writer.writerow(rec.row())
                fh.flush()
            if callback is not None:
                callback(rec, u)
    finally:
        if fh:
            fh.close()

    wall = time.perf_counter() - start
    summary = {
        "problem": cfg.problem,
        "scheme": cfg.scheme,
        "n": cfg.n,
        "lambda": cfg.lam,
        "tol": cfg.tol,
        "tf": cfg.tf,
        "trunc": cfg.trunc,
        "weight_s": cfg.weight_s,
        "dt": dts[0] if dts else None,
        "steps": steps,
        "final_error": records[-1].l1err,
        "final_rank": list(records[-1].mlrank),
        "drift": _drifts(records),
        "wall_time": wall,
    }
    if cfg.out:
        with open(os.path.join(cfg.out, "summary.json"), "w") as f:
            json.dump(summary, f, indent=2)
    return records, summary


def fit_order(dts, errors):
    """Least-squares slope of ``log(error)`` against ``log(dt)``."""
    x = np.log(np.asarray(dts, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def convergence_study(cfg, lams, out=None):
    """Run ``cfg`` for each CFL factor in ``lams`` and fit the temporal order."""
    lams = [float(x) for x in lams]
    if len(lams) < 3:
        raise ContractError("a convergence study needs at least three lambda values")
    spec = problem(cfg.problem, n=cfg.n, d=cfg.d)
    if spec.exact is None:
        raise ContractError(f"problem {cfg.problem!r} has no exact solution to measure errors against")
    dts, errors, steps = [], [], []
    scheme = None
    for lam in lams:
        run = ExperimentConfig(**{**asdict(cfg), "lam": lam, "out": None})
        _, summ = run_experiment(run, spec=spec)
        dts.append(summ["dt"])
        errors.append(summ["final_error"])
        steps.append(summ["steps"])
        scheme = summ["scheme"]
    report = {
        "problem": cfg.problem,
        "scheme": scheme,
        "lambdas": lams,
        "dts": dts,
        "errors": errors,
        "steps": steps,
        "slope": fit_order(dts, errors),
    }
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, f"convergence_{cfg.problem}_{scheme}.json"), "w") as f:
            json.dump(report, f, indent=2)
    return report
