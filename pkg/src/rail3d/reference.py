"""Full-grid IMEX stepper used as an oracle for the low-rank integrator."""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import ContractError
from .tucker import mode_n_product, unvectorize, vectorize

MAX_N = 16


def laplacian_kron(ops):
    """Dense ``F_z (+) F_y (+) F_x`` acting on column-major vectors."""
    fx, fy, fz = ops.F
    ix, iy, iz = (np.eye(f.shape[0]) for f in ops.F)
    return (np.kron(iz, np.kron(iy, fx)) + np.kron(iz, np.kron(fy, ix))
            + np.kron(fz, np.kron(iy, ix)))


def _divergence(u, spec, t):
    ops = spec.operators
    if spec.is_burgers:
        e = 0.5 * u * u
        fields = (e, e, e)
    else:
        fields = tuple(None if a is None else a.full() * u for a in spec.flow_at(t))
    out = np.zeros_like(u)
    for dim, e in enumerate(fields):
        if e is not None:
            out += mode_n_product(e, ops.D[dim], dim)
    return out


def _laplace(u, ops):
    return sum(mode_n_product(u, ops.F[dim], dim) for dim in range(3))


def reference_step(u, spec, tab, dt, t=0.0):
    """One IMEX step on the dense grid with direct Kronecker solves."""
    u = np.asarray(u, dtype=float)
    if max(u.shape) > MAX_N:
        raise ContractError(f"dense reference is limited to N <= {MAX_N}, got {u.shape}")
    if u.shape != spec.grid.shape:
        raise ContractError(f"solution shape {u.shape} differs from grid {spec.grid.shape}")
    lap = laplacian_kron(spec.operators)
    eye = np.eye(lap.shape[0])
    a, ae, c = tab.A, tab.A_exp, tab.c
    stages = [u]
    div = [_divergence(u, spec, t)]
    src = {}
    lu_cache = {}
    for k in range(1, tab.stages + 1):
        rhs = u.copy()
        for ell in range(1, k):
            rhs += dt * a[k, ell] * _laplace(stages[ell], spec.operators)
        for ell in range(1, k + 1):
            rhs -= dt * ae[k, ell - 1] * div[ell - 1]
        if spec.source is not None:
            for ell in range(1, k + 1):
                if ell not in src:
                    src[ell] = spec.source_at(t + c[ell] * dt).full()
                rhs += dt * a[k, ell] * src[ell]
        h = a[k, k] * dt
        if h not in lu_cache:
            lu_cache[h] = sla.lu_factor(eye - h * lap)
        uk = unvectorize(sla.lu_solve(lu_cache[h], vectorize(rhs)), u.shape)
        stages.append(uk)
        if k < tab.stages:
            div.append(_divergence(uk, spec, t + c[k] * dt))
    return stages[-1]
