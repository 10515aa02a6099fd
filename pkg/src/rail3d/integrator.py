"""Rank-adaptive IMEX low-rank time stepping for 3-D convection-diffusion.

Each Runge-Kutta stage builds projection bases from the previous stage bases
(plus a first-order prediction), updates one basis per dimension through a
Sylvester equation, projects onto the augmented bases and solves a small
Kronecker-structured equation for the core, then truncates.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, SingularityError
from .imex import tableau
from .linalg import SINGULAR_TOL, sym_eig, tensor_linear_solve
from .tucker import (
    TuckerTensor3,
    block_max_abs,
    hadamard,
    hosvd,
    mode_n_product,
    multi_mode_product,
)

BURGERS = "burgers"
AUG_TOL = 1e-12
FLUX_TOL = 1e-12

TRUNCATION_KINDS = ("hosvd", "lomac-mass", "lomac-momentum", "lomac-energy", "none")


@dataclass
class ProblemSpec:
    """Everything the stepper needs to know about one PDE instance.

    ``flow`` maps a time to three Tucker tensors (``None`` entries mean a zero
    velocity component), or is the string ``"burgers"`` for ``a_i = u/2``.
    ``source`` maps a time to a Tucker tensor (or is ``None``).  ``exact``, if
    given, maps a time to the dense exact solution.
    """

    name: str
    grid: object
    operators: object
    flow: object
    source: Optional[Callable] = None
    initial: Optional[TuckerTensor3] = None
    exact: Optional[Callable] = None
    d: tuple = (0.0, 0.0, 0.0)
    time_dependent_flow: bool = False
    defaults: dict = field(default_factory=dict)

    @property
    def is_burgers(self):
        return isinstance(self.flow, str) and self.flow == BURGERS

    def flow_at(self, t):
        if self.flow is None:
            return (None, None, None)
        fields = tuple(self.flow(t))
        for a in fields:
            if a is not None and a.shape != self.grid.shape:
                raise ContractError(f"flow field shape {a.shape} differs from grid {self.grid.shape}")
        return fields

    def source_at(self, t):
        if self.source is None:
            return None
        c = self.source(t)
        if c is not None and c.shape != self.grid.shape:
            raise ContractError(f"source shape {c.shape} differs from grid {self.grid.shape}")
        return c

    def max_speeds(self, t, u=None):
        """Per-dimension ``max |f_i'(u)|`` on the grid nodes."""
        if self.is_burgers:
            if u is None:
                raise ContractError("Burgers speeds need the current solution")
            m = block_max_abs(u)
            return (m, m, m)
        return tuple(0.0 if a is None else block_max_abs(a) for a in self.flow_at(t))


@dataclass(frozen=True)
class TruncationPolicy:
    kind: str = "hosvd"
    tol: float = 1e-6
    weight_s: float = 1.0

    def __post_init__(self):
        if self.kind not in TRUNCATION_KINDS:
            raise ContractError(f"unknown truncation {self.kind!r}; choose from {', '.join(TRUNCATION_KINDS)}")
        if self.kind != "none" and not self.tol > 0:
            raise ContractError(f"truncation tolerance must be positive, got {self.tol}")
        if self.kind.startswith("lomac") and not self.weight_s > 0:
            raise ContractError(f"LoMaC weight steepness must be positive, got {self.weight_s}")

    @property
    def lomac_mode(self):
        return self.kind.split("-", 1)[1] if self.kind.startswith("lomac") else None


def truncate(u, policy, grid):
    if policy is None or policy.kind == "none":
        return u
    if policy.kind == "hosvd":
        return hosvd(u, tol=policy.tol)
    from .lomac import WeightFunction, lomac_truncate

    return lomac_truncate(u, WeightFunction(policy.weight_s), grid, policy.lomac_mode, policy.tol)


def cfl_dt(lam, max_speeds, grid):
    """Advective step size ``lam / sum(m_i / Delta_i)``.

    With all speeds zero (pure diffusion) the step is ``lam * min(Delta_i)``.
    """
    if not lam > 0:
        raise ContractError(f"CFL factor must be positive, got {lam}")
    speeds = [abs(float(m)) for m in max_speeds]
    denom = sum(m / h for m, h in zip(speeds, grid.spacing))
    if denom == 0.0:
        return lam * min(grid.spacing)
    return lam / denom


def flux_tensors(u, spec, t):
    """Flux tensors ``E_i = a_i(t) * u`` (elementwise), recompressed at 1e-12.

    Zero flow components give ``None``.
    """
    if spec.is_burgers:
        e = hosvd(hadamard(u, u).scale(0.5), tol=FLUX_TOL)
        return (e, e, e)
    out = []
    for a in spec.flow_at(t):
        if a is None or a.norm() == 0.0:
            out.append(None)
        else:
            out.append(hosvd(hadamard(a, u), tol=FLUX_TOL))
    return tuple(out)


def reduced_augmentation(groups, tol=AUG_TOL):
    """Merge ordered bases ``[(V1, V2, V3), ...]`` into one basis per dimension.

    Per dimension the blocks are concatenated, QR-factored, and the triangular
    factor's SVD decides the rank: ``r_hat`` is the largest count of singular
    values above ``tol`` over the three dimensions, capped in each dimension by
    the size of its triangular factor.
    """
    groups = [g for g in groups if g is not None]
    if not groups:
        raise ContractError("reduced augmentation needs at least one basis")
    qs, us, counts = [], [], []
    for dim in range(3):
        blocks = [np.asarray(g[dim]) for g in groups]
        rows = {b.shape[0] for b in blocks}
        if len(rows) != 1:
            raise ContractError(f"bases for dimension {dim} have different row counts {sorted(rows)}")
        q, r = np.linalg.qr(np.hstack(blocks))
        ur, sr, _ = np.linalg.svd(r)
        qs.append(q)
        us.append(ur)
        counts.append(int(np.sum(sr > tol)))
    r_hat = max(1, max(counts))
    bases = tuple(q @ ur[:, :min(r_hat, ur.shape[1])] for q, ur in zip(qs, us))
    return bases, r_hat


@dataclass
class RhsTerm:
    """``coef * core x_1 f_1 x_2 f_2 x_3 f_3`` with raw (non-orthonormal) factors."""

    coef: float
    core: np.ndarray
    factors: tuple


@dataclass
class StageState:
    """Stage history of one step: solutions, flux tensors, sources and clocks."""

    solutions: list
    fluxes: list
    sources: dict
    times: list

    @classmethod
    def start(cls, u, spec, t):
        return cls([u], [flux_tensors(u, spec, t)], {}, [t])

    def source(self, spec, ell, t_ell):
        if ell not in self.sources:
            self.sources[ell] = spec.source_at(t_ell)
        return self.sources[ell]

    def rhs_terms(self, spec, tab, k, dt, t):
        """Known right-hand side of stage ``k`` as a list of Tucker terms."""
        ops = spec.operators
        a, ae = tab.A, tab.A_exp
        u0 = self.solutions[0]
        terms = [RhsTerm(1.0, u0.core, u0.factors)]
        for ell in range(1, k):
            w = dt * a[k, ell]
            if w == 0.0:
                continue
            ul = self.solutions[ell]
            for dim in range(3):
                f = list(ul.factors)
                f[dim] = ops.F[dim] @ f[dim]
                terms.append(RhsTerm(w, ul.core, tuple(f)))
        for ell in range(1, k + 1):
            w = -dt * ae[k, ell - 1]
            if w == 0.0:
                continue
            for dim, e in enumerate(self.fluxes[ell - 1]):
                if e is None:
                    continue
                f = list(e.factors)
                f[dim] = ops.D[dim] @ f[dim]
                terms.append(RhsTerm(w, e.core, tuple(f)))
        if spec.source is not None:
            for ell in range(1, k + 1):
                w = dt * a[k, ell]
                if w == 0.0:
                    continue
                c = self.source(spec, ell, t + tab.c[ell] * dt)
                if c is not None:
                    terms.append(RhsTerm(w, c.core, c.factors))
        return terms


def _projected_diffusion(ops, bases):
    return [v.T @ ops.F[dim] @ v for dim, v in enumerate(bases)]


def k_step(dim, terms, star, h, ops, s_star=None):
    """Updated basis for dimension ``dim`` from the K Sylvester equation.

    ``terms`` is the stage right-hand side, ``star`` the projection bases and
    ``h = a_kk * dt``.  Solves
    ``(I - h F) K - K h (S_b kron I + I kron S_a) = W`` where ``a < b`` are
    the other two dimensions and ``S = V*^T F V*``, then returns the ``Q``
    factor of ``K = Q R``.
    """
    others = [e for e in range(3) if e != dim]
    w = None
    for term in terms:
        mats = [None if e == dim else star[e].T @ term.factors[e] for e in range(3)]
        part = mode_n_product(multi_mode_product(term.core, mats), term.factors[dim], dim)
        part = term.coef * np.moveaxis(part, dim, 0)
        w = part if w is None else w + part
    if s_star is None:
        s_star = _projected_diffusion(ops, star)
    lam_f, q_f = ops.F_eig[dim]
    mu_a, q_a = sym_eig(s_star[others[0]])
    mu_b, q_b = sym_eig(s_star[others[1]])
    # w is N x r_a x r_b; diagonalize all three factors of the Sylvester operator
    wt = multi_mode_product(w, [q_f.T, q_a.T, q_b.T])
    denom = (1.0 - h * lam_f)[:, None, None] - h * (mu_a[None, :, None] + mu_b[None, None, :])
    bad = np.abs(denom) < SINGULAR_TOL * max(1.0, float(np.max(np.abs(denom))))
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise SingularityError(f"K equation for dimension {dim} is singular at {idx}", idx)
    k = multi_mode_product(wt / denom, [q_f, q_a, q_b])
    q, _ = np.linalg.qr(k.reshape(k.shape[0], -1, order="F"))
    return q


def g_rhs(terms, hat):
    """Dense projected right-hand side ``B`` on the bases ``hat``."""
    b = np.zeros(tuple(v.shape[1] for v in hat))
    for term in terms:
        b += term.coef * multi_mode_product(term.core, [v.T @ f for v, f in zip(hat, term.factors)])
    return b


def g_apply(core, s_hat, h):
    """The G-equation operator ``X - h (X x1 S_x + X x2 S_y + X x3 S_z)``."""
    out = core.copy()
    for dim in range(3):
        out -= h * mode_n_product(core, s_hat[dim], dim)
    return out


def g_step(terms, hat, h, ops, return_rhs=False):
    """Galerkin core on the bases ``hat`` via the Kronecker tensor solver."""
    b = g_rhs(terms, hat)
    s_hat = _projected_diffusion(ops, hat)
    r1, r2, r3 = b.shape
    core = tensor_linear_solve(
        a1=-h * s_hat[1],
        a2=np.eye(r3) - h * s_hat[2],
        a3=-h * s_hat[0],
        m=np.eye(r2),
        h=np.eye(r1),
        m1=np.eye(r3),
        h3=np.eye(r3),
        b=b,
    )
    if return_rhs:
        return core, b, s_hat
    return core


def first_order_predict(u, spec, t, dt, policy):
    """Factors of one backward/forward Euler step of size ``dt`` from ``u``."""
    if not dt > 0:
        raise ContractError(f"prediction step must be positive, got {dt}")
    tol = policy.tol if policy is not None and policy.kind != "none" else AUG_TOL
    v = rail_step(u, spec, tableau("imex111"), dt, TruncationPolicy("hosvd", tol), t=t)
    return v.factors


def _worker_count(threads):
    if threads is None:
        env = os.environ.get("RAIL3D_THREADS")
        threads = int(env) if env else 1
    return max(1, min(3, int(threads)))


def rail_step(u, spec, tab, dt, policy, t=0.0, monitor=None, threads=None):
    """Advance ``u`` from ``t`` to ``t + dt`` with the IMEX tableau ``tab``.

    ``policy=None`` (or kind ``"none"``) skips truncation.  ``monitor``, if
    given, is called once per stage with a dict of diagnostics (right-hand
    side and core norms, Galerkin residual, ranks).  ``threads`` (default from
    ``RAIL3D_THREADS``) sets how many K equations run concurrently.
    """
    if not dt > 0:
        raise ContractError(f"time step must be positive, got {dt}")
    if u.shape != spec.grid.shape:
        raise ContractError(f"solution shape {u.shape} differs from grid {spec.grid.shape}")
    ops = spec.operators
    state = StageState.start(u, spec, t)
    workers = _worker_count(threads)
    for k in range(1, tab.stages + 1):
        tk = t + tab.c[k] * dt
        h = tab.A[k, k] * dt
        history = [v.factors for v in reversed(state.solutions)]
        terms = state.rhs_terms(spec, tab, k, dt, t)

        dagger = first_order_predict(u, spec, t, tab.c[k] * dt, policy) if k > 1 else None
        star, _ = reduced_augmentation([dagger] + history)
        s_star = _projected_diffusion(ops, star)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                ddagger = tuple(pool.map(lambda dim: k_step(dim, terms, star, h, ops, s_star), range(3)))
        else:
            ddagger = tuple(k_step(dim, terms, star, h, ops, s_star) for dim in range(3))

        hat, r_hat = reduced_augmentation([ddagger] + history)
        core, b, s_hat = g_step(terms, hat, h, ops, return_rhs=True)
        pre = TuckerTensor3(core, hat)
        new = truncate(pre, policy, spec.grid)
        if monitor is not None:
            bn = float(np.linalg.norm(b))
            res = float(np.linalg.norm(g_apply(core, s_hat, h) - b))
            monitor({
                "stage": k,
                "t": tk,
                "rhs_norm": bn,
                "core_norm": float(np.linalg.norm(core)),
                "initial_norm": u.norm(),
                "residual": res / bn if bn > 0 else res,
                "rank_hat": pre.mlrank,
                "rank": new.mlrank,
            })
        state.solutions.append(new)
        state.times.append(tk)
        if k < tab.stages:
            state.fluxes.append(flux_tensors(new, spec, tk))
    return state.solutions[-1]
