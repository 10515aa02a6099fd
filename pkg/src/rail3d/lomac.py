"""Moments, moment-conserving truncation and Maxwellian diagnostics.

All moment integrals are discrete sums ``sum(.) dx dy dz`` over the grid
nodes, evaluated factor by factor so the full tensor is never formed.  The
conserving projection uses the inner product ``<f, g> = sum f g / w dV`` and
the basis ``w * phi`` with ``phi`` drawn from ``1, v1, v2, v3, |v|^2``; with
that choice the weight cancels and only polynomial sums remain.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ContractError, ConvergenceError
from .tucker import TuckerTensor3, hosvd, multi_mode_product, tucker_sum

# v_th = sqrt(2 R T) = 1 at T = 3
GAS_R = 1.0 / 6.0
LOMAC_MODES = ("mass", "momentum", "energy")
_BASIS_SIZE = {"mass": 1, "momentum": 4, "energy": 5}
_FACTOR_RANK = {"mass": 1, "momentum": 2, "energy": 3}


@dataclass(frozen=True)
class Moments:
    """Discrete density ``n``, momentum ``nu`` and energy ``E = sum |v|^2 f / 2``."""

    n: float
    nu: tuple
    E: float

    @property
    def u(self):
        return tuple(m / self.n for m in self.nu)

    def temperature(self, gas_r=GAS_R):
        u2 = sum(x * x for x in self.u)
        return (2.0 * self.E / self.n - u2) / (3.0 * gas_r)

    def as_array(self):
        return np.array([self.n, *self.nu, self.E])


@dataclass(frozen=True)
class WeightFunction:
    """Separable Gaussian weight ``exp(-s |v|^2)``."""

    s: float

    def __post_init__(self):
        if not self.s > 0:
            raise ContractError(f"weight steepness must be positive, got {self.s}")

    def factors(self, grid):
        out = [np.exp(-self.s * grid.nodes(d) ** 2) for d in range(3)]
        if any(np.min(w) <= np.finfo(float).tiny for w in out):
            warnings.warn(
                f"LoMaC weight exp(-{self.s} v^2) underflows on the grid; projection may be ill-conditioned",
                RuntimeWarning,
                stacklevel=3,
            )
        return out


def moment_tensor(f, grid, order=2):
    """``m[i, j, k] = sum f x^i y^j z^k dV`` for ``i, j, k <= order``."""
    mats = []
    for d, v in enumerate(f.factors):
        x = grid.nodes(d)
        q = np.vander(x, order + 1, increasing=True) * grid.spacing[d]
        mats.append(q.T @ v)
    return multi_mode_product(f.core, mats)


def moments(f, grid):
    m = moment_tensor(f, grid)
    return Moments(
        float(m[0, 0, 0]),
        (float(m[1, 0, 0]), float(m[0, 1, 0]), float(m[0, 0, 1])),
        0.5 * float(m[2, 0, 0] + m[0, 2, 0] + m[0, 0, 2]),
    )


def _basis(mode):
    # each phi as a list of (coefficient, exponent triple)
    phis = [[(1.0, (0, 0, 0))]]
    if mode in ("momentum", "energy"):
        phis += [[(1.0, (1, 0, 0))], [(1.0, (0, 1, 0))], [(1.0, (0, 0, 1))]]
    if mode == "energy":
        phis.append([(1.0, (2, 0, 0)), (1.0, (0, 2, 0)), (1.0, (0, 0, 2))])
    return phis


def _check_mode(mode):
    if mode not in LOMAC_MODES:
        raise ContractError(f"unknown LoMaC mode {mode!r}; choose from {', '.join(LOMAC_MODES)}")


class _Projector:
    """Orthogonal projection onto ``span{w phi}`` for one grid, weight and mode."""

    def __init__(self, w, grid, mode):
        _check_mode(mode)
        self.mode = mode
        self.phis = _basis(mode)
        k = _FACTOR_RANK[mode]
        self.k = k
        wf = w.factors(grid)
        self.factors = tuple(
            wf[d][:, None] * np.vander(grid.nodes(d), k, increasing=True) for d in range(3)
        )
        # 1-D sums s_d[p] = sum w_d v^p dx_d, accumulated in extended precision
        sums = []
        for d in range(3):
            x = grid.nodes(d).astype(np.longdouble)
            wd = wf[d].astype(np.longdouble)
            sums.append([np.sum(wd * x ** p) * grid.spacing[d] for p in range(5)])
        nb = len(self.phis)
        gram = np.zeros((nb, nb), dtype=np.longdouble)
        for i, pi in enumerate(self.phis):
            for j, pj in enumerate(self.phis):
                acc = np.longdouble(0)
                for ci, ei in pi:
                    for cj, ej in pj:
                        acc += ci * cj * sums[0][ei[0] + ej[0]] * sums[1][ei[1] + ej[1]] * sums[2][ei[2] + ej[2]]
                gram[i, j] = acc
        self.gram = gram.astype(float)
        self.cho = sla.cho_factor(self.gram)
        self.grid = grid

    def coefficients(self, f):
        m = moment_tensor(f, self.grid)
        mu = np.array([sum(c * m[e] for c, e in phi) for phi in self.phis])
        return sla.cho_solve(self.cho, mu)

    def core(self, coeffs):
        g = np.zeros((self.k,) * 3)
        for c, phi in zip(coeffs, self.phis):
            for cc, e in phi:
                g[e] += c * cc
        return g

    def apply(self, f):
        return TuckerTensor3.from_raw(self.core(self.coefficients(f)), self.factors)


def lomac_project(f, w, grid, mode):
    """Split ``f = f1 + f2`` with ``f1`` the conserving projection of ``f``.

    ``f1`` carries all conserved moments of ``f`` and has multilinear rank at
    most ``(3, 3, 3)`` (``(1, 1, 1)`` for mass only); ``f2`` has none of them.
    """
    proj = _Projector(w, grid, mode)
    f1 = proj.apply(f)
    f2 = tucker_sum([(1.0, f.core, f.factors), (-1.0, f1.core, f1.factors)])
    return f1, f2


def lomac_truncate(f, w, grid, mode, tol):
    """Moment-conserving truncation ``f1 + (I - P) hosvd(f2)``.

    The remainder ``f2`` is compressed with the absolute budget ``tol * ||f||``
    per mode; whatever moments the compression reintroduces are projected out
    again.
    """
    proj = _Projector(w, grid, mode)
    c1 = proj.coefficients(f)
    f1 = TuckerTensor3.from_raw(proj.core(c1), proj.factors)
    f2 = tucker_sum([(1.0, f.core, f.factors), (-1.0, f1.core, f1.factors)])
    t2 = hosvd(f2, tol=tol, ref_norm=f.norm())
    c2 = proj.coefficients(t2)
    return tucker_sum([(1.0, proj.core(c1 - c2), proj.factors), (1.0, t2.core, t2.factors)])


def maxwellian_factors(grid, n, u, temp, gas_r=GAS_R):
    """Scale and 1-D factors of ``n (2 pi R T)^{-3/2} exp(-|v-u|^2 / (2 R T))``."""
    rt = gas_r * temp
    vecs = [np.exp(-(grid.nodes(d) - u[d]) ** 2 / (2.0 * rt)) for d in range(3)]
    return n / (2.0 * np.pi * rt) ** 1.5, vecs


def maxwellian(grid, n, u, temp, gas_r=GAS_R):
    scale, vecs = maxwellian_factors(grid, n, u, temp, gas_r)
    return TuckerTensor3.rank_one(scale, vecs)


def _maxwellian_moments(p, grid, gas_r, jac=False):
    # moments (n, nu1, nu2, nu3, E) of the discrete Maxwellian with parameters p
    n, u, temp = p[0], p[1:4], p[4]
    theta = gas_r * temp
    a, b, c = [], [], []
    for d in range(3):
        x = grid.nodes(d)
        h = grid.spacing[d]
        g = np.exp(-(x - u[d]) ** 2 / (2.0 * theta)) / np.sqrt(2.0 * np.pi * theta)
        pw = np.vander(x, 3, increasing=True) * h
        a.append(g @ pw)
        b.append((g * (x - u[d]) / theta) @ pw)
        c.append((g * (-0.5 / theta + (x - u[d]) ** 2 / (2.0 * theta ** 2))) @ pw * gas_r)

    def assemble(vecs):
        m0 = [v[0] for v in vecs]
        out = np.empty(5)
        out[0] = m0[0] * m0[1] * m0[2]
        for i in range(3):
            others = np.prod([m0[j] for j in range(3) if j != i])
            out[1 + i] = vecs[i][1] * others
        out[4] = 0.5 * sum(vecs[i][2] * np.prod([m0[j] for j in range(3) if j != i]) for i in range(3))
        return out

    base = assemble(a)
    if not jac:
        return n * base
    j = np.empty((5, 5))
    j[:, 0] = base
    for i in range(3):
        j[:, 1 + i] = n * assemble([b[d] if d == i else a[d] for d in range(3)])
    j[:, 4] = n * sum(assemble([c[d] if d == e else a[d] for d in range(3)]) for e in range(3))
    return n * base, j


def qcm_maxwellian(target, grid, gas_r=GAS_R, max_iter=20, tol=1e-13, return_info=False):
    """Maxwellian whose discrete moments match ``target`` (quadrature-corrected).

    Newton iteration on ``(n, u, T)`` starting from the continuum values
    implied by ``target``.  Raises :class:`ConvergenceError` after
    ``max_iter`` iterations.
    """
    if not target.n > 0:
        raise ContractError(f"target density must be positive, got {target.n}")
    t0 = target.temperature(gas_r)
    if not t0 > 0:
        raise ContractError(f"target temperature must be positive, got {t0}")
    goal = target.as_array()
    p0 = np.array([target.n, *target.u, t0])
    p = p0.copy()
    scale = max(float(np.max(np.abs(goal))), 1.0)
    res = np.inf
    for it in range(max_iter + 1):
        m, j = _maxwellian_moments(p, grid, gas_r, jac=True)
        r = m - goal
        res = float(np.max(np.abs(r)))
        if res <= tol * scale:
            break
        if it == max_iter:
            raise ConvergenceError(f"QCM Newton did not converge in {max_iter} iterations", res)
        p = p - np.linalg.solve(j, r)
        if not (p[0] > 0 and p[4] > 0):
            raise ConvergenceError("QCM Newton left the admissible parameter set", res)
    out = maxwellian(grid, p[0], p[1:4], p[4], gas_r)
    if return_info:
        return out, {"iterations": it, "residual": res, "params": p, "shift": float(np.max(np.abs(p - p0)))}
    return out


def relative_entropy(f, f_m, grid, floor=1e-14):
    """``sum f log(f / f_M) dV`` over nodes where ``f > floor * max f``."""
    a = f.full() if isinstance(f, TuckerTensor3) else np.asarray(f)
    b = f_m.full() if isinstance(f_m, TuckerTensor3) else np.asarray(f_m)
    mask = a > floor * np.max(a)
    if np.any(b[mask] <= 0):
        raise ContractError("reference Maxwellian must be positive where f is kept")
    return float(np.sum(a[mask] * np.log(a[mask] / b[mask])) * grid.cell_volume)
