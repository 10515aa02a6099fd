"""Benchmark problem registry.

Every flow field, source term, initial condition and exact solution is built
directly in Tucker form from separable one-dimensional pieces.
"""
from __future__ import annotations

import numpy as np

from .errors import ContractError
from .integrator import BURGERS, ProblemSpec
from .lomac import maxwellian_factors
from .spectral import Grid3, build_operators
from .tucker import TuckerTensor3, hosvd, tucker_sum

PROBLEM_IDS = (
    "advdiff",
    "rot-z",
    "rot-z-rank",
    "rot-diag",
    "rot-t",
    "rot-t-rank",
    "dfp",
    "burgers-manufactured",
    "burgers-gradient",
)

# Two Maxwellians whose sum has density pi^{3/2}, zero bulk velocity and T = 3.
DFP_MAXWELLIANS = (
    {"n": 0.8037121822811545, "u": (-0.3403147128006618, 0.0, 0.0), "T": 0.1033754314349305},
    {"n": 4.764615814550553, "u": (0.05740548475117823, 0.0, 0.0), "T": 3.442950196134546},
)
DFP_D = 0.5


def separable_sum(terms, compress=1e-14):
    """Tucker tensor for ``sum coef * fx o fy o fz`` (1-D arrays per term)."""
    raw = []
    for coef, fx, fy, fz in terms:
        g = np.full((1, 1, 1), float(coef))
        raw.append((1.0, g, tuple(np.asarray(f, dtype=float)[:, None] for f in (fx, fy, fz))))
    t = tucker_sum(raw)
    return hosvd(t, tol=compress) if compress else t


def _grid(n, a, b):
    return Grid3.cube(n, a, b)


def _advdiff(n, d):
    d = 1.0 / 6.0 if d is None else d
    grid = _grid(n, -np.pi, np.pi)
    x = [grid.nodes(i) for i in range(3)]
    one = np.ones(n)

    def exact_tucker(t):
        terms = [(1.0, one, one, one)]
        for k in (1, 2):
            s = [np.sin(k * (xi - t)) for xi in x]
            terms.append((np.exp(-3.0 * d * k * k * t), *s))
        return separable_sum(terms)

    flow_field = TuckerTensor3.rank_one(1.0, (one, one, one))
    return dict(
        grid=grid, d=(d, d, d),
        flow=lambda t: (flow_field, flow_field, flow_field),
        initial=exact_tucker(0.0),
        exact=lambda t: exact_tucker(t).full(),
        defaults=dict(scheme="imex443", lam=0.5, tol=1e-6, trunc="lomac-mass", weight_s=4.0, tf=0.5),
    )


def _rotation_z(n, d, speed, time_dependent, manufactured):
    grid = _grid(n, -2.0 * np.pi, 2.0 * np.pi)
    x, y, z = (grid.nodes(i) for i in range(3))
    one = np.ones(n)
    a1 = TuckerTensor3.rank_one(-speed, (one, y, one))
    a2 = TuckerTensor3.rank_one(speed, (x, one, one))

    def flow(t):
        s = t if time_dependent else 1.0
        return (a1.scale(s), a2.scale(s), None)

    out = dict(grid=grid, d=(d, d, d), flow=flow, time_dependent_flow=time_dependent)
    if manufactured:
        gx, gy, gz = np.exp(-x ** 2), np.exp(-2.0 * y ** 2), np.exp(-3.0 * z ** 2)

        def exact_tucker(t):
            return TuckerTensor3.rank_one(np.exp(-3.0 * d * t), (gx, gy, gz))

        def source(t):
            e = np.exp(-3.0 * d * t)
            rot = -2.0 * speed * (t if time_dependent else 1.0)
            return separable_sum([
                (e * rot, x * gx, y * gy, gz),
                (e * 9.0 * d, gx, gy, gz),
                (-e * 4.0 * d, x ** 2 * gx, gy, gz),
                (-e * 16.0 * d, gx, y ** 2 * gy, gz),
                (-e * 36.0 * d, gx, gy, z ** 2 * gz),
            ])

        out.update(initial=exact_tucker(0.0), exact=lambda t: exact_tucker(t).full(), source=source,
                   defaults=dict(scheme="imex443", lam=1.0, tol=1e-8, trunc="hosvd", weight_s=1.0, tf=0.5))
    else:
        out.update(initial=TuckerTensor3.rank_one(1.0, (np.exp(-x ** 2), np.exp(-9.0 * y ** 2), np.exp(-z ** 2))))
    return out


def _rot_diag(n, d):
    d = 1.0 / 12.0 if d is None else d
    grid = _grid(n, -2.0 * np.pi, 2.0 * np.pi)
    x, y, z = (grid.nodes(i) for i in range(3))
    one = np.ones(n)
    a = (
        separable_sum([(-1.0, one, y, one), (1.0, one, one, z)]),
        separable_sum([(1.0, x, one, one), (-1.0, one, one, z)]),
        separable_sum([(-1.0, x, one, one), (1.0, one, y, one)]),
    )
    u0 = TuckerTensor3.rank_one(1.0, (
        np.exp(-2.0 * (x - np.pi / 2) ** 2), np.exp(-2.0 * (y + np.pi / 2) ** 2), np.exp(-2.0 * z ** 2)))
    return dict(grid=grid, d=(d, d, d), flow=lambda t: a, initial=u0,
                defaults=dict(scheme="imex443", lam=0.5, tol=1e-6, trunc="lomac-mass", weight_s=1.0, tf=np.pi))


def _dfp(n, d):
    d = DFP_D if d is None else d
    grid = _grid(n, -8.0, 8.0)
    v = [grid.nodes(i) for i in range(3)]
    drift = tuple(TuckerTensor3.rank_one(-1.0, [v[i] if j == i else np.ones(n) for j in range(3)])
                  for i in range(3))
    terms = []
    for m in DFP_MAXWELLIANS:
        scale, vecs = maxwellian_factors(grid, m["n"], m["u"], m["T"])
        terms.append((scale, *vecs))
    f0 = separable_sum(terms, compress=None)
    return dict(grid=grid, d=(d, d, d), flow=lambda t: drift, initial=f0,
                defaults=dict(scheme="imex222", lam=0.9, tol=1e-4, trunc="lomac-energy", weight_s=1.0, tf=10.0))


def _sin_sum(grid, k, amp):
    # amp * sin(k (x + y + z)) expanded by angle addition: multilinear rank (2, 2, 2)
    s = [np.sin(k * grid.nodes(i)) for i in range(3)]
    c = [np.cos(k * grid.nodes(i)) for i in range(3)]
    return separable_sum([
        (amp, s[0], c[1], c[2]),
        (amp, c[0], s[1], c[2]),
        (amp, c[0], c[1], s[2]),
        (-amp, s[0], s[1], s[2]),
    ])


def _burgers(n, d, manufactured):
    grid = _grid(n, -np.pi, np.pi)
    if manufactured:
        d = 0.5 if d is None else d

        def exact_tucker(t):
            return _sin_sum(grid, 1.0, np.exp(-3.0 * d * t))

        return dict(grid=grid, d=(d, d, d), flow=BURGERS, initial=exact_tucker(0.0),
                    exact=lambda t: exact_tucker(t).full(),
                    source=lambda t: _sin_sum(grid, 2.0, 1.5 * np.exp(-6.0 * d * t)),
                    defaults=dict(scheme="imex443", lam=0.5, tol=1e-6, trunc="lomac-mass", weight_s=5.0, tf=0.3))
    d = 1.0 if d is None else d
    return dict(grid=grid, d=(d, d, d), flow=BURGERS, initial=_sin_sum(grid, 1.0, 1.0),
                defaults=dict(scheme="imex222", lam=0.9, tol=1e-5, trunc="lomac-mass", weight_s=5.0, tf=1.0))


def problem(name, n=64, d=None):
    """Build the :class:`ProblemSpec` for benchmark ``name`` on an ``n^3`` grid.

    ``d`` overrides the (isotropic) diffusion coefficient.
    """
    if name not in PROBLEM_IDS:
        raise ContractError(f"unknown problem {name!r}; choose from {', '.join(PROBLEM_IDS)}")
    n = int(n)
    if name == "advdiff":
        parts = _advdiff(n, d)
    elif name in ("rot-z", "rot-t"):
        parts = _rotation_z(n, 1.0 / 3.0 if d is None else d, 1.0, name == "rot-t", True)
    elif name in ("rot-z-rank", "rot-t-rank"):
        parts = _rotation_z(n, 1.0 / 12.0 if d is None else d, 2.0, name == "rot-t-rank", False)
        if name == "rot-z-rank":
            parts["defaults"] = dict(scheme="imex443", lam=0.45, tol=1e-6, trunc="lomac-mass",
                                     weight_s=1.0, tf=np.pi)
        else:
            parts["defaults"] = dict(scheme="imex443", lam=0.9, tol=1e-6, trunc="lomac-mass",
                                     weight_s=2.0, tf=2.5)
    elif name == "rot-diag":
        parts = _rot_diag(n, d)
    elif name == "dfp":
        parts = _dfp(n, d)
    else:
        parts = _burgers(n, d, name == "burgers-manufactured")
    grid = parts.pop("grid")
    dd = parts.pop("d")
    return ProblemSpec(name=name, grid=grid, operators=build_operators(grid, dd), d=dd, **parts)
