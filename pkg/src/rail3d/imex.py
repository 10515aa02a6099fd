"""Butcher tables of the stiffly accurate IMEX Runge-Kutta schemes.

Both tables are stored padded to ``(s+1) x (s+1)``: the implicit one has a
zero first row and column, the explicit one is strictly lower triangular.
Stage ``k`` (``1..s``) uses implicit row ``k`` and explicit row ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as Fr

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class ImexTableau:
    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    A_exp: np.ndarray
    b_exp: np.ndarray
    c_exp: np.ndarray
    order: int

    @property
    def stages(self):
        return self.A.shape[0] - 1


def _arr(rows):
    return np.array([[float(x) for x in r] for r in rows])


def _build(name, a, b, a_exp, b_exp, order):
    a = _arr(a)
    a_exp = _arr(a_exp)
    c = a.sum(axis=1)
    return ImexTableau(name, a, np.array([float(x) for x in b]), c,
                       a_exp, np.array([float(x) for x in b_exp]), a_exp.sum(axis=1), order)


def _imex111():
    return _build("imex111", [[0, 0], [0, 1]], [0, 1], [[0, 0], [1, 0]], [1, 0], 1)


def _imex222():
    nu = 1.0 - np.sqrt(2.0) / 2.0
    delta = 1.0 - 1.0 / (2.0 * nu)
    return _build(
        "imex222",
        [[0, 0, 0], [0, nu, 0], [0, 1 - nu, nu]],
        [0, 1 - nu, nu],
        [[0, 0, 0], [nu, 0, 0], [delta, 1 - delta, 0]],
        [delta, 1 - delta, 0],
        2,
    )


def _imex443():
    h = Fr(1, 2)
    a = [
        [0, 0, 0, 0, 0],
        [0, h, 0, 0, 0],
        [0, Fr(1, 6), h, 0, 0],
        [0, -h, h, h, 0],
        [0, Fr(3, 2), -Fr(3, 2), h, h],
    ]
    a_exp = [
        [0, 0, 0, 0, 0],
        [h, 0, 0, 0, 0],
        [Fr(11, 18), Fr(1, 18), 0, 0, 0],
        [Fr(5, 6), -Fr(5, 6), h, 0, 0],
        [Fr(1, 4), Fr(7, 4), Fr(3, 4), -Fr(7, 4), 0],
    ]
    return _build("imex443", a, a[-1], a_exp, a_exp[-1], 3)


_TABLES = {"imex111": _imex111, "imex222": _imex222, "imex443": _imex443}
SCHEMES = tuple(_TABLES)


def tableau(name):
    try:
        return _TABLES[name]()
    except KeyError:
        raise ContractError(f"unknown IMEX scheme {name!r}; choose from {', '.join(SCHEMES)}") from None


def validate(t, tol=1e-14):
    """Return a list of human-readable invariant violations (empty if valid)."""
    out = []
    s = t.stages
    if t.A.shape != (s + 1, s + 1) or t.A_exp.shape != (s + 1, s + 1):
        return [f"tables must be {(s + 1, s + 1)}"]
    if np.any(t.A[0] != 0) or np.any(t.A[:, 0] != 0):
        out.append("implicit table must have zero first row and column")
    if np.any(np.triu(t.A, 1) != 0):
        out.append("implicit table is not lower triangular")
    if np.any(np.triu(t.A_exp) != 0):
        out.append("explicit table is not strictly lower triangular")
    if np.any(np.diag(t.A)[1:] <= 0):
        out.append("implicit diagonal entries must be positive")
    if abs(t.c[-1] - 1.0) > tol:
        out.append(f"stiff accuracy: c_s = {t.c[-1]!r} != 1")
    if np.max(np.abs(t.A[-1] - t.b)) > tol:
        out.append("stiff accuracy: last implicit row differs from b")
    if np.max(np.abs(t.A.sum(axis=1) - t.c)) > tol:
        out.append("implicit row sums differ from c")
    if np.max(np.abs(t.A_exp.sum(axis=1) - t.c_exp)) > tol:
        out.append("explicit row sums differ from its abscissae")
    if np.max(np.abs(t.c - t.c_exp)) > tol:
        out.append("implicit and explicit abscissae differ")
    return out
