"""Periodic grids and Fourier spectral-collocation differentiation matrices."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .linalg import sym_eig


def fourier_diff_matrices(n, a, b):
    """First and second derivative matrices on ``n`` equispaced periodic nodes.

    Closed-form even-``n`` matrices (Trefethen, *Spectral Methods in MATLAB*,
    ch. 3) rescaled from period ``2*pi`` to period ``b - a``.
    """
    n = int(n)
    if n < 4 or n % 2:
        raise ContractError(f"Fourier collocation needs an even N >= 4, got {n}")
    if not b > a:
        raise ContractError(f"empty domain [{a}, {b}]")
    h = 2.0 * np.pi / n
    k = np.arange(n)
    diff = k[:, None] - k[None, :]
    sign = np.where(diff % 2 == 0, 1.0, -1.0)
    off = diff != 0
    half = 0.5 * h * diff
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = np.where(off, 0.5 * sign / np.tan(np.where(off, half, 1.0)), 0.0)
        d2 = np.where(off, -0.5 * sign / np.sin(np.where(off, half, 1.0)) ** 2, 0.0)
    d2[np.diag_indices(n)] = -np.pi ** 2 / (3.0 * h ** 2) - 1.0 / 6.0
    scale = 2.0 * np.pi / (b - a)
    return scale * d1, scale ** 2 * d2


@dataclass(frozen=True)
class Grid3:
    """Three uniform periodic grids; nodes exclude the right endpoint."""

    n: tuple
    lower: tuple
    upper: tuple

    def __post_init__(self):
        for n, a, b in zip(self.n, self.lower, self.upper):
            if n < 4 or n % 2:
                raise ContractError(f"grid sizes must be even and >= 4, got {self.n}")
            if not b > a:
                raise ContractError(f"empty domain [{a}, {b}]")

    @classmethod
    def cube(cls, n, a, b):
        return cls((n, n, n), (a, a, a), (b, b, b))

    @property
    def shape(self):
        return tuple(self.n)

    @property
    def spacing(self):
        return tuple((b - a) / n for n, a, b in zip(self.n, self.lower, self.upper))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def nodes(self, dim):
        n, a = self.n[dim], self.lower[dim]
        return a + np.arange(n) * self.spacing[dim]

    def mesh(self):
        return np.meshgrid(self.nodes(0), self.nodes(1), self.nodes(2), indexing="ij")


@dataclass(frozen=True)
class DiscreteOperators:
    """Per-dimension first-derivative ``D`` and scaled Laplacian ``F = d * L``.

    ``F_eig[i]`` caches the eigendecomposition of ``F[i]``; the implicit
    operators ``I - c F`` share its eigenvectors for every shift ``c``.
    """

    D: tuple
    F: tuple
    d: tuple
    F_eig: tuple = field(repr=False)


def build_operators(grid, d):
    d = tuple(float(x) for x in d)
    if len(d) != 3 or any(x < 0 for x in d):
        raise ContractError(f"diffusion coefficients must be three nonnegative numbers, got {d}")
    ds, fs, eigs = [], [], []
    for dim in range(3):
        d1, d2 = fourier_diff_matrices(grid.n[dim], grid.lower[dim], grid.upper[dim])
        f = d[dim] * d2
        ds.append(d1)
        fs.append(f)
        eigs.append(sym_eig(f))
    return DiscreteOperators(tuple(ds), tuple(fs), d, tuple(eigs))
