"""Third-order tensors in dense and Tucker form.

Dense tensors are plain ``numpy`` arrays of shape ``(N1, N2, N3)``.  All
flattening uses the column-major convention (first index fastest), so that

    vec(G x1 V1 x2 V2 x3 V3) == kron(V3, kron(V2, V1)) @ vec(G)

holds literally.  Axes are 0-based throughout the Python API.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError, ShapeError

ORTHO_TOL = 1e-12


def _check_axis(n):
    if n not in (0, 1, 2):
        raise ShapeError(f"axis must be 0, 1 or 2, got {n!r}")


def mode_n_product(t, m, n):
    """Multiply tensor ``t`` along axis ``n`` by matrix ``m``.

    The result has ``m.shape[0]`` entries along axis ``n``:
    ``out[.., i', ..] = sum_i t[.., i, ..] * m[i', i]``.
    """
    _check_axis(n)
    t = np.asarray(t)
    m = np.asarray(m)
    if t.ndim != 3:
        raise ShapeError(f"expected a third-order tensor, got ndim={t.ndim}")
    if m.ndim != 2 or m.shape[1] != t.shape[n]:
        raise ShapeError(
            f"matrix of shape {m.shape} cannot act on axis {n} of size {t.shape[n]}"
        )
    out = np.tensordot(m, t, axes=(1, n))
    return np.moveaxis(out, 0, n)


def multi_mode_product(t, mats):
    """Apply one matrix per axis; ``None`` entries leave that axis alone."""
    for n, m in enumerate(mats):
        if m is not None:
            t = mode_n_product(t, m, n)
    return t


def matricize(t, n):
    """Mode-``n`` unfolding: the mode-``n`` fibers become columns.

    Column ordering is the Kronecker one, e.g. for ``n=0`` the column index of
    ``t[i, j, k]`` is ``j + k * N2``.
    """
    _check_axis(n)
    t = np.asarray(t)
    if t.ndim != 3:
        raise ShapeError(f"expected a third-order tensor, got ndim={t.ndim}")
    return np.moveaxis(t, n, 0).reshape(t.shape[n], -1, order="F")


def tensorize(m, n, shape):
    """Inverse of :func:`matricize`."""
    _check_axis(n)
    shape = tuple(int(s) for s in shape)
    m = np.asarray(m)
    rest = [s for i, s in enumerate(shape) if i != n]
    if m.shape != (shape[n], rest[0] * rest[1]):
        raise ShapeError(f"matrix of shape {m.shape} does not unfold a tensor of shape {shape}")
    t = m.reshape((shape[n], rest[0], rest[1]), order="F")
    return np.moveaxis(t, 0, n)


def vectorize(t):
    t = np.asarray(t)
    if t.ndim != 3:
        raise ShapeError(f"expected a third-order tensor, got ndim={t.ndim}")
    return t.reshape(-1, order="F")


def unvectorize(v, shape):
    v = np.asarray(v)
    if v.size != int(np.prod(shape)):
        raise ShapeError(f"vector of length {v.size} cannot fill shape {tuple(shape)}")
    return v.reshape(shape, order="F")


def orthonormality_defect(v):
    v = np.asarray(v)
    return float(np.max(np.abs(v.T @ v - np.eye(v.shape[1])))) if v.shape[1] else 0.0


@dataclass(frozen=True)
class TuckerTensor3:
    """Core tensor with three orthonormal factor matrices."""

    core: np.ndarray
    factors: tuple

    def __post_init__(self):
        core = np.asarray(self.core, dtype=float)
        if core.ndim != 3:
            raise ShapeError(f"core must be third order, got shape {core.shape}")
        if len(self.factors) != 3:
            raise ShapeError("a Tucker tensor needs exactly three factors")
        factors = tuple(np.asarray(v, dtype=float) for v in self.factors)
        for n, v in enumerate(factors):
            if v.ndim != 2 or v.shape[1] != core.shape[n]:
                raise ShapeError(
                    f"factor {n} of shape {v.shape} does not match core extent {core.shape[n]}"
                )
            if v.shape[1] > v.shape[0]:
                raise ShapeError(f"factor {n} has more columns than rows: {v.shape}")
            defect = orthonormality_defect(v)
            if defect > ORTHO_TOL:
                raise ContractError(f"factor {n} is not orthonormal (defect {defect:.2e})")
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "factors", factors)

    @property
    def mlrank(self):
        return tuple(self.core.shape)

    @property
    def shape(self):
        return tuple(v.shape[0] for v in self.factors)

    def full(self):
        return reconstruct(self)

    def norm(self):
        return float(np.linalg.norm(self.core))

    def scale(self, alpha):
        return TuckerTensor3(alpha * self.core, self.factors)

    @classmethod
    def from_raw(cls, core, factors):
        """Build from arbitrary (non-orthonormal) factors via reduced QR."""
        core = np.asarray(core, dtype=float)
        qs, rs = [], []
        for v in factors:
            q, r = np.linalg.qr(np.asarray(v, dtype=float))
            qs.append(q)
            rs.append(r)
        return cls(multi_mode_product(core, rs), tuple(qs))

    @classmethod
    def rank_one(cls, scale, vectors):
        """``scale * a o b o c`` for arbitrary nonzero vectors."""
        facs, s = [], float(scale)
        for a in vectors:
            a = np.asarray(a, dtype=float).reshape(-1)
            na = np.linalg.norm(a)
            if na == 0.0:
                raise ContractError("rank-one factor vector is zero")
            facs.append((a / na)[:, None])
            s *= na
        return cls(np.full((1, 1, 1), s), tuple(facs))

    @classmethod
    def zeros(cls, shape):
        facs = []
        for n in shape:
            e = np.zeros((n, 1))
            e[0, 0] = 1.0
            facs.append(e)
        return cls(np.zeros((1, 1, 1)), tuple(facs))


def reconstruct(t, order=(0, 1, 2)):
    """Dense tensor ``core x1 V1 x2 V2 x3 V3`` (mode order is irrelevant)."""
    out = t.core
    for n in order:
        out = mode_n_product(out, t.factors[n], n)
    return out


def tucker_sum(terms):
    """Exact sum of Tucker tensors (block-diagonal core, stacked factors).

    ``terms`` is a sequence of ``(coef, core, factors)`` with arbitrary factors;
    the result is re-orthonormalized by QR.
    """
    terms = [(c, np.asarray(g), fs) for c, g, fs in terms]
    ranks = np.array([g.shape for _, g, _ in terms])
    tot = ranks.sum(axis=0)
    core = np.zeros(tuple(tot))
    off = np.zeros(3, dtype=int)
    for (c, g, _), r in zip(terms, ranks):
        core[off[0]:off[0] + r[0], off[1]:off[1] + r[1], off[2]:off[2] + r[2]] = c * g
        off += r
    factors = [np.hstack([fs[n] for _, _, fs in terms]) for n in range(3)]
    return TuckerTensor3.from_raw(core, factors)


def _rank_for_tol(s, budget):
    # smallest r with sqrt(sum_{i>=r} s_i^2) <= budget
    tail = np.sqrt(np.cumsum((s ** 2)[::-1]))[::-1]
    keep = np.nonzero(tail > budget)[0]
    return max(1, int(keep[-1]) + 1) if keep.size else 1


def hosvd_dense(t, tol=None, rank=None, ref_norm=None, return_spectra=False):
    """Truncated HOSVD of a dense tensor.

    Exactly one of ``tol`` (relative) or ``rank`` must be given.

    With ``rank`` the classic truncated HOSVD is used: each factor holds the
    leading left singular vectors of the corresponding unfolding of ``t``.
    With ``tol`` the sequentially truncated variant is used: mode ``n`` keeps
    the fewest singular vectors whose discarded tail satisfies
    ``sqrt(sum sigma_i^2) <= tol * ref_norm`` (``ref_norm`` defaults to
    ``||t||_F``), computed on the partially projected core.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim != 3:
        raise ShapeError(f"expected a third-order tensor, got ndim={t.ndim}")
    if (tol is None) == (rank is None):
        raise ContractError("give exactly one of tol or rank")
    spectra = []
    if rank is not None:
        rank = tuple(int(r) for r in rank)
        if any(r < 1 for r in rank):
            raise ContractError(f"target rank must be positive, got {rank}")
        factors = []
        for n in range(3):
            u, s, _ = np.linalg.svd(matricize(t, n), full_matrices=False)
            r = min(rank[n], u.shape[1])
            factors.append(u[:, :r])
            spectra.append(s)
        core = multi_mode_product(t, [v.T for v in factors])
    else:
        if tol < 0:
            raise ContractError(f"tolerance must be nonnegative, got {tol}")
        budget = tol * (np.linalg.norm(t) if ref_norm is None else ref_norm)
        core = t
        factors = []
        for n in range(3):
            u, s, _ = np.linalg.svd(matricize(core, n), full_matrices=False)
            r = _rank_for_tol(s, budget)
            factors.append(u[:, :r])
            spectra.append(s)
            core = mode_n_product(core, u[:, :r].T, n)
    out = TuckerTensor3(core, tuple(factors))
    return (out, spectra) if return_spectra else out


def hosvd(t, tol=None, rank=None, ref_norm=None):
    """Truncated HOSVD of a dense array or a :class:`TuckerTensor3`.

    Tucker inputs are compressed through their (small) core, which is exact
    because the factors are orthonormal.
    """
    if isinstance(t, TuckerTensor3):
        if ref_norm is None:
            ref_norm = t.norm()
        if rank is not None:
            rank = tuple(min(r, c) for r, c in zip(rank, t.mlrank))
        small = hosvd_dense(t.core, tol=tol, rank=rank, ref_norm=ref_norm)
        return TuckerTensor3(
            small.core, tuple(v @ g for v, g in zip(t.factors, small.factors))
        )
    return hosvd_dense(t, tol=tol, rank=rank, ref_norm=ref_norm)


def kron3(a, b):
    """Kronecker product of third-order tensors.

    ``out[i1*p1 + j1, i2*p2 + j2, i3*p3 + j3] = a[i1, i2, i3] * b[j1, j2, j3]``
    with ``(p1, p2, p3) = b.shape``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    out = np.einsum("ace,bdf->abcdef", a, b)
    return out.reshape(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1], a.shape[2] * b.shape[2])


def khatri_rao_t(a, b):
    """Transpose Khatri-Rao product: row ``n`` is ``kron(a[n], b[n])``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"row counts differ: {a.shape[0]} vs {b.shape[0]}")
    return (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1)


def hadamard_raw(a, b):
    """Structural elementwise product: Kronecker core, Khatri-Rao factors."""
    if a.shape != b.shape:
        raise ShapeError(f"grid shapes differ: {a.shape} vs {b.shape}")
    return kron3(a.core, b.core), tuple(khatri_rao_t(fa, fb) for fa, fb in zip(a.factors, b.factors))


def hadamard(a, b):
    """Elementwise product of two Tucker tensors, re-orthonormalized.

    The Khatri-Rao factors are QR-factored and the triangular factors are
    contracted straight into the two cores, so the Kronecker core is never
    materialized.
    """
    if a.shape != b.shape:
        raise ShapeError(f"grid shapes differ: {a.shape} vs {b.shape}")
    qs, rs = [], []
    for fa, fb in zip(a.factors, b.factors):
        q, r = np.linalg.qr(khatri_rao_t(fa, fb))
        qs.append(q)
        rs.append(r.reshape(r.shape[0], fa.shape[1], fb.shape[1]))
    z = np.tensordot(rs[0], a.core, axes=([1], [0]))  # p c b e
    z = np.tensordot(z, b.core, axes=([1], [0]))  # p b e d f
    z = np.tensordot(z, rs[1], axes=([1, 3], [1, 2]))  # p e f q
    core = np.tensordot(z, rs[2], axes=([1, 2], [1, 2]))  # p q s
    return TuckerTensor3(core, tuple(qs))


def project_core(core, factors, bases, ops=None):
    """``core x_n (bases[n].T @ ops[n] @ factors[n])`` for every axis.

    ``bases[n]`` may be ``None`` (keep the full, unprojected factor); ``ops``
    is an optional per-axis operator applied to the factor first.
    """
    mats = []
    for n in range(3):
        f = factors[n]
        if ops is not None and ops[n] is not None:
            f = ops[n] @ f
        mats.append(f if bases[n] is None else bases[n].T @ f)
    return multi_mode_product(core, mats)


def random_tucker(rng, shape, mlrank):
    """Random Tucker tensor with Gaussian core and Haar-like factors."""
    facs = tuple(np.linalg.qr(rng.standard_normal((n, r)))[0] for n, r in zip(shape, mlrank))
    return TuckerTensor3(rng.standard_normal(tuple(mlrank)), facs)


def block_max_abs(t: TuckerTensor3, block: int = 16) -> float:
    """max |t| computed slab by slab along the last axis."""
    v1, v2, v3 = t.factors
    partial = mode_n_product(mode_n_product(t.core, v1, 0), v2, 1)
    out = 0.0
    for k0 in range(0, v3.shape[0], block):
        slab = np.tensordot(partial, v3[k0:k0 + block].T, axes=(2, 0))
        out = max(out, float(np.max(np.abs(slab))))
    return out


def stack_bases(mats: Sequence[np.ndarray]) -> np.ndarray:
    return np.hstack([np.asarray(m) for m in mats])
