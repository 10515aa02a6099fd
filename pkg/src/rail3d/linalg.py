"""Dense factorizations and the structured solvers used by the integrator.

``sylvester_solve`` handles ``A X + X B = C``.  ``tensor_linear_solve`` solves
the third-order tensor equation

    (M1 kron A1 kron H + A2 kron M kron H + H3 kron M kron A3) vec(X) = vec(B)

by a Schur factorization of ``A3^T H^{-T}`` followed by one small Sylvester
equation per column (Simoncini's direct method, extended to a general
right-hand side).
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import ContractError, ShapeError, SingularityError
from .tucker import matricize, tensorize

SYM_TOL = 1e-10
SINGULAR_TOL = 1e-14


def qr_reduced(m):
    """Reduced QR: ``m = Q R`` with ``Q`` of ``min(rows, cols)`` orthonormal columns."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[1] < 1:
        raise ShapeError(f"qr_reduced needs a matrix with at least one column, got {m.shape}")
    return np.linalg.qr(m, mode="reduced")


def is_symmetric(m, tol=SYM_TOL):
    m = np.asarray(m)
    if m.shape[0] != m.shape[1]:
        return False
    scale = max(float(np.max(np.abs(m))), np.finfo(float).tiny) if m.size else 1.0
    return bool(np.max(np.abs(m - m.T.conj()), initial=0.0) <= tol * scale)


def sym_eig(m):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"sym_eig needs a square matrix, got {m.shape}")
    if not is_symmetric(m):
        raise ContractError("sym_eig called on a non-symmetric matrix")
    return np.linalg.eigh(0.5 * (m + m.T))


def _check_square(name, m, n=None):
    if m.ndim != 2 or m.shape[0] != m.shape[1] or (n is not None and m.shape[0] != n):
        want = f"{n}x{n}" if n is not None else "square"
        raise ShapeError(f"{name} must be {want}, got {m.shape}")


def _sylvester_eig(ea, eb, c):
    alpha, ua = ea
    beta, ub = eb
    denom = alpha[:, None] + beta[None, :]
    scale = np.max(np.abs(alpha), initial=0.0) + np.max(np.abs(beta), initial=0.0)
    bad = np.abs(denom) < SINGULAR_TOL * max(scale, 1.0)
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        raise SingularityError(f"Sylvester operator singular at eigenpair ({i}, {j})", (i, j))
    ct = ua.conj().T @ c @ ub
    return ua @ (ct / denom) @ ub.conj().T


def _sylvester_schur(a, b, c):
    # Bartels-Stewart with complex Schur forms: Ta Y + Y Tb = F, column by column
    ta, qa = sla.schur(a.astype(complex), output="complex")
    tb, qb = sla.schur(b.astype(complex), output="complex")
    f = qa.conj().T @ c @ qb
    da = np.diag(ta)
    scale = np.max(np.abs(da), initial=0.0) + np.max(np.abs(np.diag(tb)), initial=0.0)
    y = np.zeros_like(f, dtype=complex)
    eye = np.eye(a.shape[0])
    for j in range(b.shape[0]):
        shift = tb[j, j]
        small = np.abs(da + shift) < SINGULAR_TOL * max(scale, 1.0)
        if small.any():
            i = int(np.argmax(small))
            raise SingularityError(f"Sylvester operator singular at eigenpair ({i}, {j})", (i, j))
        rhs = f[:, j] - y[:, :j] @ tb[:j, j]
        y[:, j] = sla.solve_triangular(ta + shift * eye, rhs, lower=False)
    return qa @ y @ qb.conj().T


def sylvester_solve(a, b, c, eig_a=None, eig_b=None):
    """Solve ``A X + X B = C``.

    Symmetric ``A`` and ``B`` go through eigendecompositions (which callers
    may pass in precomputed as ``(eigenvalues, eigenvectors)``); anything
    else falls back to a complex Schur / Bartels-Stewart sweep.  Real inputs
    give a real result.
    """
    c = np.asarray(c)
    p, q = c.shape
    if eig_a is None:
        a = np.asarray(a)
        _check_square("A", a, p)
    if eig_b is None:
        b = np.asarray(b)
        _check_square("B", b, q)
    real = not np.iscomplexobj(c)
    if eig_a is None and is_symmetric(a) and not np.iscomplexobj(a):
        eig_a = sym_eig(a)
    if eig_b is None and is_symmetric(b) and not np.iscomplexobj(b):
        eig_b = sym_eig(b)
    if eig_a is not None and eig_b is not None:
        real = real and not (np.iscomplexobj(eig_a[0]) or np.iscomplexobj(eig_b[0]))
        x = _sylvester_eig(eig_a, eig_b, c)
    else:
        if eig_a is not None:
            a = (eig_a[1] * eig_a[0]) @ eig_a[1].conj().T
        if eig_b is not None:
            b = (eig_b[1] * eig_b[0]) @ eig_b[1].conj().T
        real = real and not (np.iscomplexobj(a) or np.iscomplexobj(b))
        x = _sylvester_schur(np.asarray(a), np.asarray(b), c)
    if real and np.iscomplexobj(x):
        x = x.real
    return x


def _is_identity(m):
    return m.shape[0] == m.shape[1] and np.allclose(m, np.eye(m.shape[0]), rtol=0.0, atol=1e-14)


def tensor_linear_solve(a1, a2, a3, m, h, m1, h3, b, return_info=False):
    """Direct solver for the Kronecker-structured third-order equation.

    Shapes: ``a3, h`` act on axis 0 (``n1 x n1``); ``a1, m`` on axis 1;
    ``a2, m1, h3`` on axis 2.  In tensor form the equation reads
    ``X x1 H x2 A1 x3 M1 + X x1 H x2 M x3 A2 + X x1 A3 x2 M x3 H3 = B``.
    """
    b = np.asarray(b)
    if b.ndim != 3:
        raise ShapeError(f"right-hand side must be third order, got shape {b.shape}")
    n1, n2, n3 = b.shape
    mats = dict(a1=a1, a2=a2, a3=a3, m=m, h=h, m1=m1, h3=h3)
    mats = {k: np.asarray(v) for k, v in mats.items()}
    for k, n in (("a3", n1), ("h", n1), ("a1", n2), ("m", n2), ("a2", n3), ("m1", n3), ("h3", n3)):
        _check_square(k, mats[k], n)
    a1, a2, a3, m, h, m1, h3 = (mats[k] for k in ("a1", "a2", "a3", "m", "h", "m1", "h3"))

    h_inv_t = np.linalg.solve(h, np.eye(n1)).T
    s = a3.T @ h_inv_t
    symmetric = is_symmetric(s) and not np.iscomplexobj(s)
    if symmetric:
        lam, q = sym_eig(s)
        r = np.diag(lam)
    else:
        r, q = sla.schur(s.astype(complex), output="complex")

    g = matricize(b, 0).T @ h_inv_t @ q  # (n2*n3) x n1
    left = np.linalg.solve(m, a1)
    m1_inv_t = np.linalg.solve(m1, np.eye(n3)).T
    right_base = a2.T @ m1_inv_t
    right_shift = h3.T @ m1_inv_t
    m_inv = np.linalg.solve(m, np.eye(n2))

    eig_left = sym_eig(left) if is_symmetric(left) else None
    eig_right = None
    if _is_identity(right_shift) and is_symmetric(right_base):
        eig_right = sym_eig(right_base)

    dtype = complex if (np.iscomplexobj(r) or np.iscomplexobj(q)) else float
    z = np.zeros((n2 * n3, n1), dtype=dtype)
    for j in range(n1):
        gj = g[:, j].reshape((n2, n3), order="F")
        rhs = m_inv @ gj
        if j > 0:
            w = (z[:, :j] @ r[:j, j]).reshape((n2, n3), order="F")
            rhs = rhs - w @ h3.T
        rhs = rhs @ m1_inv_t
        try:
            if eig_right is not None:
                zj = sylvester_solve(left, None, rhs, eig_a=eig_left,
                                     eig_b=(eig_right[0] + r[j, j], eig_right[1]))
            else:
                zj = sylvester_solve(left, r[j, j] * right_shift + right_base, rhs, eig_a=eig_left)
        except SingularityError as exc:
            raise SingularityError(f"tensor equation singular at column {j}: {exc}", j) from exc
        z[:, j] = zj.reshape(-1, order="F")

    x1 = q.conj() @ z.T
    imag = 0.0
    if np.iscomplexobj(x1):
        imag = float(np.max(np.abs(x1.imag), initial=0.0))
        if not (np.iscomplexobj(b) or any(np.iscomplexobj(v) for v in mats.values())):
            x1 = x1.real
    x = tensorize(x1, 0, (n1, n2, n3))
    if return_info:
        return x, {"symmetric_path": symmetric, "max_imag": imag}
    return x


def assemble_tensor_operator(a1, a2, a3, m, h, m1, h3):
    """Dense ``M1 kron A1 kron H + A2 kron M kron H + H3 kron M kron A3`` (test oracle)."""
    return np.kron(m1, np.kron(a1, h)) + np.kron(a2, np.kron(m, h)) + np.kron(h3, np.kron(m, a3))
