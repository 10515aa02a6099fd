"""Fast oracle checks run by ``rail3d selftest``."""
from __future__ import annotations

import sys

import numpy as np


def _checks(rng):
    from .imex import SCHEMES, tableau, validate
    from .integrator import TruncationPolicy, rail_step
    from .linalg import assemble_tensor_operator, sylvester_solve, tensor_linear_solve
    from .lomac import WeightFunction, lomac_truncate, moments
    from .problems import problem
    from .reference import reference_step
    from .spectral import fourier_diff_matrices
    from .tucker import hadamard, hosvd_dense, random_tucker, vectorize

    def mode_product():
        t = rng.standard_normal((4, 3, 2))
        m = rng.standard_normal((5, 4))
        from .tucker import mode_n_product

        ref = np.einsum("ji,ikl->jkl", m, t)
        return float(np.max(np.abs(mode_n_product(t, m, 0) - ref))), 1e-13

    def hosvd_bound():
        t = rng.standard_normal((8, 7, 6))
        approx, spectra = hosvd_dense(t, rank=(3, 3, 3), return_spectra=True)
        bound = np.sqrt(sum(np.sum(s[3:] ** 2) for s in spectra))
        return float(np.linalg.norm(t - approx.full()) - bound), 1e-12

    def hadamard_product():
        a = random_tucker(rng, (9, 8, 7), (3, 2, 2))
        b = random_tucker(rng, (9, 8, 7), (2, 3, 2))
        return float(np.max(np.abs(hadamard(a, b).full() - a.full() * b.full()))), 1e-11

    def sylvester():
        a = rng.standard_normal((6, 6)) + 6 * np.eye(6)
        b = rng.standard_normal((4, 4)) + 6 * np.eye(4)
        c = rng.standard_normal((6, 4))
        x = sylvester_solve(a, b, c)
        return float(np.linalg.norm(a @ x + x @ b - c) / np.linalg.norm(c)), 1e-10

    def tensor_solve():
        n = 4
        mats = [rng.standard_normal((n, n)) + 4 * np.eye(n) for _ in range(7)]
        b = rng.standard_normal((n, n, n))
        x = tensor_linear_solve(*mats, b)
        op = assemble_tensor_operator(*mats)
        return float(np.linalg.norm(op @ vectorize(x) - vectorize(b)) / np.linalg.norm(b)), 1e-10

    def fourier():
        d, lap = fourier_diff_matrices(32, -np.pi, np.pi)
        x = -np.pi + 2 * np.pi * np.arange(32) / 32
        err = max(np.max(np.abs(d @ np.sin(x) - np.cos(x))), np.max(np.abs(lap @ np.sin(2 * x) + 4 * np.sin(2 * x))))
        return float(err), 1e-10

    def tables():
        return float(sum(len(validate(tableau(s))) for s in SCHEMES)), 0.5

    def rail_vs_dense():
        spec = problem("advdiff", n=8)
        worst = 0.0
        for s in SCHEMES:
            v = rail_step(spec.initial, spec, tableau(s), 0.05, TruncationPolicy("hosvd", 1e-12))
            r = reference_step(spec.initial.full(), spec, tableau(s), 0.05)
            worst = max(worst, float(np.max(np.abs(v.full() - r))))
        return worst, 1e-8

    def lomac_moments():
        spec = problem("dfp", n=16)
        f = spec.initial
        g = lomac_truncate(f, WeightFunction(1.0), spec.grid, "energy", 1e-3)
        m0, m1 = moments(f, spec.grid).as_array(), moments(g, spec.grid).as_array()
        return float(np.max(np.abs(m1 - m0)) / np.max(np.abs(m0))), 1e-11

    return [
        ("mode-n product vs loop oracle", mode_product),
        ("HOSVD discarded-singular-value bound", hosvd_bound),
        ("Tucker Hadamard product vs dense", hadamard_product),
        ("Sylvester residual (Schur path)", sylvester),
        ("Kronecker tensor solver residual", tensor_solve),
        ("Fourier differentiation on sin", fourier),
        ("IMEX table invariants", tables),
        ("low-rank step vs dense step (N=8)", rail_vs_dense),
        ("LoMaC energy-mode moment drift", lomac_moments),
    ]


def run_all(seed=0, stream=None):
    """Run every check, print one line each, return the number of failures."""
    stream = stream or sys.stdout
    rng = np.random.default_rng(seed)
    failures = 0
    for name, fn in _checks(rng):
        try:
            value, limit = fn()
            ok = value <= limit
            msg = f"{value:.3e} (limit {limit:.0e})"
        except Exception as exc:  # report and keep going
            ok, msg = False, f"raised {type(exc).__name__}: {exc}"
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {msg}", file=stream)
    return failures
