import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rail3d.errors import ContractError
from rail3d.imex import tableau
from rail3d.integrator import TruncationPolicy, cfl_dt, rail_step
from rail3d.lomac import (
    GAS_R, WeightFunction, lomac_project, lomac_truncate, maxwellian, moment_tensor, moments,
    qcm_maxwellian, relative_entropy,
)
from rail3d.problems import problem
from rail3d.spectral import Grid3
from rail3d.tucker import hosvd, random_tucker

seeds = st.integers(min_value=0, max_value=2 ** 31)
GRID = Grid3.cube(16, -4.0, 4.0)


def _positive(seed, rank=3):
    r = np.random.default_rng(seed)
    x = GRID.nodes(0)
    base = maxwellian(GRID, 2.0, (0.1, -0.2, 0.0), 2.0)
    noise = random_tucker(r, GRID.shape, (rank, rank, rank))
    from rail3d.tucker import tucker_sum
    return tucker_sum([(1.0, base.core, base.factors), (1e-3, noise.core, noise.factors)]), x


def _rel(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


def test_moments_of_dense_oracle():
    f, _ = _positive(0)
    dense = f.full()
    x, y, z = GRID.mesh()
    dv = GRID.cell_volume
    m = moments(f, GRID)
    assert np.isclose(m.n, dense.sum() * dv)
    assert np.isclose(m.nu[1], (y * dense).sum() * dv)
    assert np.isclose(m.E, 0.5 * ((x ** 2 + y ** 2 + z ** 2) * dense).sum() * dv)
    assert moment_tensor(f, GRID).shape == (3, 3, 3)


@pytest.mark.parametrize("mode,count", [("mass", 1), ("momentum", 4), ("energy", 5)])
@given(seed=seeds, s=st.floats(0.2, 2.0))
@settings(max_examples=15)
def test_projection_carries_moments(mode, count, seed, s):
    f, _ = _positive(seed)
    f1, f2 = lomac_project(f, WeightFunction(s), GRID, mode)
    m, m1, m2 = (moments(g, GRID).as_array()[:count] for g in (f, f1, f2))
    assert _rel(m1, m) < 1e-12
    assert np.max(np.abs(m2)) < 1e-12 * np.max(np.abs(m))
    k = {"mass": 1, "momentum": 2, "energy": 3}[mode]
    assert f1.mlrank == (k, k, k)


@pytest.mark.parametrize("mode,count", [("mass", 1), ("momentum", 4), ("energy", 5)])
@given(seed=seeds, tol=st.floats(1e-8, 1e-1))
@settings(max_examples=15)
def test_truncation_conserves(mode, count, seed, tol):
    f, _ = _positive(seed, rank=4)
    g = lomac_truncate(f, WeightFunction(1.0), GRID, mode, tol)
    assert _rel(moments(g, GRID).as_array()[:count], moments(f, GRID).as_array()[:count]) <= 1e-11
    k = {"mass": 1, "momentum": 2, "energy": 3}[mode]
    _, f2 = lomac_project(f, WeightFunction(1.0), GRID, mode)
    rest = hosvd(f2, tol=tol, ref_norm=f.norm())
    assert all(a <= b + k for a, b in zip(g.mlrank, rest.mlrank))


def test_truncation_small_tol_is_identity():
    f, _ = _positive(3)
    g = lomac_truncate(f, WeightFunction(1.0), GRID, "energy", 1e-15)
    assert np.max(np.abs(g.full() - f.full())) <= 1e-11 * np.max(np.abs(f.full()))


def test_dfp_initial_side_by_side():
    # LoMaC keeps the moments where plain HOSVD at the same tolerance loses energy
    spec = problem("dfp", n=48)
    f, g = spec.initial, spec.grid
    m0 = moments(f, g).as_array()
    lo = moments(lomac_truncate(f, WeightFunction(1.0), g, "energy", 1e-6), g).as_array()
    hs = moments(hosvd(f, tol=1e-6), g)
    assert _rel(lo, m0) <= 1e-11
    assert abs(hs.E - m0[4]) / abs(m0[4]) > 1e-8


def test_dfp_after_one_step_side_by_side():
    spec = problem("dfp", n=48)
    g = spec.grid
    dt = cfl_dt(0.9, spec.max_speeds(0.0), g)
    f = rail_step(spec.initial, spec, tableau("imex222"), dt, TruncationPolicy("none"))
    m0 = moments(f, g).as_array()
    lo = moments(lomac_truncate(f, WeightFunction(1.0), g, "energy", 1e-6), g).as_array()
    hs = moments(hosvd(f, tol=1e-6), g)
    assert _rel(lo, m0) <= 1e-11
    assert abs(hs.E - m0[4]) / abs(m0[4]) > 1e-8


def test_weight_contract_and_underflow():
    with pytest.raises(ContractError):
        WeightFunction(0.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        WeightFunction(50.0).factors(Grid3.cube(8, -8.0, 8.0))
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
    with pytest.raises(ContractError):
        lomac_project(_positive(0)[0], WeightFunction(1.0), GRID, "spin")


def test_maxwellian_temperature_convention():
    # v_th = sqrt(2 R T) = 1 at T = 3
    assert np.isclose(2 * GAS_R * 3.0, 1.0)
    g = Grid3.cube(64, -8.0, 8.0)
    m = moments(maxwellian(g, 1.5, (0.3, 0.0, -0.2), 2.0), g)
    assert np.isclose(m.n, 1.5) and np.allclose(m.u, (0.3, 0.0, -0.2))
    assert np.isclose(m.temperature(), 2.0)


def test_qcm_matches_discrete_moments():
    spec = problem("dfp", n=24)
    target = moments(spec.initial, spec.grid)
    fm, info = qcm_maxwellian(target, spec.grid, return_info=True)
    assert _rel(moments(fm, spec.grid).as_array(), target.as_array()) < 1e-12
    assert info["iterations"] >= 1 and info["shift"] > 0


def test_qcm_contract():
    from rail3d.lomac import Moments
    with pytest.raises(ContractError):
        qcm_maxwellian(Moments(-1.0, (0.0, 0.0, 0.0), 1.0), GRID)
    with pytest.raises(ContractError):
        qcm_maxwellian(Moments(1.0, (2.0, 0.0, 0.0), 1.0), GRID)


def test_relative_entropy():
    g = Grid3.cube(32, -6.0, 6.0)
    fm = maxwellian(g, 1.0, (0.0, 0.0, 0.0), 3.0)
    assert abs(relative_entropy(fm, fm, g)) < 1e-14
    other = maxwellian(g, 1.0, (0.5, 0.0, 0.0), 3.0)
    # frozen: KL between equal-temperature Maxwellians is n |du|^2 / (2 R T)
    assert np.isclose(relative_entropy(other, fm, g), 0.25, rtol=1e-6)
