import numpy as np
import pytest

from rail3d.errors import ContractError
from rail3d.lomac import moments
from rail3d.problems import DFP_MAXWELLIANS, PROBLEM_IDS, problem
from rail3d.reference import _divergence, _laplace

MANUFACTURED = ("advdiff", "rot-z", "rot-t", "burgers-manufactured")


@pytest.mark.parametrize("name", PROBLEM_IDS)
def test_every_problem_builds(name):
    spec = problem(name, n=8)
    assert spec.initial.shape == (8, 8, 8)
    assert set(spec.defaults) >= {"scheme", "lam", "tol", "trunc", "weight_s", "tf"}
    assert all(s >= 0 for s in spec.max_speeds(0.0, spec.initial))


@pytest.mark.parametrize("name", MANUFACTURED)
def test_exact_solution_satisfies_equation(name):
    # d/dt u = -div(a u) + lap u + source on the collocation nodes
    spec = problem(name, n=64 if name.startswith("rot") else 32)
    t, h = 0.2, 1e-4
    u = spec.exact(t)
    dudt = (spec.exact(t + h) - spec.exact(t - h)) / (2 * h)
    rhs = -_divergence(u, spec, t) + _laplace(u, spec.operators)
    if spec.source is not None:
        rhs = rhs + spec.source_at(t).full()
    assert np.max(np.abs(dudt - rhs)) <= 1e-6 * max(1.0, np.max(np.abs(rhs)))


@pytest.mark.parametrize("name", MANUFACTURED)
def test_initial_matches_exact(name):
    spec = problem(name, n=16)
    assert np.allclose(spec.initial.full(), spec.exact(0.0), atol=1e-13)


def test_time_dependent_flow_scales():
    spec = problem("rot-t", n=8)
    a0 = spec.flow_at(0.5)[0].full()
    a1 = spec.flow_at(1.0)[0].full()
    assert np.allclose(2 * a0, a1)
    assert spec.time_dependent_flow and not problem("rot-z", n=8).time_dependent_flow


def test_burgers_speeds_need_solution():
    spec = problem("burgers-gradient", n=8)
    assert spec.is_burgers
    with pytest.raises(ContractError):
        spec.max_speeds(0.0)
    assert np.isclose(spec.max_speeds(0.0, spec.initial)[0], np.max(np.abs(spec.initial.full())))


def test_dfp_initial_moments_resolved():
    # frozen targets: density pi^{3/2}, zero bulk velocity, temperature 3;
    # the narrow component needs a fine grid before the sums reach them
    spec = problem("dfp", n=160)
    m = moments(spec.initial, spec.grid)
    assert np.isclose(m.n, np.pi ** 1.5, rtol=1e-12)
    assert np.allclose(m.u, 0.0, atol=1e-12)
    assert np.isclose(m.temperature(), 3.0, rtol=1e-12)
    assert len(DFP_MAXWELLIANS) == 2


def test_unknown_problem():
    with pytest.raises(ContractError):
        problem("nope")
