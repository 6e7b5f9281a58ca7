import math

import numpy as np
import pytest

from cg_stepper.problem import (OdeProblem, example1, example2, example3,
                                get_problem, linear, polynomial, zero)

EXAMPLES = [example1, example2, example3]


def richardson_derivative(fn, t, h=1e-3):
    def central(h):
        return (fn(t + h) - fn(t - h)) / (2 * h)
    return (4 * central(h / 2) - central(h)) / 3


def test_example1():
    p = example1()
    assert p.dim == 1 and p.horizon == 1.0
    assert p.exact(np.array([0.0]))[0, 0] == pytest.approx(math.pi / 2, abs=1e-15)
    assert p.f(np.array([0.0]), np.array([[math.pi / 2]]))[0, 0] == pytest.approx(-1.0)
    assert p.exact(np.array([1.0]))[0, 0] == pytest.approx(2 * math.atan(math.exp(-1)), rel=1e-15)
    assert p.exact(np.array([1.0]))[0, 0] == pytest.approx(0.7050268, abs=1e-7)
    assert p.lipschitz_L == 1.0 and p.bound_CA == 1.0


def test_example2():
    p = example2()
    assert p.exact(np.array([1.0]))[0, 0] == 0.5
    assert p.f(np.array([1.0]), np.array([[0.5]]))[0, 0] == -0.5
    u = np.linspace(-3, 3, 7)[:, None]
    np.testing.assert_array_equal(p.f(np.zeros(7), u), 0.0)
    assert p.lipschitz_L is None and p.bound_CA is None
    assert not p.constants_known


def test_example3():
    p = example3()
    np.testing.assert_allclose(p.exact(np.array([0.0]))[0], [math.pi / 4, 1.0], atol=1e-15)
    u0 = np.array([[math.pi / 4, 1.0]])
    np.testing.assert_allclose(p.f(np.array([0.0]), u0)[0], [-0.5, -1.0], rtol=1e-15)
    assert p.jacobian(np.array([0.0]), u0)[0, 1, 0] == pytest.approx(-2.0, rel=1e-15)


@pytest.mark.parametrize("make", EXAMPLES + [lambda: linear(-1.0), lambda: polynomial([1, 2, 3])])
def test_exact_solution_satisfies_ode(make):
    p = make()
    t = np.linspace(0.01, p.horizon - 0.01, 100)
    du = richardson_derivative(p.exact, t)
    resid = du - p.f(t, p.exact(t))
    assert np.max(np.abs(resid)) <= 1e-10


@pytest.mark.parametrize("make", EXAMPLES)
def test_jacobian_matches_finite_differences(make):
    p = make()
    rng = np.random.default_rng(1)
    t = rng.uniform(0, 1, 20)
    u = p.exact(t) + rng.normal(scale=0.1, size=(20, p.dim))
    jac = p.jacobian(t, u)
    h = 1e-7
    for b in range(p.dim):
        e = np.zeros(p.dim)
        e[b] = h
        fd = (p.f(t, u + e) - p.f(t, u - e)) / (2 * h)
        scale = np.maximum(np.abs(jac[:, :, b]), 1.0)
        assert np.max(np.abs(fd - jac[:, :, b]) / scale) <= 1e-5


def test_selector_strings():
    assert get_problem("ex1").name == "ex1"
    assert get_problem("ex3").dim == 2
    with pytest.raises(ValueError):
        get_problem("ex4")


def test_inconsistent_exact_solution_is_rejected():
    with pytest.raises(ValueError):
        OdeProblem(name="bad", dim=1, f=lambda t, u: u, u0=[1.0], horizon=1.0,
                   exact=lambda t: np.zeros((np.size(t), 1)))


def test_invalid_constants():
    with pytest.raises(ValueError):
        OdeProblem(name="bad", dim=1, f=lambda t, u: u, u0=[1.0], horizon=1.0,
                   lipschitz_L=-1.0)
    with pytest.raises(ValueError):
        OdeProblem(name="bad", dim=2, f=lambda t, u: u, u0=[1.0], horizon=1.0)


def test_zero_problem():
    p = zero(3, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(p.f(np.zeros(2), np.ones((2, 3))), 0.0)
    np.testing.assert_array_equal(p.exact(np.array([0.3, 0.7])), [[1, 2, 3], [1, 2, 3]])
