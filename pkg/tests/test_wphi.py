import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sc

from ssextinction.bernstein import (
    Affine,
    DomainError,
    ExponentialJumps,
    STransform,
    identity,
    stable_example_pair,
    stable_subordinator_exponent,
)
from ssextinction.wphi import (
    NonConvergenceError,
    WPhiFunction,
    euler_product,
    residual,
    w_phi_eval,
    w_phi_integer,
    w_phi_reciprocal,
)

# W_{phi-}(1/2) for the stable example (1.5, 0.4, 0.6): mpmath Euler product at
# N = 5000..40000 with three Richardson steps
W_STABLE_MINUS_HALF = 1.616124268733575087

GRID = (np.linspace(0.5, 3.0, 6)[:, None] + 1j * np.linspace(-5, 5, 11)[None, :]).ravel()


def registered():
    pair = stable_example_pair(1.5, 0.4, 0.6)
    return [
        identity(),
        Affine(2.0, 0.5),
        stable_subordinator_exponent(0.5),
        ExponentialJumps(0.5, 1.0, 2.0),
        pair.phi_minus,
        pair.phi_plus,
        STransform(pair.phi_plus),
    ]


def test_integer_values():
    assert w_phi_integer(identity(), 4) == 24.0
    assert w_phi_integer(identity(), 0) == 1.0
    assert w_phi_integer(identity(), 170, log=True) == pytest.approx(sc.gammaln(171), rel=1e-14)
    with pytest.raises(OverflowError):
        w_phi_integer(identity(), 200)


def test_euler_product_matches_gamma():
    w = euler_product(identity(), GRID)
    ref = sc.gamma(GRID)
    assert np.max(np.abs(w - ref) / np.abs(ref)) <= 1e-8


def test_w_of_one_is_one():
    for phi in registered():
        assert abs(w_phi_eval(phi, 1.0) - 1.0) < 1e-12


@pytest.mark.parametrize("phi", registered(), ids=lambda p: type(p).__name__)
def test_functional_equation_residual(phi):
    assert np.max(residual(phi, GRID)) <= 1e-8
    assert np.max(residual(phi, GRID, strategy="euler_product")) <= 1e-8


@pytest.mark.parametrize("phi", registered(), ids=lambda p: type(p).__name__)
def test_two_routes_agree(phi):
    a = np.asarray(w_phi_eval(phi, GRID))
    b = np.asarray(w_phi_eval(phi, GRID, strategy="euler_product"))
    assert np.max(np.abs(a - b) / np.abs(a)) <= 1e-8


def test_stable_minus_reference_value():
    phi = stable_example_pair(1.5, 0.4, 0.6).phi_minus
    assert w_phi_eval(phi, 0.5).real == pytest.approx(W_STABLE_MINUS_HALF, rel=1e-10)
    assert w_phi_eval(phi, 0.5, strategy="euler_product").real == pytest.approx(W_STABLE_MINUS_HALF, rel=1e-10)


def test_barnes_ladder_recurrence():
    a, rho, b = 1.5, 0.4, 0.6
    al = a * b
    phi = stable_example_pair(a, rho, b).phi_minus
    u = np.linspace(0.1, 3.0, 30)
    lhs = np.asarray(w_phi_eval(phi, u + 1))
    rhs = sc.gamma(1 + al * u) / sc.gamma(1 - a * (1 - rho) + al * u) * np.asarray(w_phi_eval(phi, u))
    assert np.max(np.abs(lhs - rhs) / np.abs(lhs)) <= 1e-8


def test_domain():
    with pytest.raises(DomainError):
        w_phi_eval(identity(), 0.0)
    with pytest.raises(DomainError):
        w_phi_eval(Affine(2.0, 0.5), -0.6)


def test_reciprocal_continuation():
    # 1/Gamma is entire: 1/W(z) for z in (-1, 0] comes from one recurrence step
    phi = Affine(1.0, 1.0)  # W(z) = Gamma(z + 1)
    z = np.array([-0.5, -0.9 + 0.3j])
    assert np.allclose(w_phi_reciprocal(phi, z), sc.rgamma(z + 1), rtol=1e-10)
    assert np.allclose(w_phi_reciprocal(identity(), np.array([1e-13 + 0j])), [0.0], atol=1e-12)


def test_non_convergence_reports_iterates():
    with pytest.raises(NonConvergenceError) as info:
        euler_product(stable_subordinator_exponent(0.5), 2.0 + 1j, tol=1e-20, max_log2_n=6)
    assert info.value.iterates is not None


def test_wrapper():
    w = WPhiFunction(identity())
    assert w(3.0) == pytest.approx(2.0)
    assert w.reciprocal(3.0) == pytest.approx(0.5)
    assert w.domain == 0.0


@given(st.floats(0.3, 4.0), st.floats(-3.0, 3.0))
@settings(max_examples=30, deadline=None)
def test_recurrence_property(re, im):
    phi = stable_subordinator_exponent(0.5)
    z = complex(re, im)
    lhs = w_phi_eval(phi, z + 1)
    rhs = phi(z) * w_phi_eval(phi, z)
    assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


@given(st.floats(0.2, 3.0))
@settings(max_examples=20, deadline=None)
def test_log_convex_on_positive_axis(x):
    phi = stable_subordinator_exponent(0.5)
    h = 1e-2
    lw = [math.log(w_phi_eval(phi, x + k * h).real) for k in (-1, 0, 1)]
    assert lw[0] + lw[2] - 2 * lw[1] >= -1e-10
