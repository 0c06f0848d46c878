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
    LevyTriple,
    MembershipError,
    ModelSpecError,
    Power,
    STransform,
    abscissas,
    brownian_pair,
    eval_phi,
    identity,
    lamperti_stable_triple,
    membership,
    parse_model_spec,
    phi_prime_at_zero,
    rescale,
    s_transform,
    stable_example_pair,
    stable_subordinator_exponent,
)

# mpmath, 30 digits
S_STABLE_PLUS_AT_1 = 0.666840771337991922643002394211
INV_SQRT_PI = 0.564189583547756286948079451561
SQRT_PI = 1.77245385090551602729816748334


def library():
    pair = stable_example_pair(1.5, 0.4, 0.6)
    return [
        identity(),
        Affine(2.0, 0.5),
        Affine(1.0, 1.0),
        Power(0.5),
        stable_subordinator_exponent(0.5),
        stable_subordinator_exponent(0.8),
        ExponentialJumps(0.5, 1.0, 2.0),
        pair.phi_minus,
        pair.phi_plus,
        STransform(pair.phi_plus),
        rescale(stable_subordinator_exponent(0.5), 0.5),
    ]


def test_eval_examples():
    assert eval_phi(identity(), 3.0) == 3.0
    assert stable_subordinator_exponent(1.0)(5.0) == pytest.approx(5.0, rel=1e-14)
    pair = stable_example_pair(1.5, 0.4, 0.6)
    assert s_transform(pair.phi_plus)(1.0) == pytest.approx(S_STABLE_PLUS_AT_1, rel=1e-12)


def test_eval_domain():
    with pytest.raises(DomainError):
        eval_phi(Power(0.5), -0.5)
    assert eval_phi(Affine(1.0, 1.0), -1.5) == pytest.approx(-0.5)
    with pytest.raises(DomainError):
        eval_phi(identity(), -1.0 + 1j)


def test_constant_rejected():
    with pytest.raises(ValueError):
        Affine(0.0, 1.0)
    with pytest.raises(ValueError):
        ExponentialJumps(0.0, 0.0, 1.0)


def test_phi_prime_at_zero():
    assert phi_prime_at_zero(identity()) == 1.0
    assert phi_prime_at_zero(stable_subordinator_exponent(0.5)) == pytest.approx(SQRT_PI, rel=1e-10)
    assert math.isinf(phi_prime_at_zero(Power(0.5)))


def test_rescale_examples():
    r = rescale(identity(), 2.0)
    assert r(1.5) == pytest.approx(3.0)
    assert rescale(stable_subordinator_exponent(0.5), 0.5)(1.0) == pytest.approx(INV_SQRT_PI, rel=1e-13)
    assert rescale(Affine(1.0, 1.0), 2.0).abscissa_a == math.inf
    assert rescale(Affine(1.0, 1.0), 2.0).abscissa_astar == pytest.approx(0.5)
    phi = stable_subordinator_exponent(0.5)
    assert phi_prime_at_zero(rescale(phi, 0.3)) == pytest.approx(0.3 * phi_prime_at_zero(phi), rel=1e-10)


def test_s_transform_examples():
    # 1 + 2u and u are outside B_1 (negative at u = -1), so S is refused
    with pytest.raises(MembershipError):
        s_transform(Affine(2.0, 0.5))
    with pytest.raises(MembershipError):
        s_transform(identity())
    s = s_transform(Affine(1.0, 1.0))
    u = np.array([0.3, 1.0, 4.0])
    assert np.allclose(s(u), u, rtol=1e-14)
    assert s.phi0 == 0.0
    assert phi_prime_at_zero(s) == pytest.approx(1.0)
    s = s_transform(ExponentialJumps(0.5, 1.0, 2.0, killing=2.0))
    assert phi_prime_at_zero(s) == pytest.approx(2.0)


def test_membership_examples():
    assert membership(identity(), "B_rho").member
    res = membership(Affine(2.0, 0.5), "B_1")
    assert not res.member and "u = 1" in res.reason
    assert membership(stable_subordinator_exponent(0.5), "B_rho").member
    assert membership(stable_example_pair(1.5, 0.4, 0.6).phi_plus, "B_1").member
    assert not membership(Affine(1.0, 1.0), "B_rho").member


def test_abscissas():
    assert abscissas(identity()) == (math.inf, 0.0)
    assert abscissas(Affine(2.0, 0.5)) == (math.inf, 0.5)
    pp = stable_example_pair(1.5, 0.4, 0.6).phi_plus
    a, astar = abscissas(pp)
    assert astar == pytest.approx(1.0, abs=1e-12)
    # bisection on the sign of phi(-u): first zero at u = 1
    lo, hi = 0.5, 1.5
    for _ in range(60):
        mid = (lo + hi) / 2
        if pp(-mid) > 0:
            lo = mid
        else:
            hi = mid
    assert lo == pytest.approx(1.0, abs=1e-9)
    assert a >= astar


@pytest.mark.parametrize("phi", library(), ids=lambda p: type(p).__name__)
def test_library_shape(phi):
    u = np.geomspace(1e-3, 1e3, 400)
    v = np.real(phi(u))
    assert np.all(v >= -1e-12)
    assert np.all(np.diff(v) >= -1e-12 * np.abs(v[1:]))
    slopes = np.diff(v) / np.diff(u)
    assert np.all(np.diff(slopes) <= 1e-10 * np.maximum(1.0, np.abs(slopes[1:])))
    assert phi.abscissa_a >= phi.abscissa_astar >= 0


@given(st.floats(1e-3, 1e3))
@settings(max_examples=50, deadline=None)
def test_s_transform_identity(u):
    pp = stable_example_pair(1.5, 0.4, 0.6).phi_plus
    s = STransform(pp)
    assert s(u) * (u + 1) == pytest.approx(u * pp(u), rel=1e-14)


@given(st.floats(1e-3, 1e2), st.floats(0.2, 3.0))
@settings(max_examples=50, deadline=None)
def test_rescale_then_s_transform(u, beta):
    phi = Affine(1.0, 1.0)
    s = STransform(phi)
    bu = beta * u
    assert s(bu) * (bu + 1) / bu == pytest.approx(rescale(phi, beta)(u), rel=1e-13)


def test_brownian_pair_exponent():
    pair = brownian_pair()
    z = np.array([0.3, -1.2, 0.5 + 2j, -0.7 - 1j])
    assert np.allclose(pair.psi(z), 2 * z**2 - z, rtol=1e-12)
    assert pair.in_class_N
    assert pair.psi(0.0).real <= 0


def test_stable_pair_exponent():
    a, rho, b = 1.5, 0.4, 0.6
    pair = stable_example_pair(a, rho, b)
    al = a * b
    z = np.array([0.2, -0.4, 0.3 + 1.5j, 0.9 - 0.5j])
    ref = -sc.gamma(1 + al * z) / sc.gamma(1 - a * (1 - rho) + al * z) * sc.gamma(a - al * z) / sc.gamma(a * (1 - rho) - al * z)
    assert np.allclose(pair.psi(z), ref, rtol=1e-10)


def test_lamperti_triple_matches_exponent():
    a, rho = 1.5, 0.4
    triple = lamperti_stable_triple(a, rho)
    pair = stable_example_pair(a, rho, 0.6)
    for w in (0.2, 0.8, -0.3):
        assert triple.exponent(w).real == pytest.approx(pair.psi_y(w).real, rel=1e-8, abs=1e-10)


def test_levy_triple_checks():
    with pytest.raises(ValueError):
        LevyTriple(drift=-1.0)
    t = ExponentialJumps(0.0, 2.0, 3.0).triple
    assert t.tail_mass(0.0) == pytest.approx(2.0)
    assert t.tail_mass(1.0) == pytest.approx(2.0 * math.exp(-3.0))


def test_gamma_ratio_triple_matches_closed_form():
    phi = stable_subordinator_exponent(0.5)
    t = phi.triple
    from scipy import integrate

    u = 2.0
    val = integrate.quad(lambda y: -math.expm1(-u * y) * t.density(y), 0, np.inf, limit=200)[0]
    assert val == pytest.approx(phi(u), rel=1e-7)


def test_model_spec_parsing():
    spec = parse_model_spec("kind=stable_example, a=1.5, rho=0.4, b=0.6")
    assert spec.pair.alpha == pytest.approx(0.9)
    spec = parse_model_spec("# comment\nkind=stable_subordinator\nbeta=0.5\n")
    assert spec.phi(1.0) == pytest.approx(math.gamma(1.5))
    assert parse_model_spec("kind=brownian").is_pair
    for bad in ("kind=brownian, a=1", "beta=0.5", "kind=nope", "kind=power", "kind=affine, c=x", "kind=affine c=1"):
        with pytest.raises(ModelSpecError):
            parse_model_spec(bad)


def test_model_spec_overrides():
    spec = parse_model_spec("kind=stable_example, a=1.5, rho=0.4, b=0.6").with_overrides(rho=1 / 3, x=2.0)
    assert spec.params["rho"] == pytest.approx(1 / 3)
    assert spec.x == 2.0
    with pytest.raises(ModelSpecError):
        spec.with_overrides(beta=0.3)
