import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landau_lattice.errors import BranchCutError, DomainError, PoleError
from landau_lattice.specfun import (
    bessel_k,
    digamma,
    digamma_half_shift_minus_log,
    gamma_u,
    gamma_u_log,
    principal_branch,
    principal_log,
    principal_sqrt,
    trigamma,
    trigamma_half_shift_minus_inv,
)


@pytest.mark.parametrize(
    "z",
    [1.0, 2.0, 0.5, 3.7, 1e3, 1e6, 0.01, 2 + 3j, -2.5 + 0.1j, -7.5, 40 - 25j],
)
def test_digamma_against_mpmath(z):
    ref = complex(mpmath.digamma(z))
    assert abs(digamma(z) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_digamma_known_values():
    assert digamma(1.0).real == pytest.approx(-0.5772156649015329, abs=1e-15)
    assert digamma(2.0).real == pytest.approx(0.4227843351, abs=1e-10)
    assert digamma(0.5).real == pytest.approx(-1.9635100260, abs=1e-10)


@pytest.mark.parametrize("z", [0, -1, -3, -1e-13, -2 + 1e-13j])
def test_digamma_poles(z):
    with pytest.raises(PoleError):
        digamma(z)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 100), st.floats(-10, 10))
def test_digamma_recurrence(x, y):
    z = complex(x, y)
    assert abs(digamma(z + 1) - digamma(z) - 1 / z) < 1e-12


@pytest.mark.parametrize("z", [0.7, 5.0, 1 + 1j, 300.0])
def test_trigamma_against_mpmath(z):
    ref = complex(mpmath.psi(1, z))
    assert abs(trigamma(z) - ref) <= 1e-11 * abs(ref)


@pytest.mark.parametrize("w", [0.3, 10.0, 59.0, 61.0, 500.0, 1e5, 80 + 30j])
def test_half_shift_helpers_against_mpmath(w):
    mpmath.mp.dps = 40
    ref = complex(mpmath.digamma(mpmath.mpc(w) + 0.5) - mpmath.log(w))
    ref2 = complex(mpmath.psi(1, mpmath.mpc(w) + 0.5) - 1 / mpmath.mpc(w))
    mpmath.mp.dps = 15
    assert abs(digamma_half_shift_minus_log(w) - ref) <= 1e-12 * max(abs(ref), 1e-300) + 1e-15
    assert abs(trigamma_half_shift_minus_inv(w) - ref2) <= 1e-10 * abs(ref2)


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 5.0, 10.0])
def test_gamma_u_exponential_integral(x):
    ref = float(mpmath.e**x * mpmath.e1(x))
    assert gamma_u(1.0, x).real == pytest.approx(ref, rel=1e-9)


def test_gamma_u_examples():
    assert gamma_u(1, 10).real == pytest.approx(0.0915633, abs=1e-7)
    assert gamma_u(1, 1).real == pytest.approx(0.5963474, abs=1e-7)
    assert gamma_u(0.5, 2).real == pytest.approx(1.14446, abs=1e-5)


@pytest.mark.parametrize("a,x", [(0.5, 2.0), (2.3, 0.1), (0.05, 3.0), (7.0 + 2j, 1.5), (40.0, 0.5), (1.2 - 5j, 8.0)])
def test_gamma_u_against_mpmath(a, x):
    ref = complex(mpmath.gamma(a) * mpmath.hyperu(a, 1, x))
    assert abs(gamma_u(a, x) - ref) <= 1e-9 * abs(ref)


def test_gamma_u_log_deep():
    # a huge: Gamma(a) U(a,1,x) ~ 2 K0(2 sqrt(a x)); compare logs with mpmath
    a, x = 1e6, 0.25
    mpmath.mp.dps = 30
    ref = float(mpmath.log(mpmath.gamma(a) * mpmath.hyperu(a, 1, x)))
    mpmath.mp.dps = 15
    assert gamma_u_log(a, x).log_mag == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("a", [0, -0.5, -1 + 2j])
def test_gamma_u_domain(a):
    with pytest.raises(DomainError):
        gamma_u(a, 1.0)


@pytest.mark.parametrize("x", [1e-8, 0.1, 1.0, 2.0, 7.5, 30.0, 200.0])
@pytest.mark.parametrize("order", [0, 1])
def test_bessel_against_mpmath(order, x):
    ref = float(mpmath.besselk(order, x))
    assert bessel_k(order, x).real == pytest.approx(ref, rel=1e-10)


def test_bessel_known_values_and_asymptotics():
    assert bessel_k(0, 1.0).real == pytest.approx(0.4210244382, abs=1e-10)
    assert bessel_k(1, 1.0).real == pytest.approx(0.6019072302, abs=1e-10)
    ratio = bessel_k(0, 50.0).real / (math.sqrt(math.pi / 100.0) * math.exp(-50.0))
    assert 0.99 <= ratio <= 1.0


def test_bessel_positive_decreasing():
    xs = np.geomspace(0.1, 100, 300)
    for order in (0, 1):
        vals = np.array([bessel_k(order, x).real for x in xs])
        assert np.all(vals > 0)
        assert np.all(np.diff(vals) < 0)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_bessel_domain(x):
    with pytest.raises(DomainError):
        bessel_k(0, x)


def test_principal_branch_examples():
    assert principal_branch(4, "log") == pytest.approx(complex(1.3862943611, 0), abs=1e-10)
    assert principal_branch(9, "sqrt") == pytest.approx(3.0)
    assert principal_branch(1 - 1j, "sqrt") == pytest.approx(complex(1.0987, -0.4551), abs=1e-4)


@pytest.mark.parametrize("z", [-2.0, -1e-3, 0.0, -5 + 1e-14j])
def test_branch_cut(z):
    with pytest.raises(BranchCutError):
        principal_log(z)
    with pytest.raises(BranchCutError):
        principal_sqrt(z)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50))
def test_branch_round_trips(x, y):
    z = complex(x, y)
    if abs(y) < 1e-6 and x <= 1e-6:
        return
    s = principal_sqrt(z)
    assert s.real > 0
    assert abs(s * s - z) <= 1e-12 * max(1.0, abs(z))
    lg = principal_log(z)
    assert -math.pi < lg.imag < math.pi
    assert abs(cmath.exp(lg) - z) <= 1e-12 * max(1.0, abs(z))
