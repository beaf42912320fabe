import cmath
import math

import mpmath
import numpy as np
import pytest

from landau_lattice.errors import BranchCutError, CoincidenceError, DomainError, PoleError
from landau_lattice.green import (
    dq0_dz,
    dq_reg_dz,
    dq_reg_minus_dq0,
    f_kernel,
    f_kernel2,
    f_kernel_log,
    free_green,
    free_green_log,
    free_green_radial,
    gauge_phase,
    green2,
    heat_kernel,
    landau_green,
    q0,
    q_limit_extrapolated,
    q_reg,
    q_reg_minus_q0,
)

O = (0.0, 0.0)
E1 = (1.0, 0.0)


def test_heat_kernel_examples():
    assert heat_kernel(O, O, 1.0, 0.0).real == pytest.approx(1 / (4 * math.pi), rel=1e-14)
    assert abs(heat_kernel(O, O, 1.0, 1.0)) == pytest.approx(1 / (4 * math.pi * math.sinh(1.0)), rel=1e-14)
    p0 = abs(heat_kernel(O, E1, 1.0, 0.0))
    ph = abs(heat_kernel(O, E1, 1.0, 1.0))
    assert math.exp(-1.25) * p0 <= ph <= p0


def test_heat_kernel_small_field_limit():
    x, y = (0.2, -0.4), (1.1, 0.7)
    assert heat_kernel(x, y, 0.7, 1e-9) == pytest.approx(heat_kernel(x, y, 0.7, 0.0), rel=1e-8)


def test_heat_kernel_domain():
    with pytest.raises(DomainError):
        heat_kernel(O, E1, 0.0, 1.0)


def test_landau_green_small_field():
    k0 = float(mpmath.besselk(0, 1)) / (2 * math.pi)  # 0.0670081
    assert landau_green(O, E1, -1.0, 1e-6).real == pytest.approx(k0, abs=1e-6)


@pytest.mark.parametrize("z", [-1.0, -0.3 + 0.5j, 0.05])
def test_closed_form_vs_quadrature(z):
    a = landau_green(O, E1, z, 0.1)
    b = landau_green(O, E1, z, 0.1, mode="quadrature")
    assert abs(a - b) <= 1e-8 * abs(a)


def test_closed_form_against_mpmath():
    # F_h = e^{-h r^2/4} Gamma(a) U(a,1,h r^2/2)/(4 pi), a = 1/2 - z/2h
    z, h, r = -1.3, 0.7, 1.6
    a = 0.5 - z / (2 * h)
    ref = math.exp(-h * r * r / 4) * float(mpmath.gamma(a) * mpmath.hyperu(a, 1, h * r * r / 2)) / (4 * math.pi)
    assert f_kernel(O, (r, 0.0), z, h).real == pytest.approx(ref, rel=1e-10)


def test_phase_vanishes_on_vertical_separation():
    g = landau_green(O, (0.0, 1.0), -2.0, 0.8)
    assert g.imag == 0 and g.real > 0


def test_hermitian_symmetry_and_gauge():
    x, y, z, h = (0.3, -1.2), (1.7, 0.4), -1.5, 0.6
    assert abs(landau_green(y, x, z, h) - landau_green(x, y, z, h).conjugate()) < 1e-12
    assert abs(gauge_phase(x, y, h)) == pytest.approx(1.0, abs=1e-15)
    g, f = landau_green(x, y, z, h), f_kernel(x, y, z, h)
    assert abs(g - gauge_phase(x, y, h) * f) < 1e-15
    assert abs(abs(g) - f.real) < 1e-10 * f.real


def test_f_kernel_positive_and_bounds():
    z, h = -1.0, 0.5
    f = f_kernel(O, E1, z, h)
    assert f.imag == 0 and f.real > 0
    lower = math.exp(-h / 4) * free_green_radial(1, 1.0, z - h).real
    upper = free_green_radial(1, 1.0, z).real
    assert lower <= f.real <= upper


def test_green_domain_errors():
    with pytest.raises(CoincidenceError):
        landau_green(O, O, -1.0, 1.0)
    with pytest.raises(DomainError):
        landau_green(O, E1, 1.5, 1.0)
    with pytest.raises(DomainError):
        landau_green(O, E1, 1.0, 1.0)


def test_deep_energy_log_scaled():
    z, h = -1e6, 0.5
    val = f_kernel_log(O, E1, z, h)
    free = free_green_log(1, O, E1, z)
    assert val.to_complex() == 0  # underflows as a double
    assert math.isfinite(val.log_mag)
    assert val.log_mag <= free.log_mag
    assert val.log_mag == pytest.approx(free.log_mag, abs=0.01)


def test_free_green_examples():
    assert free_green(1, O, E1, -1.0).real == pytest.approx(float(mpmath.besselk(0, 1)) / (2 * math.pi), rel=1e-12)
    assert free_green(2, O, E1, -1.0).real == pytest.approx(0.0478983, abs=1e-7)
    step = 1e-5
    for z in (-1.0, -2.5 + 0.7j):
        num = (free_green(1, O, E1, z + step) - free_green(1, O, E1, z - step)) / (2 * step)
        assert abs(num - free_green(2, O, E1, z)) < 1e-6


def test_free_green_errors():
    with pytest.raises(CoincidenceError):
        free_green(1, O, O, -1.0)
    with pytest.raises(BranchCutError):
        free_green(1, O, E1, 2.0)


def test_q_reg_examples():
    assert q_reg(-1.0, 1.0).real == pytest.approx(0.0092255, abs=1e-7)
    euler = 0.5772156649015329
    # psi(1) + log(1/2) - 2 psi(1) = euler - log 2
    assert q_reg(-1.0, 1.0).real == pytest.approx((math.log(2.0) - euler) / (4 * math.pi), abs=1e-15)
    with pytest.raises(PoleError):
        q_reg(3.0, 1.0)


def test_q_reg_tends_to_q0():
    diffs = [abs(q_reg(-4.0, h) - q0(-4.0)) for h in (1.0, 0.1, 0.01)]
    assert diffs[0] > diffs[1] > diffs[2]
    assert abs(q_reg_minus_q0(-4.0, 0.1) - (q_reg(-4.0, 0.1) - q0(-4.0))) < 1e-14


@pytest.mark.parametrize("z,h", [(-2.0, 0.5), (-1.0, 1.0), (-6.0, 2.0)])
def test_q_reg_defining_limit(z, h):
    assert abs(q_reg(z, h) - q_limit_extrapolated(z, h)) < 1e-4


def test_q0_values():
    euler = 0.5772156649015329
    assert q0(-4.0).real == pytest.approx(-euler / (2 * math.pi), abs=1e-15)
    assert q0(-4.0).real == pytest.approx(-0.0918667, abs=1e-7)
    assert q0(-1.0).real == pytest.approx((math.log(4) - 2 * euler) / (4 * math.pi), abs=1e-15)
    assert q0(-1.0).real == pytest.approx(0.0184511, abs=1e-7)
    for delta in (1e-3, -1e-3):
        # -arg(-z)/4pi has the sign of delta
        assert np.sign(q0(complex(-3.0, delta)).imag) == np.sign(delta)
    with pytest.raises(BranchCutError):
        q0(2.0)


def test_q_derivatives_positive_and_consistent():
    zs = np.linspace(-30, -0.2, 40)
    for h in (0.1, 1.0):
        vals = np.array([q_reg(z, h).real for z in zs])
        assert np.all(np.diff(vals) > 0)
    vals0 = np.array([q0(z).real for z in zs])
    assert np.all(np.diff(vals0) > 0)
    z, h, step = -2.3, 0.4, 1e-5
    num = (q_reg(z + step, h) - q_reg(z - step, h)) / (2 * step)
    assert abs(num - dq_reg_dz(z, h)) < 1e-8
    assert abs(dq_reg_minus_dq0(z, h) - (dq_reg_dz(z, h) - dq0_dz(z))) < 1e-13


def test_green2_examples():
    z, h, step = -1.0, 0.5, 1e-4
    num = (landau_green(O, E1, z + step, h) - landau_green(O, E1, z - step, h)) / (2 * step)
    assert abs(green2(O, E1, z, h) - num) < 1e-6
    assert green2(O, E1, -1.5, 0.0) == pytest.approx(free_green(2, O, E1, -1.5), rel=1e-9)
    for z in (-0.5, -3.0, -2.0 + 1.0j):
        assert abs(green2((0.1, 0.2), (1.4, -0.3), z, 0.7)) <= free_green_radial(2, math.hypot(1.3, 0.5), z.real if isinstance(z, complex) else z).real


def test_f_kernel2_small_field():
    assert f_kernel2(O, E1, -2.0, 1e-7) == pytest.approx(free_green(2, O, E1, -2.0), rel=1e-6)


def test_closed_quadrature_grid_sample():
    seps = [0.3, 1.0, 2.5]
    for r in seps:
        for z in (-4.0, -0.5, 0.1):
            for h in (0.2, 1.0):
                a = f_kernel(O, (r, 0.0), z, h)
                b = f_kernel(O, (r, 0.0), z, h, mode="quadrature")
                assert abs(a - b) <= 1e-7 * abs(a)
