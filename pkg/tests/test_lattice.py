import math

import numpy as np
import pytest
from scipy import special
from scipy.optimize import brentq

from landau_lattice.errors import DomainError, NearSpectrumError
from landau_lattice.green import f_kernel, landau_green, q_reg
from landau_lattice.lattice import (
    a_coeff,
    build_q_matrix,
    envelope_tail_sum,
    l_symbol,
    lambda_coeff,
    lattice_sites,
    m_alpha,
    perturbed_green,
    q_distance,
    symbol_m,
)


def test_lambda_symmetries_and_kernel():
    z, h = -1.0, 0.5
    v = lambda_coeff(1, 0, z, h)
    assert v == lambda_coeff(0, 1, z, h) == lambda_coeff(-1, 0, z, h)
    assert v == pytest.approx(f_kernel((0, 0), (1, 0), z, h), rel=1e-10)
    assert v.real > 0 and v.imag == 0
    with pytest.raises(DomainError):
        lambda_coeff(0, 0, z, h)


def test_lambda_decay():
    z, h = -4.0, 0.5
    ratio = (lambda_coeff(3, 0, z, h) / lambda_coeff(1, 0, z, h)).real
    assert ratio < math.exp(-2 * math.sqrt(-z + h))


def test_a_coeff():
    assert a_coeff(-1.0, 0.5) == 2 * lambda_coeff(1, 0, -1.0, 0.5)
    for z in np.linspace(-10, -1, 10):
        for h in (0.1, 0.5, 1.0):
            bound = math.exp(-h / 4) * special.k0(math.sqrt(h - z)) / (2 * math.pi)
            assert a_coeff(z, h).real >= bound
    assert a_coeff(-2.0, 1e-4).real == pytest.approx(special.k0(math.sqrt(2.0)) / math.pi, abs=1e-4)


def test_positivity():
    for z in (-0.5, -3.0, -20.0):
        for m, n in ((1, 0), (1, 1), (2, 3), (5, -4)):
            assert lambda_coeff(m, n, z, 0.7).real > 0


def test_krein_matrix_small():
    mat = build_q_matrix(-2.0, 0.5, radius=2)
    assert mat.entries.shape == (25, 25)
    assert np.allclose(np.diag(mat.entries), q_reg(-2.0, 0.5), atol=0, rtol=1e-15)
    assert mat.hermiticity_defect() < 1e-12
    assert mat.covariance_defect(2) < 1e-12
    assert len(lattice_sites(2)) == 25


def test_krein_matrix_deep():
    mat = build_q_matrix(-50.0, 0.5, radius=3)
    q = abs(q_reg(-50.0, 0.5))
    off = mat.entries - np.diag(np.diag(mat.entries))
    assert np.max(np.abs(off)) < q + 1
    assert np.max(np.abs(off)) < 1e-3


def test_q_distance_large_coupling_inverse():
    d = q_distance(-5.0, 0.5, 0.01, radius=8)
    assert 95 < d.value < 100
    assert abs(d.value - d.previous) < 1e-3


def test_q_distance_continuity():
    for z in (-3.0, -7.5):
        a = q_distance(z, 0.5, 1.0, radius=4).value
        b = q_distance(z + 1e-6, 0.5, 1.0, radius=4).value
        assert abs(a - b) < 1e-4


def test_q_distance_small_at_solver_edge():
    # lower edge of the lowest band at alpha=6, flux 1/3 located by the reduced method
    d = q_distance(-11.46982, 2 * math.pi / 3, 6.0, radius=8)
    assert d.value < 1e-3


def test_symbol_m_tail_and_round_trip():
    z, h, alpha = -3.0, 0.5, 1.0
    m, tail = symbol_m(z, h, alpha, 6)
    a = a_coeff(z, h)
    assert tail.coefficient(1, 1) == pytest.approx(lambda_coeff(1, 1, z, h) / a, rel=1e-13)
    assert tail.coefficient(1, 1).real > 0
    for key in ((2, 1), (3, 0), (2, 2)):
        m_, n_ = key
        c = tail.coefficient(m_, n_)
        assert c == pytest.approx(tail.coefficient(n_, m_), rel=1e-14)
        assert c == pytest.approx(tail.coefficient(-m_, -n_), rel=1e-14)
    assert abs(m * a - (q_reg(z, h) + 1 / alpha)) < 1e-12
    assert m == m_alpha(z, h, alpha)


def test_l_symbol_constant():
    sym = l_symbol(-3.0, 0.5, 2.0, 4)
    assert sym.constant == pytest.approx(q_reg(-3.0, 0.5) + 0.5)
    assert sym.coefficient(1, 0) == pytest.approx(lambda_coeff(1, 0, -3.0, 0.5), rel=1e-13)


def test_envelope_tail_decays():
    tails = [envelope_tail_sum(-10.0, 0.5, c) for c in (6, 8, 10)]
    assert tails[0] > tails[1] > tails[2]
    assert tails[2] < 1e-8


def test_perturbed_green_properties():
    x, y = (0.3, 0.2), (1.4, -0.6)
    res8 = perturbed_green(x, y, -5.0, 0.5, 1.0, radius=8)
    res6 = perturbed_green(x, y, -5.0, 0.5, 1.0, radius=6)
    assert abs(res8.value - res6.value) < 1e-6
    swapped = perturbed_green(y, x, -5.0, 0.5, 1.0, radius=8)
    assert abs(swapped.value - res8.value.conjugate()) < 1e-12
    small = perturbed_green(x, y, -5.0, 0.5, 1e-4, radius=8).value
    free = landau_green(x, y, -5.0, 0.5)
    assert abs(small - free) < 1e-3 * abs(free)


def test_perturbed_green_errors():
    with pytest.raises(DomainError):
        perturbed_green((0.0, 0.0), (0.5, 0.5), -5.0, 0.5, 1.0)
    with pytest.raises(DomainError):
        perturbed_green((0.1, 0.2), (0.5, 0.5), 0.1, 0.5, 1.0)
    # a z where Q + 1/alpha (radius 8) is exactly singular
    h, alpha = 2 * math.pi / 3, 6.0

    def eigs(z):
        q = build_q_matrix(z, h, radius=8, check=False).entries
        return np.linalg.eigvalsh(q + np.eye(len(q)) / alpha)

    lo, hi = -11.6, -11.3
    k = int(np.nonzero(np.sign(eigs(lo)) != np.sign(eigs(hi)))[0][0])
    z0 = brentq(lambda z: eigs(z)[k], lo, hi, xtol=1e-14)
    with pytest.raises(NearSpectrumError):
        perturbed_green((0.3, 0.2), (1.4, -0.6), z0, h, alpha, radius=8)
