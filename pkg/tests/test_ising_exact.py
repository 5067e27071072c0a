import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermal_mbqc.ising_exact import (
    CriticalPointError,
    IsingParams,
    NonConvergenceError,
    correlation_matrix,
    critical_temperature_2d,
    even_row_correlation,
    even_row_correlation_bruteforce,
    fch_error_probability,
    fch_hadamard_fidelity,
    fourier_coeff,
    fourier_coeffs,
    nearest_neighbor_correlation,
    spontaneous_magnetization,
    symbol_c,
)

TC = critical_temperature_2d()


def params_for_z(z):
    return IsingParams(math.atanh(z))


def test_critical_temperature():
    assert TC == pytest.approx(2.269185314213022, abs=1e-12)
    assert math.sinh(2 / TC) == pytest.approx(1.0, abs=1e-12)
    assert 2 < TC < 2.5


def test_params_validation():
    with pytest.raises(ValueError):
        IsingParams(-1.0)
    with pytest.raises(ValueError):
        IsingParams.from_temperature(-0.5)
    assert IsingParams.from_temperature(0).beta == math.inf
    assert IsingParams.from_temperature(2.0).z == pytest.approx(math.tanh(0.5))


def test_symbol_z0_and_z1():
    th = np.linspace(-np.pi, np.pi, 17)
    np.testing.assert_allclose(symbol_c(th, IsingParams(0.0)), -np.exp(-1j * th), atol=1e-15)
    assert symbol_c(np.pi / 2, params_for_z(1 - 1e-12)) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("T", [0.8, 1.5, 2.0, 2.5, 3.5, 10.0])
def test_symbol_unimodular(T):
    th = np.linspace(-np.pi, np.pi, 101)[:-1] + 0.01
    np.testing.assert_allclose(np.abs(symbol_c(th, IsingParams.from_temperature(T))), 1.0, atol=1e-12)


def test_symbol_signals_singular_point():
    # at criticality the radicand vanishes at theta = 0
    with pytest.raises(CriticalPointError):
        symbol_c(0.0, IsingParams.from_temperature(TC))


def test_fourier_z0():
    C = fourier_coeffs(IsingParams(0.0), 4)
    expect = np.zeros(9)
    expect[4 - 1] = -1.0
    np.testing.assert_allclose(C, expect, atol=1e-12)


def test_fourier_z_to_one():
    C = fourier_coeffs(IsingParams.from_temperature(0.05), 3)
    assert C[3] == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(np.delete(C, 3))) < 1e-10


def test_fourier_c0_at_tc_is_nearest_neighbour():
    p = IsingParams.from_temperature(TC)
    assert fourier_coeff(0, p) == pytest.approx(math.sqrt(2) / 2, abs=1e-8)


@pytest.mark.parametrize("T", [1.0, 1.8, 2.2, 2.3, 2.6, 3.5, 6.0])
def test_c0_matches_onsager_energy(T):
    p = IsingParams.from_temperature(T)
    assert fourier_coeff(0, p) == pytest.approx(nearest_neighbor_correlation(p), abs=1e-9)


def test_quadrature_argument_validation():
    with pytest.raises(ValueError):
        fourier_coeffs(IsingParams(0.3), 2, quadrature_points=300)
    with pytest.raises(ValueError):
        fourier_coeffs(IsingParams(0.3), 2, quadrature_points=128)


def test_nonconvergence_signalled():
    with pytest.raises(NonConvergenceError):
        fourier_coeffs(IsingParams.from_temperature(2.2692), 2, tol=1e-16, max_points=2**17)


def test_even_row_limits():
    assert even_row_correlation([3, 4], IsingParams.from_temperature(0.05)) == pytest.approx(1.0, abs=1e-10)
    assert even_row_correlation([3, 4], IsingParams(0.0)) == pytest.approx(0.0, abs=1e-12)


def test_even_row_four_point_matches_bruteforce():
    p = IsingParams.from_temperature(2.0)
    assert even_row_correlation([1, 3, 5, 7], p) == pytest.approx(even_row_correlation_bruteforce([1, 3, 5, 7], p), abs=1e-10)


def test_matrix_indexing():
    # rows and columns both run over the union of {j_{2n-1}+1 .. j_{2n}}
    p = IsingParams.from_temperature(2.0)
    M = correlation_matrix([1, 3, 6, 7], p)
    C = fourier_coeffs(p, 5)
    s = [2, 3, 7]
    for a in range(3):
        for b in range(3):
            assert M[a, b] == pytest.approx(C[s[b] - s[a] + 5])


def test_two_point_distance_one_is_c0():
    p = IsingParams.from_temperature(2.7)
    assert even_row_correlation([5, 6], p) == pytest.approx(fourier_coeff(0, p), abs=1e-14)


def test_position_validation():
    p = IsingParams(0.4)
    for bad in ([1], [1, 2, 3], [3, 1], [1, 1]):
        with pytest.raises(ValueError):
            even_row_correlation(bad, p)
    with pytest.raises(ValueError):
        even_row_correlation_bruteforce([1, 10], p)


@st.composite
def row_specs(draw):
    k = draw(st.integers(1, 3))
    gaps = draw(st.lists(st.integers(1, 3), min_size=2 * k, max_size=2 * k))
    pos = np.cumsum(gaps).tolist()
    m = sum(pos[2 * i + 1] - pos[2 * i] for i in range(k))
    if m > 6:
        pos = pos[:2]
    return pos


@settings(max_examples=60, deadline=None)
@given(spec=row_specs(), z=st.floats(0.0, 0.9))
def test_determinant_equals_permutation_sum(spec, z):
    p = params_for_z(z)
    assert even_row_correlation(spec, p) == pytest.approx(even_row_correlation_bruteforce(spec, p), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(spec=row_specs(), z=st.floats(0.0, 0.95))
def test_griffiths_positivity(spec, z):
    v = even_row_correlation(spec, params_for_z(z))
    assert -1e-10 <= v <= 1 + 1e-10


@pytest.mark.parametrize("spec", [[1, 2], [1, 3], [1, 2, 4, 5], [2, 4, 6, 8, 10, 12]])
def test_correlators_nonincreasing_in_temperature(spec):
    T = np.linspace(0.5, 5.0, 46)
    v = [even_row_correlation(spec, IsingParams.from_temperature(t)) for t in T]
    assert np.all(np.diff(v) <= 1e-9)


@pytest.mark.parametrize("T", [1.0, 2.0, 2.25, 2.3, 3.0])
def test_coefficients_are_real(T):
    # the imaginary residue check inside the quadrature raises otherwise
    C = fourier_coeffs(IsingParams.from_temperature(T), 12)
    assert C.dtype.kind == "f"


def test_spontaneous_magnetization():
    assert spontaneous_magnetization(IsingParams.from_temperature(1e-3)) == pytest.approx(1.0)
    assert spontaneous_magnetization(IsingParams.from_temperature(TC)) == 0.0
    assert spontaneous_magnetization(IsingParams.from_temperature(3.0)) == 0.0
    # Yang's formula at T = 2
    assert spontaneous_magnetization(IsingParams.from_temperature(2.0)) == pytest.approx((1 - math.sinh(1.0) ** -4) ** 0.125)


def test_spontaneous_magnetization_is_long_distance_limit():
    # <s_0 s_r> -> M^2 along a row deep in the ordered phase
    p = IsingParams.from_temperature(1.8)
    far = even_row_correlation([1, 40], p)
    assert far == pytest.approx(spontaneous_magnetization(p) ** 2, abs=1e-8)


def test_fch_error_probability():
    assert fch_error_probability(IsingParams(0.0)) == 0.5
    assert fch_error_probability(IsingParams.from_temperature(0.57)) == pytest.approx(0.029, abs=0.0015)
    assert fch_error_probability(IsingParams(math.inf)) == 0.0


def test_fch_hadamard_fidelity_limits():
    assert fch_hadamard_fidelity(3, IsingParams(math.inf)) == 1.0
    assert fch_hadamard_fidelity(3, IsingParams(0.0)) == 0.25
    with pytest.raises(ValueError):
        fch_hadamard_fidelity(0, IsingParams(1.0))


def test_fch_hadamard_fidelity_sampling_oracle():
    # i.i.d. Z errors with p: each projector parity is even with probability (1 + (1-2p)^l)/2
    p = IsingParams.from_temperature(0.3)
    l = 4
    q = fch_error_probability(p)
    rng = np.random.default_rng(11)
    n = 400_000
    ex = rng.random((n, l)) < q
    ez = rng.random((n, l)) < q
    ok = (ex.sum(axis=1) % 2 == 0) & (ez.sum(axis=1) % 2 == 0)
    est, err = ok.mean(), ok.std() / math.sqrt(n)
    assert abs(est - fch_hadamard_fidelity(l, p)) < 4 * err + 1e-12
