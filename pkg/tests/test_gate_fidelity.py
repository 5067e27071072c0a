import math

import numpy as np
import pytest

from thermal_mbqc.gate_fidelity import (
    FidelityPoint,
    GateSpec,
    MonteCarloOptions,
    compute_byproduct,
    fidelity,
    fidelity_curve,
    fidelity_derivative,
)
from thermal_mbqc.ising_exact import (
    IsingParams,
    critical_temperature_2d,
    fch_hadamard_fidelity,
    nearest_neighbor_correlation,
    spontaneous_magnetization,
)
from thermal_mbqc.ising_mc import McSchedule

from .oracles import fch_fidelity_density_matrix

TC = critical_temperature_2d()


def test_gate_lengths_and_sets():
    h = GateSpec.hadamard(2)
    assert h.length == 5 and h.gate == "hadamard"
    assert h.s_x == (2, 4) and h.s_z == (1, 3)
    i = GateSpec.identity(2)
    assert i.length == 4 and i.gate == "identity"
    assert i.s_x == (2,) and i.s_z == (1, 3)
    assert GateSpec.from_name("hadamard", 3) == GateSpec.hadamard(3)
    with pytest.raises(ValueError):
        GateSpec.from_name("cnot", 1)
    with pytest.raises(ValueError):
        GateSpec.identity(0)
    with pytest.raises(ValueError):
        GateSpec(1)


def test_literal_sets():
    a, b = GateSpec(5, literal=True).projector_sets()
    assert a == (2, 4) and b == (2, 4, 6)
    assert GateSpec(5, literal=True).expansion_sets()[2] == (6,)


def test_byproduct_examples():
    assert compute_byproduct([0, 0, 0, 0]) == (0, 0)
    # r_X from positions 2, 4; r_Z from positions 1, 3
    assert compute_byproduct([1, 0, 1, 1]) == (1, 0)
    assert compute_byproduct([0, 1, 0, 0]) == (1, 0)
    assert compute_byproduct([1, 0, 0, 0]) == (0, 1)
    assert compute_byproduct([1, 1, 1]) == (1, 0)


@pytest.mark.parametrize("length", [2, 3, 4, 5, 6, 7])
@pytest.mark.parametrize("T", [0.3, 1.0, 2.5])
def test_fch_matches_density_matrix(length, T):
    spec = GateSpec(length)
    got = fidelity(spec, T, "fch").fidelity
    expect = fch_fidelity_density_matrix(length, 1 / T, spec.s_x, spec.s_z)
    assert got == pytest.approx(expect, abs=1e-10)


@pytest.mark.parametrize("l", [1, 2, 4, 6])
def test_fch_hadamard_closed_form(l):
    for T in (0.2, 0.6, 1.3, 4.0):
        p = IsingParams.from_temperature(T)
        z = math.tanh(1 / T)
        F = fidelity(GateSpec.hadamard(l), T, "fch").fidelity
        assert F == pytest.approx(fch_hadamard_fidelity(l, p), abs=1e-14)
        assert F == pytest.approx((1 + z**l) ** 2 / 4, abs=1e-14)


@pytest.mark.parametrize("model", ["fch", "ich"])
def test_limits(model):
    spec = GateSpec.hadamard(2)
    assert fidelity(spec, 0.01, model).fidelity == pytest.approx(1.0, abs=1e-9)
    assert fidelity(spec, 1e6, model).fidelity == pytest.approx(0.25, abs=1e-5)


def test_ich_all_even_sets_are_exact():
    pts = fidelity_curve(GateSpec.hadamard(2), [1.2, 2.0, 2.5, 3.5], "ich")
    for p in pts:
        assert p.stderr == 0.0
        assert set(p.provenance) == {"exact"}


def test_ich_odd_sets_above_tc_are_zero():
    # length 3: S_X = {2}, S_Z = {1}, union {1, 2}
    p = fidelity(GateSpec.hadamard(1), 3.0, "ich")
    assert p.provenance == ("symmetric-zero", "symmetric-zero", "exact")
    c = nearest_neighbor_correlation(IsingParams.from_temperature(3.0))
    assert p.fidelity == pytest.approx((1 + c) / 4, abs=1e-9)
    # length 2: S_X empty, S_Z = {1}
    assert fidelity(GateSpec.identity(1), 3.0, "ich").fidelity == pytest.approx(0.5, abs=1e-12)


def test_ich_broken_branch_sampling_matches_yang():
    # length 3: F = (1 + 2 M + <s_1 s_2>) / 4 deep in the ordered phase
    T = 1.6
    mc = MonteCarloOptions(size=32, schedule=McSchedule(300, 20_000, seed=3), col_stride=4)
    p = fidelity(GateSpec.hadamard(1), T, "ich", mc)
    params = IsingParams.from_temperature(T)
    expect = (1 + 2 * spontaneous_magnetization(params) + nearest_neighbor_correlation(params)) / 4
    assert "monte-carlo" in p.provenance
    assert abs(p.fidelity - expect) <= 4 * p.stderr + 1e-3, (p.fidelity, expect, p.stderr)


@pytest.mark.parametrize("model", ["fch", "ich"])
def test_fidelity_nonincreasing_in_length(model):
    # exact paths only: fCH any length, iCH Hadamard chains with even l
    if model == "fch":
        specs = [GateSpec(n) for n in range(2, 14)]
    else:
        specs = [GateSpec.hadamard(l) for l in (2, 4, 6, 8)]
    for T in np.linspace(0.5, 4.0, 15):
        F = [fidelity(s, T, model).fidelity for s in specs]
        assert np.all(np.diff(F) <= 1e-12), (T, F)


def test_fidelity_nonincreasing_in_temperature():
    T = np.linspace(0.5, 4.0, 36)
    for model in ("fch", "ich"):
        F = [p.fidelity for p in fidelity_curve(GateSpec.hadamard(4), T, model)]
        assert np.all(np.diff(F) <= 1e-12)
        assert all(0.25 - 1e-12 <= f <= 1 + 1e-12 for f in F)


def test_model_and_grid_validation():
    with pytest.raises(ValueError):
        fidelity_curve(GateSpec.hadamard(1), [1.0], "toric")
    with pytest.raises(ValueError):
        fidelity_curve(GateSpec.hadamard(1), [], "fch")


def _points(T, F):
    spec = GateSpec.hadamard(1)
    return [FidelityPoint(spec, t, f, 0.0, "fch", ("exact",)) for t, f in zip(T, F)]


def test_derivative_constant_and_linear():
    T = np.linspace(1.0, 2.0, 11)
    np.testing.assert_allclose(fidelity_derivative(_points(T, np.full(11, 0.7))), 0.0, atol=1e-14)
    np.testing.assert_allclose(fidelity_derivative(_points(T, 0.9 - 0.3 * T)), -0.3, atol=1e-12)
    # uneven grid: central differences stay exact on a line
    T2 = np.array([1.0, 1.1, 1.35, 1.4, 2.0])
    np.testing.assert_allclose(fidelity_derivative(_points(T2, 2 * T2)), 2.0, atol=1e-12)


def test_derivative_matches_analytic_fch():
    T = np.linspace(0.8, 1.2, 401)
    pts = fidelity_curve(GateSpec.hadamard(2), T, "fch")
    d = fidelity_derivative(pts)
    z = np.tanh(1 / T)
    # F = (1 + z^2)^2 / 4, dz/dT = -(1 - z^2) / T^2
    exact = (1 + z**2) * z * (-(1 - z**2) / T**2)
    np.testing.assert_allclose(d[1:-1], exact[1:-1], atol=1e-5)


def test_derivative_rejections():
    with pytest.raises(ValueError):
        fidelity_derivative(_points([1.0, 2.0], [0.5, 0.4]))
    with pytest.raises(ValueError):
        fidelity_derivative(_points([1.0, 2.0, 1.5], [0.5, 0.4, 0.3]))
