import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import unit_geometry
from gwdeco.apparatus import (FixedSplitter, Geometry, GratingSplitter, QuadrupolePath,
                              RamanSplitter, apparatus_function, fixed_splitter_ev,
                              mz_response, path_response, response_from_apparatus_function,
                              rhombic_quadrupole, sin_alpha_from_transfer,
                              splitter_energy_transfer, window_kernel)
from gwdeco.constants import EV, HBAR
from gwdeco.errors import OutOfRangeError, ValidationError


def test_mz_examples():
    g = unit_geometry(sin_alpha=0.5)
    assert mz_response(g, 0.0) == 0.0
    assert mz_response(g, math.pi) == pytest.approx(16.0 * (2.0 / math.pi) ** 2, rel=1e-14)
    assert mz_response(g, math.pi) == pytest.approx(6.4846, abs=1e-4)
    g0 = g.evolve(alpha=0.0)
    assert np.all(mz_response(g0, np.linspace(-5, 5, 11)) == 0.0)


def test_mz_zeros_and_evenness():
    g = unit_geometry(tau=0.7)
    k = np.arange(1, 20)
    w = 2 * math.pi * k / g.tau
    assert np.max(mz_response(g, w)) < 1e-25 * mz_response(g, math.pi / g.tau)
    ws = np.linspace(0.01, 30, 50)
    np.testing.assert_array_equal(mz_response(g, ws), mz_response(g, -ws))


def test_mz_small_omega_series():
    g = unit_geometry()
    w = 1e-5
    assert mz_response(g, w) == pytest.approx(16.0 * (w * g.tau ** 2 / 2) ** 2, rel=1e-9)


def test_mz_scaling():
    g = unit_geometry(sin_alpha=0.3)
    w = np.linspace(0.1, 10, 7)
    np.testing.assert_allclose(mz_response(g.evolve(mass=2 * g.mass), w), 4 * mz_response(g, w),
                               rtol=1e-14)
    g2 = g.evolve(sin_alpha=0.15)
    np.testing.assert_allclose(mz_response(g2, w), mz_response(g, w) * (0.15 / 0.3) ** 2,
                               rtol=1e-12)


def test_geometry_validation():
    with pytest.raises(ValidationError):
        Geometry.build(mass=-1.0, velocity=1.0, alpha=0.1, tau=1.0)
    with pytest.raises(ValidationError):
        Geometry.build(mass=1.0, velocity=3e8, alpha=0.1, tau=1.0)
    with pytest.raises(ValidationError):
        Geometry.build(mass=1.0, velocity=1.0, alpha=2.0, tau=1.0)
    with pytest.raises(ValidationError):
        Geometry.build(mass=1.0, velocity=1.0, alpha=0.1, tau=1.0, T=1.0)
    with pytest.raises(ValidationError):
        Geometry.build(mass=1.0, mass_amu=1.0, velocity=1.0, alpha=0.1, tau=1.0)
    g = Geometry.build(mass_amu=100.0, velocity=10.0, sin_alpha=0.5, arm_length=2.0)
    assert g.tau == pytest.approx(0.2)
    assert g.evolve(velocity=20.0).tau == pytest.approx(0.1)
    assert g.Omega == pytest.approx(g.mass * 100.0 / (2 * HBAR))


def test_rhombus_quadrupole_structure():
    g = Geometry.build(mass=3.0, velocity=2.0, alpha=0.2, tau=1.5)
    p = rhombic_quadrupole(g)
    t = np.linspace(0.0, 2 * g.tau, 41)
    dq = p.delta_quadrupole(t)
    for i in range(3):
        assert np.max(np.abs(dq[:, i, i])) <= 1e-12 * np.max(np.abs(dq))
    assert np.max(np.abs(dq[:, 0, 2])) == 0.0 and np.max(np.abs(dq[:, 1, 2])) == 0.0
    # point-mass arithmetic at t = tau-: x = v t, y = +-v tan(a/2) t on each arm
    tm = g.tau * (1 - 1e-12)
    x, y = g.velocity * tm, g.velocity * math.tan(g.alpha / 2) * tm
    expect = g.mass * (x * y - x * (-y))
    assert p.delta_quadrupole([tm])[0, 0, 1] == pytest.approx(expect, rel=1e-9)
    assert expect == pytest.approx(2 * g.mass * g.velocity ** 2 * math.tan(g.alpha / 2)
                                   * g.tau ** 2, rel=1e-9)


def test_alpha_zero_path_is_null():
    g = unit_geometry().evolve(alpha=0.0)
    af = apparatus_function(rhombic_quadrupole(g), np.linspace(-3, 3, 13))
    assert np.all(af.tensors == 0)


def test_kernel_limit():
    d = 2.0
    assert window_kernel(1e-9, d) == pytest.approx(1j * d, rel=1e-8)
    x = np.array([1e-7, 3e-7, 1e-3, 1.0])
    exact = (1 - np.exp(-1j * x * d)) / x
    np.testing.assert_allclose(window_kernel(x, d), exact, rtol=1e-9)


def test_hermitian_and_traceless():
    g = unit_geometry(sin_alpha=0.4)
    af = apparatus_function(rhombic_quadrupole(g), np.linspace(0.01, 20, 101))
    assert af.hermitian_residual() <= 1e-12
    assert af.traceless_residual() <= 1e-9
    assert len(af) == 101


def test_response_from_apparatus_function():
    g = unit_geometry()
    af = apparatus_function(rhombic_quadrupole(g), np.linspace(0.01, 10, 50))
    assert response_from_apparatus_function(af, 0.01) == pytest.approx(af.response()[0])
    assert response_from_apparatus_function(af, 3.3) == pytest.approx(
        path_response(af.path, 3.3)[0])
    with pytest.raises(OutOfRangeError):
        response_from_apparatus_function(af, 11.0)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=100, deadline=None)
def test_random_hermitian_inputs_are_real(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    m = m + m.T
    m -= np.trace(m) / 3 * np.eye(3)
    # grid (-w, w) with a(-w) = conj a(w)
    from gwdeco.apparatus import ApparatusFunction
    af = ApparatusFunction(np.array([-1.0, 1.0]), np.stack([np.conj(m), m]), 1.0, "x")
    for w in (-1.0, 1.0):
        val = response_from_apparatus_function(af, w)
        assert val >= 0.0


def test_zero_apparatus_function():
    from gwdeco.apparatus import ApparatusFunction
    af = ApparatusFunction(np.array([1.0, 2.0]), np.zeros((2, 3, 3), complex), 1.0, "0")
    assert response_from_apparatus_function(af, 1.5) == 0.0


def test_open_path_rejected():
    t = np.array([0.0, 1.0, 2.0])
    a = np.array([[0, 0, 0], [1, 1, 0], [2, 0, 0]], float)
    b = np.array([[0, 0, 0], [1, -1, 0], [2, 0.5, 0]], float)
    with pytest.raises(ValidationError, match="open path"):
        QuadrupolePath(((t, a), (t, b)), 1.0)
    with pytest.raises(ValidationError, match="increasing"):
        QuadrupolePath(((np.array([0.0, 0.0, 2.0]), a), (t, a)), 1.0)


def test_splitters():
    d = splitter_energy_transfer(fixed_splitter_ev(1e-9))
    assert d == pytest.approx(1e-9 * 1.602176634e-19 / 1.054571817e-34, rel=1e-9)
    assert d == pytest.approx(1.52e6, rel=1e-2)
    one = splitter_energy_transfer(RamanSplitter(1, 2e-28))
    assert splitter_energy_transfer(RamanSplitter(140, 2e-28)) == pytest.approx(140 * one)
    gr = GratingSplitter(100e-9, 1, 1000.0)
    assert gr.energy == pytest.approx(1000.0 * 2 * math.pi * 1.054571817e-34 / 100e-9)
    assert FixedSplitter(EV).energy == EV
    assert sin_alpha_from_transfer(1.0, 4.0) == 0.25
    with pytest.raises(ValidationError):
        sin_alpha_from_transfer(5.0, 4.0)
