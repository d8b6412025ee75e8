import copy
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from conftest import unit_geometry
from gwdeco.apparatus import Geometry, rhombic_quadrupole
from gwdeco.constants import AMU
from gwdeco.decoherence import (SWEEP_AXES, averaged_strain_variance, band_edge_scan,
                                bec_amplification, contrast, small_band_strain_variance,
                                sweep, threshold_mass, variance, variance_estimate)
from gwdeco.errors import ConvergenceError, DivergenceError, ValidationError
from gwdeco.filters import Average, Brickwall, NoFilter
from gwdeco.quadrature import QuadratureConfig
from gwdeco.report import INTEGRAND_HEADER, write_integrand_csv
from gwdeco.scenario import Scenario
from gwdeco.spectra import CosmologicalSpectrum, PlateauSpectrum, load_tabulated


def test_flat_closed_form(unit_geom, flat):
    r = variance(flat, unit_geom, NoFilter())
    assert r.dphi2 == pytest.approx(8.0, rel=1e-6)
    assert r.rel_error <= r.rel_tol
    assert r.contrast == math.exp(-r.dphi2 / 2)
    assert r.n_samples == len(r.samples)


def test_flat_strain_variance(flat):
    # ((1 - cos x)/x)^2 integrates to pi over the real line
    assert quad(lambda x: ((1 - math.cos(x)) / x) ** 2, 0, 2000, limit=5000)[0] \
        == pytest.approx(math.pi / 2, rel=1e-3)
    for tau in (0.5, 1.0, 3.0):
        assert averaged_strain_variance(flat, NoFilter(), tau) == pytest.approx(
            1.0 / (2 * tau), rel=1e-6)


def test_small_band_estimate():
    tau, wh = 1.0, 1e-2
    # steep rolloff so the plateau edge is sharp
    s = PlateauSpectrum(S0=3.0, omega_low=0.0, omega_high=wh, p_high=200.0)
    got = averaged_strain_variance(s, Brickwall(wh * 1e-3), tau)
    assert got == pytest.approx(small_band_strain_variance(3.0, tau, wh), rel=0.05)
    assert small_band_strain_variance(3.0, tau, wh) == pytest.approx(
        3.0 * tau ** 2 * wh ** 3 / (12 * math.pi))


def test_zero_cases(unit_geom, flat):
    zero = PlateauSpectrum(S0=0.0, omega_low=0.0, omega_high=math.inf)
    assert variance(zero, unit_geom, NoFilter()).dphi2 == 0.0
    assert averaged_strain_variance(zero, NoFilter(), 1.0) == 0.0
    r = variance(flat, unit_geom.evolve(alpha=0.0), NoFilter())
    assert r.dphi2 == 0.0 and r.contrast == 1.0
    g0 = Geometry.build(mass=1.0, velocity=0.0, alpha=0.1, tau=1.0)
    assert variance(flat, g0, NoFilter()).dphi2 == 0.0
    assert variance_estimate(0.0, 1.0, 0.3) == 0.0


def test_variance_estimate_examples():
    assert variance_estimate(1.0, 1.0, 0.5) == 8.0
    with pytest.raises(ValidationError):
        variance_estimate(-1.0, 1.0, 0.5)


def test_contrast_examples():
    assert contrast(0.0) == 1.0
    assert contrast(2.0) == pytest.approx(0.367879, abs=1e-6)
    assert contrast(2 * math.log(2)) == pytest.approx(0.5, rel=1e-15)
    with pytest.raises(ValidationError):
        contrast(-1e-3)


@given(st.floats(0.0, 1e3))
def test_contrast_range(d):
    c = contrast(d)
    assert 0.0 < c <= 1.0 or d > 1400
    assert (c == 1.0) == (d == 0.0) or d < 1e-15


def test_bec_examples(unit_geom, flat):
    base = variance(flat, unit_geom, NoFilter(), keep_samples=False)
    assert bec_amplification(1, base).dphi2 == base.dphi2
    b = copy.copy(base)
    b.dphi2 = 1e-4
    assert bec_amplification(10, b).dphi2 == pytest.approx(1e-2)
    b.dphi2 = 2e-6
    r = bec_amplification(1000, b)
    assert r.dphi2 == pytest.approx(2.0) and r.contrast == pytest.approx(math.exp(-1))
    with pytest.raises(ValidationError):
        bec_amplification(0, b)


def test_divergence_and_convergence_errors(unit_geom):
    cosmo = CosmologicalSpectrum(1e-14)
    with pytest.raises(DivergenceError, match="cosmological"):
        variance(cosmo, unit_geom, NoFilter())
    assert variance(cosmo, unit_geom, Brickwall(0.1)).dphi2 > 0.0
    assert variance(cosmo, unit_geom, Average(10.0)).dphi2 > 0.0
    with pytest.raises(ConvergenceError) as ei:
        variance(PlateauSpectrum(S0=1.0, omega_low=0.0, omega_high=1e3), unit_geom,
                 NoFilter(), QuadratureConfig(rel_tol=1e-10, max_panels=100))
    assert ei.value.partial is not None and ei.value.partial.value > 0


def test_tolerance_bounds():
    with pytest.raises(ValidationError):
        QuadratureConfig(rel_tol=0.1)
    with pytest.raises(ValidationError):
        QuadratureConfig(rel_tol=0.0)


SPECTRA = [
    PlateauSpectrum(S0=1.0, omega_low=0.05, omega_high=3.0),
    PlateauSpectrum(S0=2.0, omega_low=0.0, omega_high=math.inf),
    CosmologicalSpectrum(1.0, H0=1.0),
    load_tabulated([(0.1, 1.0), (1.0, 3.0), (20.0, 0.1)]),
]
FILTERS = [Brickwall(0.2), Average(4.0), NoFilter()]


@pytest.mark.parametrize("spec", SPECTRA)
@pytest.mark.parametrize("filt", FILTERS)
def test_error_estimate_and_refinement(spec, filt):
    g = unit_geometry(tau=0.8)
    try:
        a = variance(spec, g, filt, QuadratureConfig(1e-6), keep_samples=False)
    except DivergenceError:
        assert isinstance(spec, CosmologicalSpectrum) and isinstance(filt, NoFilter)
        return
    b = variance(spec, g, filt, QuadratureConfig(5e-7), keep_samples=False)
    assert a.rel_error <= 1e-6
    assert abs(a.dphi2 - b.dphi2) <= a.error
    # against scipy on a truncated range as an independent check
    lo = max(filt.low_cutoff(), 1e-6)
    f = lambda w: spec(w) * float(np.asarray(  # noqa: E731
        (4 * g.coupling) ** 2 * (2 * math.sin(w * g.tau / 2) ** 2 / w) ** 2)) * filt(w)
    edges = np.concatenate([[lo], np.arange(1, 400) * math.pi / g.tau])
    ref = sum(quad(f, x0, x1, limit=200)[0] for x0, x1 in zip(edges[:-1], edges[1:]))
    assert a.dphi2 >= ref / math.pi * (1 - 1e-4)
    assert a.dphi2 <= ref / math.pi * 1.01


def test_input_echo(unit_geom, flat):
    r = variance(flat, unit_geom, Brickwall(0.5))
    assert r.inputs["spectrum"] == flat.to_dict()
    assert r.inputs["filter"] == {"kind": "brickwall", "omega_c_rad_s": 0.5}
    assert r.inputs["geometry"]["tau_s"] == 1.0
    assert abs(sum(r.decade_fractions.values()) - 1.0) < 1e-3


def test_wide_aperture_reports_both_routes(flat):
    g = unit_geometry(sin_alpha=0.5)
    r = variance(flat, g, NoFilter())
    assert r.generic_dphi2 is not None and r.generic_dphi2 > 0
    assert variance(flat, unit_geometry(sin_alpha=0.1), NoFilter()).generic_dphi2 is None


def test_generic_path_variance_matches_closed_form_at_small_aperture(flat):
    g = unit_geometry(sin_alpha=0.01)
    a = variance(flat, g, NoFilter()).dphi2
    b = variance(flat, rhombic_quadrupole(g), NoFilter()).dphi2
    assert b == pytest.approx(a, rel=1e-4)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(1.0, 4.0), st.floats(0.05, 0.9), st.floats(0.02, 1.0))
def test_monotonicity(S0, k, s, wc):
    spec = PlateauSpectrum(S0=S0, omega_low=0.05, omega_high=3.0)
    g = unit_geometry(sin_alpha=s)
    base = variance(spec, g, Brickwall(wc), keep_samples=False).dphi2
    more = [
        variance(PlateauSpectrum(S0=S0 * k, omega_low=0.05, omega_high=3.0), g,
                 Brickwall(wc), keep_samples=False).dphi2,
        variance(spec, g.evolve(mass=g.mass * k), Brickwall(wc), keep_samples=False).dphi2,
        variance(spec, g.evolve(sin_alpha=min(1.0, s * k)), Brickwall(wc),
                 keep_samples=False).dphi2,
        variance(spec, g, Brickwall(wc / k), keep_samples=False).dphi2,
    ]
    for m in more:
        assert m >= base * (1 - 1e-6)


def test_threshold_mass():
    spec = PlateauSpectrum(S0=1.0, omega_low=0.0, omega_high=math.inf)
    g = unit_geometry(sin_alpha=0.01)
    d = variance(spec, g, NoFilter()).dphi2
    # scale S0 so that dphi2(m_ref) = 4: m* = m_ref / 2
    s4 = PlateauSpectrum(S0=4.0 / d, omega_low=0.0, omega_high=math.inf)
    r = threshold_mass(g, s4, NoFilter())
    assert r.mass == pytest.approx(g.mass / 2, rel=1e-6) and r.bounded
    r2 = threshold_mass(g.evolve(mass=g.mass * 37.0), s4, NoFilter())
    assert r2.mass == pytest.approx(r.mass, rel=1e-9)
    assert threshold_mass(g.evolve(alpha=0.0), s4, NoFilter()).bounded is False


def test_threshold_mass_path_bisection():
    g = Geometry.build(mass_amu=1e6, velocity=1.0, alpha=0.05, tau=1.0)
    spec = PlateauSpectrum(S0=1e-30, omega_low=0.0, omega_high=math.inf)
    mz = threshold_mass(g, spec, NoFilter())
    path = threshold_mass(g, spec, NoFilter(), response="path")
    assert path.method == "bisection"
    d = variance(spec, rhombic_quadrupole(g.evolve(mass=path.mass)), NoFilter()).dphi2
    assert d == pytest.approx(1.0, rel=1e-5)
    assert path.mass == pytest.approx(mz.mass, rel=1e-2)
    tiny = PlateauSpectrum(S0=1e-80, omega_low=0.0, omega_high=math.inf)
    assert not threshold_mass(g, tiny, NoFilter(), response="path").bounded


def test_band_edge_scan_modes():
    g = Geometry.build(mass_amu=8e8, velocity=1000.0, sin_alpha=1.0, arm_length=1.0)
    spec = PlateauSpectrum(p_high=60.0)
    est = band_edge_scan(g, spec, Brickwall(0.01), method="estimate")
    quad_ = band_edge_scan(g, spec, Brickwall(0.01), method="quadrature")
    assert est.dphi2_at_edge == pytest.approx(1.0)
    assert quad_.dphi2_at_edge == pytest.approx(1.0, rel=1e-6)
    # a steep rolloff makes the full integral approach the small-band estimate
    assert quad_.omega_high == pytest.approx(est.omega_high, rel=0.05)
    with pytest.raises(ValidationError):
        band_edge_scan(g, spec, Brickwall(0.01), method="guess")


def _scenario():
    g = Geometry.build(mass_amu=1e6, velocity=1.0, alpha=0.05, tau=1.0, T=10.0)
    return Scenario(g, PlateauSpectrum(S0=1e-30, omega_low=0.0, omega_high=math.inf), "none")


def test_sweep():
    sc = _scenario()
    rows = sweep("mass", [1e6, 2e6], sc)
    assert rows[1][1].dphi2 / rows[0][1].dphi2 == pytest.approx(4.0, rel=1e-12)
    assert sweep("mass", [], sc) == []
    with pytest.raises(ValidationError, match="valid: mass, velocity"):
        sweep("colour", [1.0], sc)
    rows = sweep("tau", [1.0, 2.0], sc)
    assert rows[1][1].dphi2 / rows[0][1].dphi2 == pytest.approx(2.0, rel=1e-6)
    par = sweep("N", [1, 3, 10], sc, workers=3)
    assert [r.dphi2 for _, r in par] == [r.dphi2 for _, r in sweep("N", [1, 3, 10], sc)]
    assert par[2][1].dphi2 == pytest.approx(100 * par[0][1].dphi2)
    assert set(SWEEP_AXES) >= {"mass", "velocity", "aperture", "arm_length", "T",
                               "omega_high", "omega_gw", "N"}


def test_integrand_csv(tmp_path, flat):
    g = unit_geometry()
    r = variance(flat, g, NoFilter())
    p = write_integrand_csv(tmp_path / "i.csv", r)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(INTEGRAND_HEADER)
    assert len(lines) - 1 == r.n_samples
    data = np.loadtxt(p, delimiter=",", skiprows=1)
    assert np.all(np.diff(data[:, 0]) >= 0)
    w, prod = data[:, 0], data[:, 4]
    # peaks in the first lobe around pi / tau, vanishes towards w tau = 2 pi k
    assert 1.0 < w[np.argmax(prod)] < 2 * math.pi
    near = np.abs(w - 2 * math.pi) < 1e-2
    assert np.all(prod[near] < 1e-4 * prod.max())
