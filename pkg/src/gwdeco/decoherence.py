"""Phase variance, fringe contrast and the threshold mass.

The uncontrolled phase variance is

    dphi2 = integral d omega/2pi  S_h[omega] A[omega] F[omega]
          = (1/pi) integral_0^inf S_h A F d omega,

and the contrast of the fringes is ``exp(-dphi2 / 2)``.  For the closed-form
Mach-Zehnder response the variance factorizes exactly as
``(4 Omega tau sin(alpha))**2 * dh2_bar`` with the band-averaged strain
variance ``dh2_bar``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .apparatus import (WIDE_APERTURE, ApparatusFunction, Geometry, QuadrupolePath,
                        _one_minus_cos_over, mz_envelope, mz_response, path_response,
                        rhombic_quadrupole)
from .constants import AMU
from .errors import ValidationError
from .quadrature import BandIntegral, QuadratureConfig, integrate_spectral
from .spectra import PlateauSpectrum

THRESHOLD = 1.0
MASS_SEARCH_AMU = (1.0, 1e15)
SWEEP_AXES = ("mass", "velocity", "aperture", "arm_length", "tau", "T",
              "omega_high", "omega_gw", "N")


@dataclass
class IntegrandSamples:
    """Quadrature nodes with the integrand factors, ordered by omega."""

    omega: np.ndarray
    weight: np.ndarray
    S: np.ndarray
    A: np.ndarray
    F: np.ndarray

    @property
    def integrand(self) -> np.ndarray:
        return self.S * self.A * self.F

    def __len__(self) -> int:
        return int(self.omega.size)


@dataclass
class DecoherenceResult:
    """Outcome of a variance computation.

    ``error`` is the absolute error estimate on ``dphi2`` (rad^2);
    ``decade_fractions`` maps ``floor(log10 omega)`` to the share of the
    integral from that decade.
    """

    dphi2: float
    contrast: float
    dh2_bar: float | None
    error: float
    rel_tol: float
    dominant_omega: float
    decade_fractions: dict[int, float]
    n_samples: int
    panels: int
    omega_max: float
    samples: IntegrandSamples | None = field(default=None, repr=False)
    inputs: dict = field(default_factory=dict)
    generic_dphi2: float | None = None
    bec_N: int = 1

    @property
    def rel_error(self) -> float:
        return self.error / self.dphi2 if self.dphi2 > 0 else 0.0

    def summary(self) -> dict:
        d = {"dphi2_rad2": self.dphi2, "contrast": self.contrast,
             "error_estimate_rad2": self.error, "rel_tol": self.rel_tol,
             "dominant_omega_rad_s": self.dominant_omega, "quadrature_samples": self.n_samples,
             "panels": self.panels, "omega_max_rad_s": self.omega_max, "bec_N": self.bec_N}
        if self.dh2_bar is not None:
            d["dh2_bar"] = self.dh2_bar
        if self.generic_dphi2 is not None:
            d["generic_path_dphi2_rad2"] = self.generic_dphi2
        d["decade_fractions"] = {str(k): v for k, v in sorted(self.decade_fractions.items())}
        return d


class _Response:
    def __init__(self, fn, envelope, tau, low_exponent, label, tail=None):
        self.tail = tail
        self.fn = fn
        self.envelope = envelope
        self.tau = tau
        self.low_exponent = low_exponent
        self.label = label


# sin(x/2)**4 = 3/8 - cos(x)/2 + cos(2x)/8: (mean, sum |c_k|/k) per unit envelope
_SIN4_TAIL = np.array([3.0 / 8.0, 1.0 / 2.0 + 1.0 / 16.0])


def _periodic_tail(path: QuadrupolePath):
    """Harmonic content of ``w**2 R(w)`` when every segment edge sits on a multiple of tau."""
    t0, t1, _ = path.ddot_segments()
    edges = np.concatenate([t0, t1]) / path.tau
    if np.max(np.abs(edges - np.round(edges))) > 1e-12:
        return None
    n = int(round(edges.max() - edges.min()))
    M = max(64, 8 * n)
    period = 2.0 * np.pi / path.tau
    w = 1e3 * period + period * np.arange(M) / M
    P = path_response(path, w) * w ** 2
    c = np.fft.rfft(P) / M
    k = np.arange(1, c.size)
    # cos harmonics of a real series have amplitude 2|c_k|
    return np.array([float(c[0].real), float(np.sum(2.0 * np.abs(c[1:]) / k))])


def _as_response(response) -> _Response:
    if isinstance(response, Geometry):
        g = response
        return _Response(lambda w: mz_response(g, w), mz_envelope(g), g.tau, 2.0, "mz",
                         _SIN4_TAIL * mz_envelope(g))
    if isinstance(response, ApparatusFunction):
        if response.path is None:
            raise ValidationError("apparatus function carries no path to evaluate")
        response = response.path
    if isinstance(response, QuadrupolePath):
        p = response
        t0, t1, qdd = p.ddot_segments()
        net = np.abs(np.einsum("s,sij->ij", t1 - t0, qdd)).max()
        scale = np.einsum("s,sij->ij", t1 - t0, np.abs(qdd)).max()
        low = 2.0 if net <= 1e-12 * max(scale, 1e-300) else 0.0
        return _Response(lambda w: path_response(p, w), p.envelope(), p.tau, low, "path",
                         _periodic_tail(p))
    raise ValidationError(f"unsupported response type {type(response).__name__}")


def _band(spectrum, resp: _Response, filt, q: QuadratureConfig, keep: bool) -> BandIntegral:
    def fn(w):
        return spectrum(w), resp.fn(w), filt(w)

    return integrate_spectral(fn, tau=resp.tau, envelope=resp.envelope, spectrum=spectrum,
                              filt=filt, q=q, low_exponent=resp.low_exponent,
                              keep_samples=keep, tail_kernel=resp.tail)


def _diagnostics(band: BandIntegral) -> tuple[float, dict[int, float]]:
    if band.omega.size == 0 or band.value <= 0.0:
        return 0.0, {}
    prod = band.integrand
    dominant = float(band.omega[np.argmax(prod * band.omega)])
    contrib = prod * band.weights
    dec = np.floor(np.log10(band.omega)).astype(int)
    fractions = {}
    for d in np.unique(dec):
        fractions[int(d)] = float(math.fsum(contrib[dec == d]) / band.value)
    return dominant, fractions


def variance(spectrum, response, filt, q: QuadratureConfig | None = None,
             keep_samples: bool = True) -> DecoherenceResult:
    """Phase variance for a spectrum, a response and a measurement filter.

    ``response`` is a :class:`Geometry` (closed-form Mach-Zehnder response)
    or a :class:`QuadrupolePath` / :class:`ApparatusFunction` (generic
    trajectories).  Raises ``DivergenceError`` for a non-integrable low end
    and ``ConvergenceError`` when the panel budget runs out.
    """
    q = q or QuadratureConfig()
    resp = _as_response(response)
    band = _band(spectrum, resp, filt, q, keep=True)
    dphi2 = band.value / math.pi
    dominant, fractions = _diagnostics(band)
    dh2 = None
    if isinstance(response, Geometry):
        if response.coupling > 0.0:
            dh2 = dphi2 / (4.0 * response.coupling * response.tau) ** 2
        else:
            dh2 = averaged_strain_variance(spectrum, filt, response.tau, q)
    samples = IntegrandSamples(band.omega, band.weights, band.S, band.R, band.F)
    inputs = {"spectrum": spectrum.to_dict(), "filter": filt.to_dict(),
              "quadrature": q.to_dict(), "response": resp.label}
    generic = None
    if isinstance(response, Geometry):
        inputs["geometry"] = response.to_dict()
        if response.alpha > WIDE_APERTURE:
            generic = variance(spectrum, rhombic_quadrupole(response), filt, q,
                               keep_samples=False).dphi2
    return DecoherenceResult(
        dphi2=dphi2, contrast=contrast(dphi2), dh2_bar=dh2, error=band.error / math.pi,
        rel_tol=q.rel_tol, dominant_omega=dominant, decade_fractions=fractions,
        n_samples=int(band.omega.size), panels=band.panels, omega_max=band.omega_max,
        samples=samples if keep_samples else None, inputs=inputs, generic_dphi2=generic)


def averaged_strain_variance(spectrum, filt, tau: float, q: QuadratureConfig | None = None) -> float:
    """Band-averaged strain variance ``int dw/2pi S F ((1 - cos w tau)/(w tau))^2``."""
    q = q or QuadratureConfig()
    if not tau > 0.0:
        raise ValidationError(f"tau must be > 0, got {tau}")
    resp = _Response(lambda w: (_one_minus_cos_over(w, tau) / tau) ** 2, 4.0 / tau ** 2,
                     tau, 2.0, "strain", _SIN4_TAIL * (4.0 / tau ** 2))
    return _band(spectrum, resp, filt, q, keep=False).value / math.pi


def variance_estimate(rate: float, tau: float, dh2_bar: float) -> float:
    """``(4 rate tau)^2 dh2_bar`` with ``rate`` = delta_Omega or Omega sin(alpha)."""
    if rate < 0.0 or tau < 0.0 or dh2_bar < 0.0:
        raise ValidationError("variance_estimate needs non-negative inputs")
    return (4.0 * rate * tau) ** 2 * dh2_bar


def contrast(dphi2: float) -> float:
    """Fringe contrast ``exp(-dphi2 / 2)`` of Gaussian phase noise."""
    if not dphi2 >= 0.0:
        raise ValidationError(f"phase variance must be >= 0, got {dphi2}")
    return math.exp(-0.5 * dphi2)


def bec_amplification(N: int, base: DecoherenceResult) -> DecoherenceResult:
    """Rigid condensate of ``N`` atoms: the variance scales by ``N**2``."""
    if N < 1:
        raise ValidationError(f"atom number must be >= 1, got {N}")
    d = base.dphi2 * N * N
    return replace(base, dphi2=d, contrast=contrast(d), error=base.error * N * N,
                   generic_dphi2=None if base.generic_dphi2 is None else base.generic_dphi2 * N * N,
                   bec_N=base.bec_N * N, samples=None)


# --------------------------------------------------------------------------
# threshold solving


@dataclass(frozen=True)
class ThresholdResult:
    """Mass at which the variance reaches ``threshold``; ``inf`` if none."""

    mass: float
    threshold: float
    method: str
    reference_mass: float
    reference_dphi2: float

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.mass)

    @property
    def mass_amu(self) -> float:
        return self.mass / AMU

    def to_dict(self) -> dict:
        return {"threshold_mass_kg": self.mass, "threshold_mass_amu": self.mass_amu,
                "bounded": self.bounded, "threshold_rad2": self.threshold,
                "method": self.method, "reference_mass_kg": self.reference_mass,
                "reference_dphi2_rad2": self.reference_dphi2}


def threshold_mass(template: Geometry, spectrum, filt, q: QuadratureConfig | None = None,
                   threshold: float = THRESHOLD, response: str = "mz") -> ThresholdResult:
    """Solve ``dphi2(m) = threshold`` at fixed velocity, aperture and tau.

    The closed form scales as m^2 and is inverted directly.  The generic
    path (``response='path'``) is bracketed in log mass over
    ``MASS_SEARCH_AMU`` and solved to 1e-6 relative.
    """
    q = q or QuadratureConfig()
    if response == "mz":
        d = variance(spectrum, template, filt, q, keep_samples=False).dphi2
        m = template.mass * math.sqrt(threshold / d) if d > 0.0 else math.inf
        return ThresholdResult(m, threshold, "scaling", template.mass, d)
    if response != "path":
        raise ValidationError(f"unknown response '{response}' (valid: mz, path)")

    def dphi2_at(log_m):
        g = template.evolve(mass=math.exp(log_m))
        return variance(spectrum, rhombic_quadrupole(g), filt, q, keep_samples=False).dphi2

    d_ref = dphi2_at(math.log(template.mass))
    lo, hi = (math.log(m * AMU) for m in MASS_SEARCH_AMU)
    d_hi = dphi2_at(hi)
    if d_hi < threshold:
        return ThresholdResult(math.inf, threshold, "bisection", template.mass, d_ref)
    d_lo = dphi2_at(lo)
    if d_lo > threshold:
        raise ValidationError(
            f"threshold is crossed below the {MASS_SEARCH_AMU[0]} amu search floor "
            f"(dphi2 = {d_lo:.3g} there)")
    root = brentq(lambda x: math.log(dphi2_at(x)) - math.log(threshold), lo, hi,
                  xtol=1e-7, rtol=1e-12)
    return ThresholdResult(math.exp(root), threshold, "bisection", template.mass, d_ref)


@dataclass(frozen=True)
class BandEdgeResult:
    """Plateau upper edge at which the variance equals the threshold."""

    omega_high: float
    method: str
    threshold: float
    dphi2_at_edge: float

    def to_dict(self) -> dict:
        return {"omega_high_rad_s": self.omega_high, "method": self.method,
                "threshold_rad2": self.threshold, "dphi2_at_edge_rad2": self.dphi2_at_edge}


def small_band_strain_variance(S0: float, tau: float, omega_high: float) -> float:
    """``dh2_bar`` of a plateau lying entirely below the apparatus band.

    With ``(1 - cos x)/x ~ x/2`` the integral is ``S0 tau^2 omega_high^3 / (12 pi)``.
    """
    return S0 * tau ** 2 * omega_high ** 3 / (12.0 * math.pi)


def band_edge_scan(template: Geometry, spectrum: PlateauSpectrum, filt,
                   q: QuadratureConfig | None = None, threshold: float = THRESHOLD,
                   method: str = "quadrature", bracket: tuple[float, float] | None = None
                   ) -> BandEdgeResult:
    """Find the plateau edge ``omega_high`` putting ``template`` at the threshold.

    ``method='estimate'`` inverts :func:`small_band_strain_variance`;
    ``'quadrature'`` root-finds the full integral in ``log omega_high``.
    """
    q = q or QuadratureConfig()
    rate = template.coupling
    if rate == 0.0 or spectrum.S0 == 0.0:
        return BandEdgeResult(math.inf, method, threshold, 0.0)
    if method == "estimate":
        w = (12.0 * math.pi * threshold / ((4.0 * rate * template.tau) ** 2
                                           * spectrum.S0 * template.tau ** 2)) ** (1.0 / 3.0)
        d = variance_estimate(rate, template.tau, small_band_strain_variance(
            spectrum.S0, template.tau, w))
        return BandEdgeResult(w, method, threshold, d)
    if method != "quadrature":
        raise ValidationError(f"unknown method '{method}' (valid: estimate, quadrature)")

    def d_at(w):
        s = replace(spectrum, omega_high=w)
        return variance(s, template, filt, q, keep_samples=False).dphi2

    lo, hi = bracket or (spectrum.omega_low * 1.0001 if spectrum.omega_low > 0 else 1e-12,
                         1e3 / template.tau)
    d_lo, d_hi = d_at(lo), d_at(hi)
    if d_hi < threshold:
        return BandEdgeResult(math.inf, method, threshold, d_hi)
    if d_lo > threshold:
        return BandEdgeResult(lo, method, threshold, d_lo)
    x = brentq(lambda lw: math.log(d_at(math.exp(lw))) - math.log(threshold),
               math.log(lo), math.log(hi), xtol=1e-9, rtol=1e-12)
    w = math.exp(x)
    return BandEdgeResult(w, method, threshold, d_at(w))


# --------------------------------------------------------------------------
# sweeps


def sweep(axis: str, values: Sequence[float], base, workers: int = 1) -> list:
    """Evaluate ``base`` (a scenario) at each value of one parameter.

    ``base`` must provide ``with_axis(axis, value)`` and ``evaluate()``.
    Returns ``[(value, DecoherenceResult), ...]`` in input order.
    """
    if axis not in SWEEP_AXES:
        raise ValidationError(f"unknown sweep axis '{axis}' (valid: {', '.join(SWEEP_AXES)})")
    values = list(values)
    scenarios = [base.with_axis(axis, v) for v in values]
    if workers > 1 and len(scenarios) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda s: s.evaluate(), scenarios))
    else:
        results = [s.evaluate() for s in scenarios]
    return list(zip(values, results))
