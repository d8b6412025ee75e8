"""Monte Carlo check of the analytic variance by spectral synthesis.

Each realization is a periodic Gaussian field on a duration ``D``:
bins ``omega_k = 2 pi k / D`` carry complex amplitudes

    h_k = sqrt(2) * sum_A c_{A,k} e^A,   <|c_{A,k}|^2> = S_h[omega_k] d omega / 2 pi,

with the five orthonormal traceless polarizations ``e^A`` (so that
``<h_ij h_kl*> = delta_ijkl |c|^2``).  The DC and Nyquist bins are left
empty.  The filtered phase is ``2 Re sum_k h_k : a(-omega_k) f_k`` with
``f = sqrt(F)``.

Realization ``i`` draws from ``SeedSequence(seed, spawn_key=(i,))``; chunks
of a fixed size are processed in index order and reduced in that order, so
results do not depend on the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .apparatus import (ApparatusFunction, Geometry, QuadrupolePath, apparatus_tensors,
                        rhombic_quadrupole)
from .decoherence import contrast, variance
from .errors import ValidationError
from .quadrature import QuadratureConfig
from .tensor import polarization_basis

CHUNK = 256
Z_ACCEPT = 4.0
IMAG_TOL = 1e-9


@dataclass(frozen=True)
class RealizationConfig:
    """Duration, sampling step and ensemble size of a synthesis run."""

    duration: float
    dt: float
    n_realizations: int = 10_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not (self.duration > 0.0 and self.dt > 0.0):
            raise ValidationError("duration and dt must be > 0")
        if self.n_realizations < 100:
            raise ValidationError(f"need at least 100 realizations, got {self.n_realizations}")
        if self.seed < 0:
            raise ValidationError("seed must be >= 0")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")

    @property
    def n_time(self) -> int:
        n = int(round(self.duration / self.dt))
        return n + (n % 2)

    def check(self, tau: float, spectrum, filt) -> None:
        """Reject durations and steps the synthesis cannot resolve."""
        longest = max(filt.timescale(), 2.0 * tau)
        if self.duration < 20.0 * longest:
            raise ValidationError(
                f"duration {self.duration} s is shorter than 20 x the longest timescale "
                f"({longest} s)")
        w_support = min(spectrum.support_edge(), 2.0 * math.pi / tau)
        dt_max = 2.0 * math.pi / (10.0 * w_support)
        if self.dt > dt_max * (1.0 + 1e-12):
            raise ValidationError(f"dt {self.dt} s exceeds 2 pi / (10 omega_support) = {dt_max} s")

    def to_dict(self) -> dict:
        return {"duration_s": self.duration, "dt_s": self.dt,
                "n_realizations": self.n_realizations, "seed": self.seed}


def _path_of(response) -> QuadrupolePath:
    if isinstance(response, Geometry):
        return rhombic_quadrupole(response)
    if isinstance(response, QuadrupolePath):
        return response
    raise ValidationError(f"Monte Carlo needs a Geometry or QuadrupolePath, got "
                          f"{type(response).__name__}")


class Ensemble:
    """Lazily evaluated set of field realizations."""

    def __init__(self, spectrum, response, filt, config: RealizationConfig):
        self.path = _path_of(response)
        self.spectrum = spectrum
        self.filt = filt
        self.config = config
        config.check(self.path.tau, spectrum, filt)
        n = config.n_time
        self.omega = 2.0 * math.pi * np.arange(1, n // 2) / (n * config.dt)
        d_omega = 2.0 * math.pi / (n * config.dt)
        self.sigma = np.sqrt(np.asarray(spectrum(self.omega)) * d_omega / (2.0 * math.pi))
        self.f = np.sqrt(np.asarray(filt(self.omega)))
        self.basis = polarization_basis().matrices()
        self.use_tensors(apparatus_tensors(self.path, self.omega),
                         apparatus_tensors(self.path, -self.omega))

    def use_tensors(self, a_pos: np.ndarray, a_neg: np.ndarray) -> None:
        """Set ``a(+omega_k)`` and ``a(-omega_k)`` on the synthesis bins."""
        scale = max(float(np.max(np.abs(a_pos))), 1e-300) if a_pos.size else 1.0
        self.tensor_residue = float(np.max(np.abs(a_neg - np.conj(a_pos)))) / scale \
            if a_pos.size else 0.0
        # b_{k,A} = e^A : a(-omega_k) pairs with h_k, its partner with conj(h_k)
        self.b_neg = np.einsum("aij,kij->ka", self.basis, a_neg) * self.f[:, None]
        self.b_pos = np.einsum("aij,kij->ka", self.basis, a_pos) * self.f[:, None]
        self.imag_residue = 0.0

    def __len__(self) -> int:
        return self.config.n_realizations

    def coefficients(self, i: int) -> np.ndarray:
        """Complex amplitudes ``c_{k,A}`` of realization ``i``, shape (K, 5)."""
        if not 0 <= i < len(self):
            raise IndexError(i)
        rng = np.random.default_rng(np.random.SeedSequence(self.config.seed, spawn_key=(i,)))
        z = rng.standard_normal((self.omega.size, 5, 2))
        return (z[..., 0] + 1j * z[..., 1]) * (self.sigma[:, None] / math.sqrt(2.0))

    def _phase_and_residue(self, i: int) -> tuple[float, float]:
        c = self.coefficients(i)
        total = math.sqrt(2.0) * (np.sum(c * self.b_neg) + np.sum(np.conj(c) * self.b_pos))
        rel = abs(total.imag) / abs(total.real) if total.real != 0.0 else abs(total.imag)
        if rel > IMAG_TOL:
            raise ValidationError(f"realization {i}: phase has imaginary part {total.imag:.3g} "
                                  f"(real {total.real:.3g})")
        return float(total.real), rel

    def phase(self, i: int) -> float:
        """``delta phi(0)`` as the sum over positive and negative bins."""
        return self._phase_and_residue(i)[0]

    def time_series(self, i: int) -> np.ndarray:
        """Metric perturbation ``h_ij(t_n)``, shape (n_time, 3, 3)."""
        n = self.config.n_time
        hk = math.sqrt(2.0) * np.einsum("ka,aij->kij", self.coefficients(i), self.basis)
        spec = np.zeros((n // 2 + 1, 3, 3), dtype=complex)
        spec[1:n // 2] = hk
        return np.fft.irfft(n * spec, n=n, axis=0)

    def _phase_chunk(self, start: int) -> np.ndarray:
        stop = min(start + CHUNK, len(self))
        return np.array([self._phase_and_residue(i) for i in range(start, stop)])

    def phases(self) -> np.ndarray:
        """Phases of all realizations; sets ``imag_residue`` (max relative)."""
        starts = range(0, len(self), CHUNK)
        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as ex:
                parts = list(ex.map(self._phase_chunk, starts))
        else:
            parts = [self._phase_chunk(s) for s in starts]
        out = np.concatenate(parts)
        self.imag_residue = float(out[:, 1].max())
        return out[:, 0].copy()


def synthesize_realizations(spectrum, response, filt, config: RealizationConfig) -> Ensemble:
    return Ensemble(spectrum, response, filt, config)


@dataclass
class PhaseSampleSet:
    """Sampled phases with their moments and standard errors."""

    phases: np.ndarray = field(repr=False)
    variance: float
    variance_se: float
    contrast: complex
    contrast_se_re: float
    contrast_se_im: float

    @property
    def n(self) -> int:
        return int(self.phases.size)


def empirical_contrast(samples) -> tuple[complex, float, float]:
    """``<exp(i dphi)>`` with the standard errors of its real and imaginary parts.

    ``samples`` is a :class:`PhaseSampleSet` or an array of phases.
    """
    phases = np.asarray(getattr(samples, "phases", samples), dtype=float)
    n = phases.size
    if n < 100:
        raise ValidationError(f"empirical contrast needs at least 100 samples, got {n}")
    c, s = np.cos(phases), np.sin(phases)
    return (complex(c.mean(), s.mean()), float(c.std(ddof=1) / math.sqrt(n)),
            float(s.std(ddof=1) / math.sqrt(n)))


def sample_phase(ensemble: Ensemble, apparatus: ApparatusFunction | None = None
                 ) -> PhaseSampleSet:
    """Phase of every realization; ``apparatus`` replaces the path-derived tensors.

    An apparatus function must be sampled at every synthesis bin, both signs.
    """
    if apparatus is not None:
        ensemble.use_tensors(_on_bins(apparatus, ensemble.omega),
                             _on_bins(apparatus, -ensemble.omega))
    ph = ensemble.phases()
    n = ph.size
    d = ph - ph.mean()
    m2 = float(np.mean(d ** 2))
    m4 = float(np.mean(d ** 4))
    var = float(np.var(ph, ddof=1))
    c, se_re, se_im = empirical_contrast(ph)
    return PhaseSampleSet(ph, var, math.sqrt(max(m4 - m2 * m2, 0.0) / n), c, se_re, se_im)


def _on_bins(af: ApparatusFunction, omega: np.ndarray) -> np.ndarray:
    grid = np.asarray(af.omega, dtype=float)
    order = np.argsort(grid)
    pos = np.searchsorted(grid[order], omega)
    pos = np.clip(pos, 0, grid.size - 1)
    idx = order[pos]
    tol = 1e-12 * np.maximum(np.abs(omega), 1.0)
    if grid.size == 0 or np.any(np.abs(grid[idx] - omega) > tol):
        missing = omega[np.abs(grid[idx] - omega) > tol] if grid.size else omega
        raise ValidationError(
            f"apparatus grid does not contain the synthesis bins (first missing "
            f"omega = {missing[0]:.6g} rad/s, {missing.size} in total)")
    return af.tensors[idx]


def tensor_statistics(ensemble: Ensemble, n: int | None = None) -> dict:
    """Time and ensemble averages ``<h_xx^2>``, ``<h_xy^2>``, ``<h_xx h_yy>``."""
    n = min(n or len(ensemble), len(ensemble))
    xx = xy = xxyy = 0.0
    for i in range(n):
        h = ensemble.time_series(i)
        xx += float(np.mean(h[:, 0, 0] ** 2))
        xy += float(np.mean(h[:, 0, 1] ** 2))
        xxyy += float(np.mean(h[:, 0, 0] * h[:, 1, 1]))
    xx, xy, xxyy = xx / n, xy / n, xxyy / n
    return {"h_xx2": xx, "h_xy2": xy, "h_xx_h_yy": xxyy, "ratio_xx_xy": xx / xy,
            "ratio_xxyy_xx": xxyy / xx, "realizations": n}


def validate(spectrum, response, filt, config: RealizationConfig,
             q: QuadratureConfig | None = None) -> dict:
    """Compare sampled phase statistics with the quadrature result.

    Returns a report dictionary with stable key order holding both sides,
    the standard errors, the z-scores and pass flags at 4 standard errors.
    """
    ens = synthesize_realizations(spectrum, response, filt, config)
    analytic = variance(spectrum, ens.path, filt, q, keep_samples=False)
    inputs = {"spectrum": spectrum.to_dict(), "filter": filt.to_dict(),
              "path": ens.path.fingerprint()}
    stats = sample_phase(ens)
    v_exp = contrast(analytic.dphi2)
    z_var = (stats.variance - analytic.dphi2) / stats.variance_se if stats.variance_se else 0.0
    z_re = (stats.contrast.real - v_exp) / stats.contrast_se_re if stats.contrast_se_re else 0.0
    z_im = stats.contrast.imag / stats.contrast_se_im if stats.contrast_se_im else 0.0
    return {
        "config": config.to_dict(),
        "inputs": inputs,
        "bins": int(ens.omega.size),
        "omega_max_rad_s": float(ens.omega[-1]),
        "hermitian_residue": ens.tensor_residue,
        "imag_residue": ens.imag_residue,
        "analytic": {"dphi2_rad2": analytic.dphi2, "contrast": v_exp},
        "empirical": {"variance_rad2": stats.variance, "variance_se": stats.variance_se,
                      "contrast_re": stats.contrast.real, "contrast_im": stats.contrast.imag,
                      "contrast_se_re": stats.contrast_se_re,
                      "contrast_se_im": stats.contrast_se_im},
        "z": {"variance": z_var, "contrast_re": z_re, "contrast_im": z_im},
        "pass": {"variance": abs(z_var) <= Z_ACCEPT, "contrast_re": abs(z_re) <= Z_ACCEPT},
    }
