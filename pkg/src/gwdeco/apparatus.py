"""Interferometer geometry and its response to metric perturbations.

Two routes to the response function are provided:

* :func:`mz_response`, the closed form for a rhombic Mach-Zehnder,
  ``(4 Omega sin(alpha))**2 ((1 - cos(omega tau)) / omega)**2``;
* :func:`apparatus_function`, the tensor transfer function ``a^ij[omega]``
  computed from the arm trajectories of a point probe, followed by
  :func:`response_from_apparatus_function` which contracts it with the
  isotropic correlation tensor.

Geometry convention: ``alpha`` is the full opening angle between the two
arms.  The beam travels along x with speed ``v``; the splitter adds a
transverse velocity ``+-v tan(alpha/2)`` and the mirrors at ``t = tau``
reverse it, so both arms recombine at ``t = 2 tau``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .constants import AMU, C_LIGHT, EV, HBAR
from .errors import OutOfRangeError, ValidationError
from .tensor import SymTensor3, contract_delta_arrays

KERNEL_SERIES_THRESHOLD = 1e-6
WIDE_APERTURE = 0.3  # rad; above this both response routes are reported


@dataclass(frozen=True)
class Geometry:
    """Probe and interferometer parameters (SI units).

    ``tau`` is the time of flight along one arm.  When ``arm_length`` is set,
    ``tau = arm_length / velocity`` and is kept in sync by :meth:`evolve`.
    """

    mass: float
    velocity: float
    alpha: float
    tau: float
    T: float | None = None
    arm_length: float | None = None

    def __post_init__(self):
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise ValidationError(f"mass must be > 0 kg, got {self.mass}")
        if not (0.0 <= self.velocity < C_LIGHT):
            raise ValidationError(f"velocity must satisfy 0 <= v < c, got {self.velocity}")
        if not (0.0 <= self.alpha <= math.pi / 2 + 1e-15):
            raise ValidationError(f"aperture must lie in [0, pi/2] rad, got {self.alpha}")
        if not (self.tau > 0.0 and math.isfinite(self.tau)):
            raise ValidationError(f"time of flight must be finite and > 0, got {self.tau}")
        if self.T is not None and not self.T >= 2.0 * self.tau * (1 - 1e-12):
            raise ValidationError(
                f"measuring time T = {self.T} s is shorter than 2 tau = {2 * self.tau} s")

    @classmethod
    def build(cls, *, mass: float | None = None, mass_amu: float | None = None,
              velocity: float, alpha: float | None = None, sin_alpha: float | None = None,
              arm_length: float | None = None, tau: float | None = None,
              T: float | None = None) -> Geometry:
        """Construct from whichever parameterization is at hand."""
        if (mass is None) == (mass_amu is None):
            raise ValidationError("give exactly one of mass (kg) or mass_amu")
        m = mass if mass is not None else mass_amu * AMU
        if (alpha is None) == (sin_alpha is None):
            raise ValidationError("give exactly one of alpha or sin_alpha")
        if sin_alpha is not None:
            if not 0.0 <= sin_alpha <= 1.0:
                raise ValidationError(f"sin_alpha must lie in [0, 1], got {sin_alpha}")
            alpha = math.asin(sin_alpha)
        if (arm_length is None) == (tau is None):
            raise ValidationError("give exactly one of arm_length or tau")
        if arm_length is not None:
            if not velocity > 0.0:
                raise ValidationError("arm_length needs velocity > 0 to define tau")
            tau = arm_length / velocity
        return cls(m, velocity, alpha, tau, T, arm_length)

    def evolve(self, **changes) -> Geometry:
        """Copy with changes; recomputes ``tau`` from a fixed arm length."""
        if "sin_alpha" in changes:
            changes["alpha"] = math.asin(changes.pop("sin_alpha"))
        if "tau" in changes:
            changes.setdefault("arm_length", None)
        new = replace(self, **changes) if changes else self
        if new.arm_length is not None:
            new = replace(new, tau=new.arm_length / new.velocity)
        return new

    @property
    def sin_alpha(self) -> float:
        return math.sin(self.alpha)

    @property
    def mass_amu(self) -> float:
        return self.mass / AMU

    @property
    def Omega(self) -> float:
        """Kinetic energy of the probe as an angular frequency, m v^2 / 2 hbar."""
        return self.mass * self.velocity ** 2 / (2.0 * HBAR)

    @property
    def coupling(self) -> float:
        """Omega sin(alpha), in rad/s."""
        return self.Omega * self.sin_alpha

    def to_dict(self) -> dict:
        d = {"mass_kg": self.mass, "velocity_m_s": self.velocity,
             "alpha_rad": self.alpha, "tau_s": self.tau}
        if self.arm_length is not None:
            d["arm_length_m"] = self.arm_length
        if self.T is not None:
            d["T_s"] = self.T
        return d


def _one_minus_cos_over(omega: np.ndarray, tau: float) -> np.ndarray:
    """(1 - cos(omega tau)) / omega, with the removable zero at omega = 0."""
    w = np.asarray(omega, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 2.0 * np.sin(0.5 * w * tau) ** 2 / w
    return np.where(w == 0.0, 0.0, out)


def mz_response(g: Geometry, omega):
    """Closed-form Mach-Zehnder response ``(4 Omega sin a)^2 ((1-cos w tau)/w)^2``."""
    out = (4.0 * g.coupling) ** 2 * _one_minus_cos_over(omega, g.tau) ** 2
    return out if np.ndim(out) else float(out)


def mz_envelope(g: Geometry) -> float:
    """Constant E with ``mz_response <= E / omega**2``."""
    return 4.0 * (4.0 * g.coupling) ** 2


# --------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class QuadrupolePath:
    """Piecewise-linear point-probe trajectories of the two arms.

    ``arms`` holds, per arm, a pair ``(times, positions)`` with ``times`` of
    shape (n,) and ``positions`` of shape (n, 3).
    """

    arms: tuple
    mass: float
    tau: float = field(default=0.0)

    def __post_init__(self):
        if len(self.arms) != 2:
            raise ValidationError("a path needs exactly two arms")
        for k, (t, x) in enumerate(self.arms):
            t = np.asarray(t, dtype=float)
            x = np.asarray(x, dtype=float)
            if t.ndim != 1 or x.shape != (t.size, 3) or t.size < 2:
                raise ValidationError(f"arm {k}: need n >= 2 times and an (n, 3) vertex array")
            if np.any(np.diff(t) <= 0.0):
                raise ValidationError(f"arm {k}: vertex times must be strictly increasing")
        (t1, x1), (t2, x2) = self.arms
        if t1[0] != t2[0] or t1[-1] != t2[-1]:
            raise ValidationError("open path: arms must start and end at the same times")
        scale = max(np.max(np.abs(x1)), np.max(np.abs(x2)), 1e-300)
        if (np.max(np.abs(np.asarray(x1[0]) - x2[0])) > 1e-12 * scale
                or np.max(np.abs(np.asarray(x1[-1]) - x2[-1])) > 1e-12 * scale):
            raise ValidationError("open path: arm endpoints differ")
        if self.tau <= 0.0:
            object.__setattr__(self, "tau", float(min(np.min(np.diff(t1)), np.min(np.diff(t2)))))

    @property
    def duration(self) -> float:
        t = self.arms[0][0]
        return float(t[-1] - t[0])

    def breakpoints(self) -> np.ndarray:
        return np.union1d(np.asarray(self.arms[0][0], float), np.asarray(self.arms[1][0], float))

    def position(self, arm: int, t) -> np.ndarray:
        times, pos = (np.asarray(a, dtype=float) for a in self.arms[arm])
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([np.interp(t, times, pos[:, i]) for i in range(3)], axis=-1)

    def quadrupole(self, arm: int, t) -> np.ndarray:
        """Q^ij = m (x^i x^j - delta^ij r^2/3), shape (n, 3, 3)."""
        x = self.position(arm, t)
        r2 = np.einsum("ni,ni->n", x, x)
        return self.mass * (np.einsum("ni,nj->nij", x, x) - r2[:, None, None] * np.eye(3) / 3.0)

    def delta_quadrupole(self, t) -> np.ndarray:
        """Quadrupole difference between the arms, shape (n, 3, 3)."""
        return self.quadrupole(0, t) - self.quadrupole(1, t)

    def ddot_segments(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Piecewise-constant second derivative of the quadrupole difference.

        Returns ``(t0, t1, qdd)`` with ``qdd`` of shape (s, 3, 3).  Within a
        straight segment with velocity u, d^2Q/dt^2 = m (2 u u - 2|u|^2/3 I).
        """
        bp = self.breakpoints()
        t0, t1 = bp[:-1], bp[1:]
        mid = 0.5 * (t0 + t1)
        qdd = np.zeros((mid.size, 3, 3))
        for sign, (times, pos) in zip((1.0, -1.0), self.arms):
            times = np.asarray(times, float)
            pos = np.asarray(pos, float)
            vel = np.diff(pos, axis=0) / np.diff(times)[:, None]
            idx = np.clip(np.searchsorted(times, mid, side="right") - 1, 0, len(vel) - 1)
            u = vel[idx]
            u2 = np.einsum("ni,ni->n", u, u)
            qdd += sign * self.mass * (2.0 * np.einsum("ni,nj->nij", u, u)
                                       - (2.0 / 3.0) * u2[:, None, None] * np.eye(3))
        return t0, t1, qdd

    def envelope(self) -> float:
        """Constant E with ``response <= E / omega**2`` for this path."""
        _, _, qdd = self.ddot_segments()
        amp = np.sum(np.abs(qdd), axis=0) / (2.0 * HBAR)
        return float(2.0 * np.sum(amp ** 2))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for t, x in self.arms:
            h.update(np.ascontiguousarray(t, dtype=float).tobytes())
            h.update(np.ascontiguousarray(x, dtype=float).tobytes())
        h.update(np.float64(self.mass).tobytes())
        return h.hexdigest()[:16]


def rhombic_quadrupole(g: Geometry) -> QuadrupolePath:
    """Symmetric rhombus: split at t=0, mirrors at t=tau, recombination at 2 tau."""
    v, tau = g.velocity, g.tau
    vt = v * math.tan(0.5 * g.alpha)
    t = np.array([0.0, tau, 2.0 * tau])
    up = np.array([[0.0, 0.0, 0.0], [v * tau, vt * tau, 0.0], [2.0 * v * tau, 0.0, 0.0]])
    down = up * np.array([1.0, -1.0, 1.0])
    return QuadrupolePath(((t, up), (t.copy(), down)), g.mass, tau)


def window_kernel(x, d: float):
    """(1 - exp(-i x d)) / x, with the series ``i d (1 - i x d/2 - (x d)^2/6)`` near 0."""
    x = np.asarray(x, dtype=float)
    y = x * d
    small = np.abs(y) < KERNEL_SERIES_THRESHOLD
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = (2.0 * np.sin(0.5 * y) ** 2 + 1j * np.sin(y)) / x
    series = 1j * d * (1.0 - 0.5j * y - y * y / 6.0)
    return np.where(small, series, exact)


def apparatus_tensors(path: QuadrupolePath, omega) -> np.ndarray:
    """a^ij[omega] for each omega, shape (n, 3, 3), complex.

    Equal to ``(1/4 hbar) integral dt exp(-i omega t) d^2(dQ)/dt^2``, which
    is the frequency-space convolution with the window kernel carried out
    segment by segment.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    t0, t1, qdd = path.ddot_segments()
    # integral_{t0}^{t1} exp(-i w t) dt = -i exp(-i w t0) K(w, t1 - t0)
    seg = np.empty((w.size, t0.size), dtype=complex)
    for s in range(t0.size):
        seg[:, s] = -1j * np.exp(-1j * w * t0[s]) * window_kernel(w, t1[s] - t0[s])
    return np.einsum("ns,sij->nij", seg, qdd) / (4.0 * HBAR)


@dataclass(frozen=True)
class ApparatusFunction:
    """Sampled tensor transfer function of an interferometer."""

    omega: np.ndarray
    tensors: np.ndarray
    tau: float
    geometry_hash: str
    path: QuadrupolePath | None = None

    def __len__(self) -> int:
        return int(self.omega.size)

    def hermitian_residual(self) -> float:
        """Max |a(-w) - conj a(w)| / max |a| over grid pairs (w, -w)."""
        if self.path is None:
            raise ValidationError("hermitian check needs the generating path")
        neg = apparatus_tensors(self.path, -self.omega)
        scale = max(float(np.max(np.abs(self.tensors))), 1e-300)
        return float(np.max(np.abs(neg - np.conj(self.tensors)))) / scale

    def traceless_residual(self) -> float:
        tr = np.abs(np.trace(self.tensors, axis1=-2, axis2=-1))
        scale = np.max(np.abs(self.tensors), axis=(-2, -1))
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(scale > 0, tr / scale, 0.0)
        return float(np.max(rel)) if rel.size else 0.0

    def response(self) -> np.ndarray:
        """Response on the grid (real part of the hermitian contraction)."""
        return contract_delta_arrays(self.tensors, np.conj(self.tensors)).real

    def tensor(self, i: int) -> SymTensor3:
        return SymTensor3.from_matrix(self.tensors[i])


def apparatus_function(path: QuadrupolePath, omega_grid: Sequence[float]) -> ApparatusFunction:
    """Evaluate ``a^ij`` on a grid of angular frequencies."""
    w = np.asarray(omega_grid, dtype=float)
    if w.ndim != 1 or not np.all(np.isfinite(w)):
        raise ValidationError("frequency grid must be a finite 1-d sequence")
    return ApparatusFunction(w, apparatus_tensors(path, w), path.tau, path.fingerprint(), path)


def response_from_apparatus_function(af: ApparatusFunction, omega: float) -> float:
    """Contract ``a[omega]`` with ``conj a[omega]`` through delta_ijkl."""
    if af.omega.size == 0:
        raise OutOfRangeError("empty apparatus function grid")
    lo, hi = float(np.min(af.omega)), float(np.max(af.omega))
    if not lo <= omega <= hi:
        raise OutOfRangeError(f"omega = {omega} outside apparatus grid [{lo}, {hi}]")
    hit = np.flatnonzero(af.omega == omega)
    if hit.size:
        a = af.tensors[hit[0]]
    elif af.path is not None:
        a = apparatus_tensors(af.path, [omega])[0]
    else:
        i = int(np.searchsorted(af.omega, omega))
        f = (omega - af.omega[i - 1]) / (af.omega[i] - af.omega[i - 1])
        a = (1 - f) * af.tensors[i - 1] + f * af.tensors[i]
    val = complex(contract_delta_arrays(a, np.conj(a)))
    if abs(val.imag) > 1e-9 * max(abs(val.real), 1e-300):
        raise ValidationError(f"non-real response {val} at omega = {omega}")
    return max(val.real, 0.0)


def path_response(path: QuadrupolePath, omega) -> np.ndarray:
    """Response of a generic path on an array of frequencies."""
    a = apparatus_tensors(path, omega)
    out = contract_delta_arrays(a, np.conj(a)).real
    return np.maximum(out, 0.0)


# --------------------------------------------------------------------------
# beam splitters


@dataclass(frozen=True)
class FixedSplitter:
    """Kinetic-energy transfer given directly (J)."""

    delta_E: float
    kind = "fixed"

    @property
    def energy(self) -> float:
        return self.delta_E

    def to_dict(self) -> dict:
        return {"kind": self.kind, "delta_E_J": self.delta_E}


@dataclass(frozen=True)
class RamanSplitter:
    """Multi-photon Raman splitter: ``n_photons`` transfers of ``per_photon`` J."""

    n_photons: int
    per_photon: float
    kind = "raman"

    @property
    def energy(self) -> float:
        return self.n_photons * self.per_photon

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_photons": self.n_photons, "per_photon_J": self.per_photon}


@dataclass(frozen=True)
class GratingSplitter:
    """Material grating: momentum ``2 pi hbar n / a`` converted as ``v hbar dK``."""

    slit_width: float
    order: int
    velocity: float
    kind = "grating"

    @property
    def energy(self) -> float:
        return self.velocity * 2.0 * math.pi * HBAR * self.order / self.slit_width

    def to_dict(self) -> dict:
        return {"kind": self.kind, "slit_width_m": self.slit_width, "order": self.order,
                "velocity_m_s": self.velocity}


BeamSplitter = Union[FixedSplitter, RamanSplitter, GratingSplitter]


def splitter_energy_transfer(s: BeamSplitter) -> float:
    """Kinetic-energy transfer as an angular frequency, dE_k / hbar (rad/s)."""
    e = s.energy
    if e < 0.0:
        raise ValidationError(f"energy transfer must be >= 0, got {e} J")
    return e / HBAR


def fixed_splitter_ev(delta_E_ev: float) -> FixedSplitter:
    return FixedSplitter(delta_E_ev * EV)


def sin_alpha_from_transfer(delta_Omega: float, Omega: float) -> float:
    """Aperture implied by identifying ``delta_Omega`` with ``Omega sin(alpha)``."""
    if Omega <= 0.0:
        raise ValidationError("probe kinetic frequency must be > 0")
    s = delta_Omega / Omega
    if s > 1.0:
        raise ValidationError(
            f"energy transfer {delta_Omega:.6g} rad/s exceeds the probe kinetic "
            f"frequency {Omega:.6g} rad/s (sin alpha > 1)")
    return s
