"""Scenario configuration: TOML ingestion, canonical echo and bundled presets.

A scenario file has the sections ``[probe]``, ``[geometry]``,
``[measurement]``, ``[spectrum]``, ``[splitter]``, ``[mc]`` and
``[quadrature]``.  Every key carries its unit as a suffix.  A report written
by the CLI holds the canonical form of its scenario under ``[inputs]`` and
can be loaded back unchanged.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import tomli

from .apparatus import (FixedSplitter, Geometry, GratingSplitter, RamanSplitter,
                        sin_alpha_from_transfer, splitter_energy_transfer)
from .constants import AMU, EV, HBAR
from .decoherence import bec_amplification, variance
from .errors import ValidationError
from .filters import Average, Brickwall, NoFilter, brickwall_for
from .montecarlo import RealizationConfig
from .quadrature import QuadratureConfig
from .spectra import (CompositeSpectrum, CosmologicalSpectrum, PlateauSpectrum,
                      spectrum_from_dict)

SECTIONS = ("probe", "geometry", "measurement", "spectrum", "splitter", "mc", "quadrature")
_KEYS = {
    "probe": {"mass_amu", "mass_kg", "velocity_m_s", "bec_N"},
    "geometry": {"alpha_rad", "sin_alpha", "arm_length_m", "tau_s"},
    "measurement": {"T_s", "filter", "cutoff", "omega_c_rad_s"},
    "splitter": {"kind", "delta_E_eV", "delta_E_J", "n_photons", "per_photon_eV",
                 "per_photon_J", "slit_width_m", "order", "velocity_m_s"},
    "mc": {"n_realizations", "seed", "dt_s", "duration_s", "workers"},
    "quadrature": {"rel_tol", "max_panels", "max_decades"},
}


@dataclass(frozen=True)
class MCSettings:
    n_realizations: int = 10_000
    seed: int = 0
    dt: float | None = None
    duration: float | None = None
    workers: int = 1

    def to_dict(self) -> dict:
        d = {"n_realizations": self.n_realizations, "seed": self.seed}
        if self.dt is not None:
            d["dt_s"] = self.dt
        if self.duration is not None:
            d["duration_s"] = self.duration
        # workers is left out so reports do not depend on the parallelism level
        return d


@dataclass(frozen=True)
class Scenario:
    """Everything needed to evaluate the phase variance of one setup."""

    geometry: Geometry
    spectrum: object
    filter_kind: str = "brickwall"
    cutoff: str = "angular"
    omega_c: float | None = None
    splitter: object | None = None
    bec_N: int = 1
    mc: MCSettings = field(default_factory=MCSettings)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    name: str = ""

    def __post_init__(self):
        if self.filter_kind not in ("brickwall", "average", "none"):
            raise ValidationError(
                f"unknown filter '{self.filter_kind}' (valid: brickwall, average, none)")
        if self.filter_kind != "none" and self.geometry.T is None and self.omega_c is None:
            raise ValidationError(f"filter '{self.filter_kind}' needs [measurement] T_s")
        if self.bec_N < 1:
            raise ValidationError(f"bec_N must be >= 1, got {self.bec_N}")
        self.filter  # validate eagerly

    @property
    def filter(self):
        if self.filter_kind == "none":
            return NoFilter()
        if self.filter_kind == "average":
            return Average(self.geometry.T)
        if self.omega_c is not None:
            return Brickwall(self.omega_c)
        return brickwall_for(self.geometry.T, self.cutoff)

    @property
    def delta_Omega(self) -> float | None:
        return None if self.splitter is None else splitter_energy_transfer(self.splitter)

    def evaluate(self, keep_samples: bool = False):
        """Phase variance of the scenario, BEC factor included."""
        res = variance(self.spectrum, self.geometry, self.filter, self.quadrature,
                       keep_samples=keep_samples)
        if self.bec_N > 1:
            samples = res.samples
            res = bec_amplification(self.bec_N, res)
            res.samples = samples
        return res

    def realization_config(self, seed: int | None = None) -> RealizationConfig:
        """Monte Carlo settings, with the smallest admissible grid as default."""
        g, f = self.geometry, self.filter
        duration = self.mc.duration
        if duration is None:
            duration = 20.0 * max(f.timescale(), 2.0 * g.tau)
        dt = self.mc.dt
        if dt is None:
            w_support = min(self.spectrum.support_edge(), 2.0 * math.pi / g.tau)
            dt = 2.0 * math.pi / (10.0 * w_support)
        return RealizationConfig(duration, dt, self.mc.n_realizations,
                                 self.mc.seed if seed is None else seed, self.mc.workers)

    # -- sweeps

    def with_axis(self, axis: str, value: float) -> Scenario:
        """Copy with one parameter replaced (mass in amu, other axes SI).

        With a splitter the aperture follows ``sin(alpha) = delta_Omega / Omega``;
        sweeping ``aperture`` drops the splitter.
        """
        new = self._with_axis(axis, value)
        if new.splitter is not None and axis in ("mass", "velocity"):
            s = sin_alpha_from_transfer(new.delta_Omega, new.geometry.Omega)
            new = replace(new, geometry=new.geometry.evolve(sin_alpha=s))
        return new

    def _with_axis(self, axis: str, value: float) -> Scenario:
        g = self.geometry
        value = float(value)
        if axis == "mass":
            return replace(self, geometry=g.evolve(mass=value * AMU))
        if axis == "velocity":
            return replace(self, geometry=g.evolve(velocity=value))
        if axis == "aperture":
            return replace(self, geometry=g.evolve(alpha=value), splitter=None)
        if axis == "arm_length":
            return replace(self, geometry=g.evolve(arm_length=value))
        if axis == "tau":
            return replace(self, geometry=g.evolve(tau=value))
        if axis == "T":
            return replace(self, geometry=g.evolve(T=value))
        if axis == "omega_high":
            if not isinstance(self.spectrum, PlateauSpectrum):
                raise ValidationError("axis omega_high needs a plateau spectrum")
            return replace(self, spectrum=replace(self.spectrum, omega_high=value))
        if axis == "omega_gw":
            return replace(self, spectrum=_replace_omega_gw(self.spectrum, value))
        if axis == "N":
            if value != int(value):
                raise ValidationError(f"atom number must be an integer, got {value}")
            return replace(self, bec_N=int(value))
        raise ValidationError(f"unknown sweep axis '{axis}'")

    # -- canonical form

    def to_config(self) -> dict:
        """Config dictionary that :func:`scenario_from_dict` maps back to ``self``."""
        g = self.geometry
        probe = {"mass_kg": g.mass, "velocity_m_s": g.velocity, "bec_N": self.bec_N}
        geom = {}
        if self.splitter is None:
            geom["alpha_rad"] = g.alpha
        if g.arm_length is not None:
            geom["arm_length_m"] = g.arm_length
        else:
            geom["tau_s"] = g.tau
        meas = {"filter": self.filter_kind, "cutoff": self.cutoff}
        if g.T is not None:
            meas["T_s"] = g.T
        if self.omega_c is not None:
            meas["omega_c_rad_s"] = self.omega_c
        d = {"probe": probe, "geometry": geom, "measurement": meas,
             "spectrum": _spectrum_config(self.spectrum)}
        if self.splitter is not None:
            d["splitter"] = _splitter_config(self.splitter)
        d["mc"] = self.mc.to_dict()
        d["quadrature"] = self.quadrature.to_dict()
        return d


def _replace_omega_gw(spectrum, value):
    if isinstance(spectrum, CosmologicalSpectrum):
        return replace(spectrum, omega_gw=value)
    if isinstance(spectrum, CompositeSpectrum):
        hits = [isinstance(m, CosmologicalSpectrum) for m in spectrum.members]
        if any(hits):
            return CompositeSpectrum(tuple(replace(m, omega_gw=value) if h else m
                                           for m, h in zip(spectrum.members, hits)))
    raise ValidationError("axis omega_gw needs a cosmological spectrum component")


def _spectrum_config(spectrum) -> dict:
    return spectrum.to_dict()


def _splitter_config(s) -> dict:
    return s.to_dict()


# --------------------------------------------------------------------------
# loading


def _line_of(text: str, section: str, key: str) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (best effort)."""
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"\s*{re.escape(key)}\s*=", line):
            return i
    return None


def _where(source: str, text: str | None, section: str, key: str | None = None) -> str:
    line = _line_of(text, section, key) if (text and key) else None
    if line is None and text:
        for i, ln in enumerate(text.splitlines(), start=1):
            if re.match(rf"\s*\[{re.escape(section)}\]", ln):
                line = i
                break
    loc = f"{source}:{line}" if line else source
    return f"{loc}: [{section}]" + (f" {key}" if key else "")


def _num(sec: dict, key: str, where, kind=float, default=None, required=False):
    if key not in sec:
        if required:
            raise ValidationError(f"{where(None)}: missing required key '{key}'")
        return default
    v = sec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{where(key)}: expected a number, got {v!r}")
    if kind is int:
        if float(v) != int(v):
            raise ValidationError(f"{where(key)}: expected an integer, got {v!r}")
        return int(v)
    return float(v)


def scenario_from_dict(cfg: dict, source: str = "<config>", text: str | None = None,
                       base_dir: Path | None = None, name: str = "") -> Scenario:
    """Build a scenario; errors name the file, line and key where possible."""
    if "inputs" in cfg and isinstance(cfg["inputs"], dict):
        cfg = cfg["inputs"]
    unknown = sorted(set(cfg) - set(SECTIONS))
    if unknown:
        raise ValidationError(f"{_where(source, text, unknown[0])}: unknown section "
                              f"(valid: {', '.join(SECTIONS)})")
    for sec, allowed in _KEYS.items():
        for key in cfg.get(sec, {}):
            if key not in allowed:
                raise ValidationError(f"{_where(source, text, sec, key)}: unknown key "
                                      f"(valid: {', '.join(sorted(allowed))})")

    def w(sec):
        return lambda key: _where(source, text, sec, key)

    probe, geom = cfg.get("probe", {}), cfg.get("geometry", {})
    meas, mc, quad = cfg.get("measurement", {}), cfg.get("mc", {}), cfg.get("quadrature", {})
    try:
        mass_kg = _num(probe, "mass_kg", w("probe"))
        mass_amu = _num(probe, "mass_amu", w("probe"))
        if (mass_kg is None) == (mass_amu is None):
            raise ValidationError(f"{w('probe')(None)}: give exactly one of mass_amu, mass_kg")
        velocity = _num(probe, "velocity_m_s", w("probe"), required=True)
        bec_N = _num(probe, "bec_N", w("probe"), int, 1)

        splitter = None
        if "splitter" in cfg:
            splitter = _splitter_from(cfg["splitter"], velocity, w("splitter"))
        alpha = _num(geom, "alpha_rad", w("geometry"))
        sin_alpha = _num(geom, "sin_alpha", w("geometry"))
        n_angle = (alpha is not None) + (sin_alpha is not None)
        if n_angle > 1:
            raise ValidationError(f"{w('geometry')(None)}: give one of alpha_rad, sin_alpha")
        if splitter is not None and n_angle:
            raise ValidationError(f"{w('geometry')(None)}: the aperture is set by [splitter]; "
                                  f"drop alpha_rad/sin_alpha")
        T = _num(meas, "T_s", w("measurement"))
        arm = _num(geom, "arm_length_m", w("geometry"))
        tau = _num(geom, "tau_s", w("geometry"))
        m = mass_kg if mass_kg is not None else mass_amu * AMU
        if splitter is not None:
            omega = m * velocity ** 2 / (2.0 * HBAR)
            sin_alpha = sin_alpha_from_transfer(splitter_energy_transfer(splitter), omega)
        if alpha is None and sin_alpha is None:
            raise ValidationError(f"{w('geometry')(None)}: missing aperture "
                                  f"(alpha_rad or sin_alpha, or a [splitter])")
        g = Geometry.build(mass=m, velocity=velocity, alpha=alpha, sin_alpha=sin_alpha,
                           arm_length=arm, tau=tau, T=T)

        filt = meas.get("filter", "brickwall")
        cutoff = meas.get("cutoff", "angular")
        if cutoff not in ("angular", "inverse"):
            raise ValidationError(f"{w('measurement')('cutoff')}: expected 'angular' or "
                                  f"'inverse', got {cutoff!r}")
        omega_c = _num(meas, "omega_c_rad_s", w("measurement"))
        if "spectrum" not in cfg:
            raise ValidationError(f"{source}: missing [spectrum] section")
        try:
            spectrum = spectrum_from_dict(cfg["spectrum"], base_dir)
        except ValidationError as exc:
            bad = [k for k in cfg["spectrum"] if f"'{k}'" in str(exc)]
            raise ValidationError(f"{_where(source, text, 'spectrum', bad[0] if bad else None)}"
                                  f": {exc}") from None
        settings = MCSettings(_num(mc, "n_realizations", w("mc"), int, 10_000),
                              _num(mc, "seed", w("mc"), int, 0),
                              _num(mc, "dt_s", w("mc")), _num(mc, "duration_s", w("mc")),
                              _num(mc, "workers", w("mc"), int, 1))
        q = QuadratureConfig(_num(quad, "rel_tol", w("quadrature"), float, 1e-6),
                             _num(quad, "max_panels", w("quadrature"), int, 4_000_000),
                             _num(quad, "max_decades", w("quadrature"), int, 80))
        return Scenario(g, spectrum, filt, cutoff, omega_c, splitter, bec_N, settings, q, name)
    except ValidationError as exc:
        msg = str(exc)
        if not msg.startswith(source):
            msg = f"{source}: {msg}"
        raise ValidationError(msg) from None


def _splitter_from(sec: dict, velocity: float, where) -> object:
    kind = sec.get("kind")
    if kind == "fixed":
        if "delta_E_eV" in sec:
            return FixedSplitter(_num(sec, "delta_E_eV", where) * EV)
        return FixedSplitter(_num(sec, "delta_E_J", where, required=True))
    if kind == "raman":
        n = _num(sec, "n_photons", where, int, required=True)
        if "per_photon_eV" in sec:
            e = _num(sec, "per_photon_eV", where) * EV
        else:
            e = _num(sec, "per_photon_J", where, required=True)
        return RamanSplitter(n, e)
    if kind == "grating":
        return GratingSplitter(_num(sec, "slit_width_m", where, required=True),
                               _num(sec, "order", where, int, 1),
                               _num(sec, "velocity_m_s", where, float, velocity))
    raise ValidationError(f"{where('kind')}: unknown splitter {kind!r} "
                          f"(valid: fixed, raman, grating)")


def load_scenario(path) -> Scenario:
    """Read a TOML scenario (or a CLI report) from ``path``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        cfg = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return scenario_from_dict(cfg, str(path), text, path.parent, name=path.stem)


def loads_scenario(text: str, source: str = "<string>", name: str = "") -> Scenario:
    try:
        cfg = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ValidationError(f"{source}: {exc}") from None
    return scenario_from_dict(cfg, source, text, name=name)


# --------------------------------------------------------------------------
# presets

# Plateau spectrum shared by the laboratory presets: the binary confusion
# background, flat at 1e-34 s between 1 uHz and 1 mHz with fourth-power
# rolloffs.  These edges and exponents are calibrated choices.
_PLATEAU = """
[spectrum]
kind = "plateau"
S0_s = 1e-34
omega_low_rad_s = 6.283185307179586e-06
omega_high_rad_s = 0.006283185307179587
p_low = 4.0
p_high = 4.0
"""

PRESETS = {
    # cold caesium, single Raman transition of ~1e-9 eV, 1 s per arm
    "hyper": """
[probe]
mass_amu = 132.905
velocity_m_s = 0.2
[geometry]
arm_length_m = 0.2
[measurement]
T_s = 10.0
filter = "brickwall"
[splitter]
kind = "fixed"
delta_E_eV = 1e-9
""" + _PLATEAU,
    # caesium at 2 m/s; each photon recoil (D2 line) transfers v hbar k ~ 9.7e-9 eV
    "raman140": """
[probe]
mass_amu = 132.905
velocity_m_s = 2.0
[geometry]
arm_length_m = 2.0
[measurement]
T_s = 10.0
filter = "brickwall"
[splitter]
kind = "raman"
n_photons = 140
per_photon_eV = 9.7e-9
""" + _PLATEAU,
    "macromolecule": """
[probe]
mass_amu = 8e8
velocity_m_s = 1000.0
[geometry]
sin_alpha = 1.0
arm_length_m = 1.0
[measurement]
T_s = 100.0
filter = "brickwall"
""" + _PLATEAU,
    "cosmo": """
[probe]
mass_amu = 8e8
velocity_m_s = 1000.0
[geometry]
sin_alpha = 1.0
arm_length_m = 1.0
[measurement]
T_s = 100.0
filter = "brickwall"
[spectrum]
kind = "cosmological"
omega_gw = 1e-14
H0_km_s_Mpc = 70.0
""",
}


def preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset '{name}' (valid: {', '.join(PRESETS)})")
    return loads_scenario(PRESETS[name], f"<preset {name}>", name=name)
