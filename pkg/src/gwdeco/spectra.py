"""Strain spectral densities of stochastic gravitational-wave backgrounds.

Convention: ``S_h[omega]`` is the two-sided density in angular frequency,
paired with the measure ``d omega / 2 pi`` over the whole real line, so that
the equal-time variance of one metric polarization is
``integral d omega/2pi S_h``.  Units are seconds.  Every model is even in
omega and is evaluated on ``|omega|``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .constants import H0_DEFAULT, TWO_PI, hubble_rate
from .errors import DomainError, ValidationError

# S_h = COSMO_K * Omega_gw * H0^2 / omega^3.  From
#   Omega_gw(f) = (2 pi^2 / 3 H0^2) f^3 S_one_sided(f),  f = omega / 2 pi,
# and S_two_sided = S_one_sided / 2.
COSMO_K = 6.0 * math.pi

DEFAULT_S0 = 1e-34  # s
DEFAULT_OMEGA_LOW = TWO_PI * 1e-6  # rad/s
DEFAULT_OMEGA_HIGH = TWO_PI * 1e-3  # rad/s
DEFAULT_ROLLOFF = 4.0


def _power_integral(c: float, e: float, a: float, b: float) -> float:
    """Integral of ``c * w**e`` over ``[a, b]`` with ``0 < a <= b <= inf``."""
    if c == 0.0 or a >= b:
        return 0.0
    if math.isinf(b):
        if e >= -1.0:
            return math.inf
        return c * (-(a ** (e + 1.0))) / (e + 1.0)
    if e == -1.0:
        return c * math.log(b / a)
    return c * (b ** (e + 1.0) - a ** (e + 1.0)) / (e + 1.0)


@dataclass(frozen=True)
class PlateauSpectrum:
    """Flat level ``S0`` on ``[omega_low, omega_high]`` with power-law rolloffs.

    Below the plateau ``S0 (w/omega_low)**p_low``, above it
    ``S0 (omega_high/w)**p_high``.  ``omega_low = 0`` or
    ``omega_high = inf`` removes the corresponding rolloff.
    """

    S0: float = DEFAULT_S0
    omega_low: float = DEFAULT_OMEGA_LOW
    omega_high: float = DEFAULT_OMEGA_HIGH
    p_low: float = DEFAULT_ROLLOFF
    p_high: float = DEFAULT_ROLLOFF

    kind = "plateau"

    def __post_init__(self):
        if not self.S0 >= 0.0:
            raise ValidationError(f"plateau S0 must be >= 0, got {self.S0}")
        if not (0.0 <= self.omega_low < self.omega_high):
            raise ValidationError(
                f"plateau edges need 0 <= omega_low < omega_high, got "
                f"{self.omega_low}, {self.omega_high}")
        if self.p_low < 0.0 or self.p_high < 0.0:
            raise ValidationError("plateau rolloff exponents must be >= 0")

    def __call__(self, omega):
        w = np.abs(np.asarray(omega, dtype=float))
        out = np.full(w.shape, self.S0)
        if self.omega_low > 0.0:
            lo = w < self.omega_low
            out[lo] = self.S0 * (w[lo] / self.omega_low) ** self.p_low
        if math.isfinite(self.omega_high):
            hi = w > self.omega_high
            out[hi] = self.S0 * (self.omega_high / w[hi]) ** self.p_high
        return out if out.ndim else float(out)

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(w for w in (self.omega_low, self.omega_high)
                     if 0.0 < w < math.inf)

    def low_exponent(self) -> float:
        return self.p_low if self.omega_low > 0.0 else 0.0

    def support_edge(self) -> float:
        return self.omega_high

    def tail_integral(self, w0: float, k: float = 2.0) -> float:
        """Integral of ``S(w) w**-k`` over ``[w0, inf)``."""
        wl, wh, s0 = self.omega_low, self.omega_high, self.S0
        total = 0.0
        # rolloffs in the scaled variable u = w / edge, so edge**p cannot overflow
        if wl > 0.0 and w0 < wl:
            total += s0 * wl ** (1.0 - k) * _power_integral(
                1.0, self.p_low - k, w0 / wl, 1.0)
        total += _power_integral(s0, -k, max(w0, wl), wh)
        if math.isfinite(wh):
            total += s0 * wh ** (1.0 - k) * _power_integral(
                1.0, -self.p_high - k, max(w0, wh) / wh, math.inf)
        return total

    def to_dict(self) -> dict:
        return {"kind": self.kind, "S0_s": self.S0, "omega_low_rad_s": self.omega_low,
                "omega_high_rad_s": self.omega_high, "p_low": self.p_low,
                "p_high": self.p_high}


@dataclass(frozen=True)
class CosmologicalSpectrum:
    """Relic background, ``S_h = COSMO_K * Omega_gw * H0**2 / omega**3``."""

    omega_gw: float
    H0: float = H0_DEFAULT

    kind = "cosmological"

    def __post_init__(self):
        if not self.omega_gw >= 0.0:
            raise ValidationError(f"Omega_gw must be >= 0, got {self.omega_gw}")
        if not self.H0 > 0.0:
            raise ValidationError(f"H0 must be > 0, got {self.H0}")

    @property
    def amplitude(self) -> float:
        return COSMO_K * self.omega_gw * self.H0 ** 2

    def __call__(self, omega):
        w = np.abs(np.asarray(omega, dtype=float))
        if np.any(w == 0.0):
            raise DomainError("cosmological spectrum is not defined at omega = 0")
        out = self.amplitude / w ** 3
        return out if out.ndim else float(out)

    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def low_exponent(self) -> float:
        return -3.0 if self.omega_gw > 0.0 else math.inf

    def support_edge(self) -> float:
        return math.inf

    def tail_integral(self, w0: float, k: float = 2.0) -> float:
        return _power_integral(self.amplitude, -3.0 - k, w0, math.inf)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "omega_gw": self.omega_gw, "H0_rad_s": self.H0}


@dataclass(frozen=True)
class TabulatedSpectrum:
    """Spectrum interpolated log-log linearly between tabulated nodes.

    Segments touching a zero node fall back to linear interpolation.  Outside
    the grid the spectrum is zero, or continues the end segments as power
    laws when ``extrapolate`` is set.
    """

    omega: tuple[float, ...]
    S: tuple[float, ...]
    extrapolate: bool = False
    source: str = ""

    kind = "tabulated"

    def __post_init__(self):
        _validate_rows(list(zip(self.omega, self.S)))

    @property
    def _w(self) -> np.ndarray:
        return np.asarray(self.omega, dtype=float)

    @property
    def _s(self) -> np.ndarray:
        return np.asarray(self.S, dtype=float)

    def _segment_law(self, i: int):
        """Return ('pow', c, e) for c w**e or ('lin', a, b) for a + b w."""
        w, s = self._w, self._s
        w0, w1, s0, s1 = w[i], w[i + 1], s[i], s[i + 1]
        if s0 > 0.0 and s1 > 0.0:
            e = math.log(s1 / s0) / math.log(w1 / w0)
            return "pow", s0 * w0 ** -e, e
        b = (s1 - s0) / (w1 - w0)
        return "lin", s0 - b * w0, b

    def __call__(self, omega):
        w = np.abs(np.asarray(omega, dtype=float))
        nodes, vals = self._w, self._s
        out = np.zeros(w.shape)
        inside = (w >= nodes[0]) & (w <= nodes[-1])
        if np.any(inside):
            wi = w[inside]
            idx = np.clip(np.searchsorted(nodes, wi, side="right") - 1, 0, len(nodes) - 2)
            w0, w1 = nodes[idx], nodes[idx + 1]
            s0, s1 = vals[idx], vals[idx + 1]
            frac = (wi - w0) / (w1 - w0)
            lin = s0 + (s1 - s0) * frac
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.log(wi / w0) / np.log(w1 / w0)
                logv = np.exp(np.log(s0) + t * (np.log(s1) - np.log(s0)))
            positive = (s0 > 0.0) & (s1 > 0.0)
            res = np.where(positive, logv, lin)
            # exact at nodes
            res = np.where(wi == w0, s0, res)
            res = np.where(wi == w1, s1, res)
            out[inside] = res
        if self.extrapolate:
            for mask, i in ((w < nodes[0], 0), (w > nodes[-1], len(nodes) - 2)):
                if np.any(mask):
                    law, c, e = self._segment_law(i)
                    if law == "pow":
                        out[mask] = c * w[mask] ** e
        return out if out.ndim else float(out)

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(float(x) for x in self.omega)

    def low_exponent(self) -> float:
        if not self.extrapolate:
            return math.inf
        law, _, e = self._segment_law(0)
        return e if law == "pow" else math.inf

    def support_edge(self) -> float:
        if self.extrapolate and self._segment_law(len(self.omega) - 2)[0] == "pow":
            return math.inf
        return float(self.omega[-1])

    def tail_integral(self, w0: float, k: float = 2.0) -> float:
        nodes = self._w
        total = 0.0
        if self.extrapolate and w0 < nodes[0]:
            law, c, e = self._segment_law(0)
            if law == "pow":
                total += _power_integral(c, e - k, w0, nodes[0])
        for i in range(len(nodes) - 1):
            a, b = max(w0, nodes[i]), nodes[i + 1]
            if a >= b:
                continue
            law, c, e = self._segment_law(i)
            if law == "pow":
                total += _power_integral(c, e - k, a, b)
            else:
                total += _power_integral(c, -k, a, b) + _power_integral(e, 1.0 - k, a, b)
        if self.extrapolate:
            law, c, e = self._segment_law(len(nodes) - 2)
            if law == "pow":
                total += _power_integral(c, e - k, max(w0, nodes[-1]), math.inf)
        return total

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "extrapolate": self.extrapolate}
        if self.source:
            d["file"] = self.source
        else:
            d["omega_rad_s"] = list(self.omega)
            d["S_h_s"] = list(self.S)
        return d


@dataclass(frozen=True)
class CompositeSpectrum:
    """Sum of member spectra."""

    members: tuple = field(default_factory=tuple)

    kind = "composite"

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        out = np.zeros(w.shape)
        for m in self.members:
            out = out + m(w)
        return out if out.ndim else float(out)

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(sorted({b for m in self.members for b in m.breakpoints()}))

    def low_exponent(self) -> float:
        return min((m.low_exponent() for m in self.members), default=math.inf)

    def support_edge(self) -> float:
        return max((m.support_edge() for m in self.members), default=0.0)

    def tail_integral(self, w0: float, k: float = 2.0) -> float:
        return sum(m.tail_integral(w0, k) for m in self.members)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "components": [m.to_dict() for m in self.members]}


SpectrumModel = Union[PlateauSpectrum, CosmologicalSpectrum, TabulatedSpectrum, CompositeSpectrum]


def spectrum_eval(model: SpectrumModel, omega):
    """Evaluate ``S_h[|omega|]`` in seconds (scalar or array)."""
    return model(omega)


def plateau_model(S0: float = DEFAULT_S0, omega_low: float = DEFAULT_OMEGA_LOW,
                  omega_high: float = DEFAULT_OMEGA_HIGH, p_low: float = DEFAULT_ROLLOFF,
                  p_high: float = DEFAULT_ROLLOFF) -> PlateauSpectrum:
    return PlateauSpectrum(S0, omega_low, omega_high, p_low, p_high)


def cosmological_model(omega_gw: float, H0: float = H0_DEFAULT) -> CosmologicalSpectrum:
    return CosmologicalSpectrum(omega_gw, H0)


def composite(*members: SpectrumModel) -> CompositeSpectrum:
    return CompositeSpectrum(tuple(members))


def _validate_rows(rows: Sequence[tuple[float, float]]) -> None:
    if len(rows) < 2:
        raise ValidationError(f"tabulated spectrum needs at least 2 rows, got {len(rows)}")
    prev = None
    for i, (w, s) in enumerate(rows):
        if not (math.isfinite(w) and w > 0.0):
            raise ValidationError(f"row {i}: omega must be finite and > 0, got {w}")
        if not (math.isfinite(s) and s >= 0.0):
            raise ValidationError(f"row {i}: S_h must be finite and >= 0, got {s}")
        if prev is not None and w <= prev:
            what = "duplicate" if w == prev else "unsorted"
            raise ValidationError(f"row {i}: {what} omega {w} (previous {prev})")
        prev = w


def load_tabulated(rows: Iterable[Sequence[float]], extrapolate: bool = False,
                   source: str = "") -> TabulatedSpectrum:
    """Build a tabulated model from ``(omega, S_h)`` pairs."""
    pairs = [(float(w), float(s)) for w, s in rows]
    _validate_rows(pairs)
    w, s = zip(*pairs)
    return TabulatedSpectrum(tuple(w), tuple(s), extrapolate, source)


TABLE_HEADER = ("omega_rad_s", "S_h_s")


def load_tabulated_csv(path, extrapolate: bool = False) -> TabulatedSpectrum:
    """Read a two-column CSV with header ``omega_rad_s,S_h_s``."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TABLE_HEADER:
            raise ValidationError(f"{path}:1: expected header {','.join(TABLE_HEADER)}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 2 columns, got {len(rec)}")
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    try:
        return load_tabulated(rows, extrapolate, source=str(path))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def write_tabulated_csv(path, model: TabulatedSpectrum) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_HEADER)
        for om, s in zip(model.omega, model.S):
            w.writerow([repr(float(om)), repr(float(s))])


def spectrum_from_dict(d: dict, base_dir: Path | None = None) -> SpectrumModel:
    """Inverse of ``to_dict``; used by the scenario loader.  Unknown keys are rejected."""
    d = dict(d)
    kind = d.pop("kind", "plateau")
    try:
        model = _build_spectrum(kind, d, base_dir)
    except KeyError as exc:
        raise ValidationError(f"spectrum '{kind}': missing key {exc}") from None
    if d:
        raise ValidationError(f"spectrum '{kind}': unknown keys {sorted(d)}")
    return model


def _build_spectrum(kind: str, d: dict, base_dir: Path | None) -> SpectrumModel:
    if kind == "plateau":
        return PlateauSpectrum(
            S0=float(d.pop("S0_s", DEFAULT_S0)),
            omega_low=float(d.pop("omega_low_rad_s", DEFAULT_OMEGA_LOW)),
            omega_high=float(d.pop("omega_high_rad_s", DEFAULT_OMEGA_HIGH)),
            p_low=float(d.pop("p_low", DEFAULT_ROLLOFF)),
            p_high=float(d.pop("p_high", DEFAULT_ROLLOFF)))
    if kind == "cosmological":
        h0 = d.pop("H0_rad_s", None)
        if "H0_km_s_Mpc" in d:
            h0 = hubble_rate(float(d.pop("H0_km_s_Mpc")))
        return CosmologicalSpectrum(float(d.pop("omega_gw")),
                                    H0_DEFAULT if h0 is None else float(h0))
    if kind == "tabulated":
        extrapolate = bool(d.pop("extrapolate", False))
        if "file" in d:
            p = Path(d.pop("file"))
            if base_dir is not None and not p.is_absolute():
                p = base_dir / p
            return load_tabulated_csv(p, extrapolate)
        return load_tabulated(zip(d.pop("omega_rad_s"), d.pop("S_h_s")), extrapolate)
    if kind == "composite":
        return CompositeSpectrum(tuple(spectrum_from_dict(c, base_dir)
                                       for c in d.pop("components")))
    raise ValidationError(
        f"unknown spectrum kind '{kind}' (valid: plateau, cosmological, tabulated, composite)")
