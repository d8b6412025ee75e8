"""Measurement filters F[omega] = |f[omega]|^2 selecting the uncontrolled noise."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ValidationError

# upper bound of (1 - sin(x)/x)^2; the maximum is 1.48166 at x = 4.4934
AVERAGE_FILTER_MAX = 1.4818


@dataclass(frozen=True)
class Brickwall:
    """High-pass step: 0 below ``omega_c``, 1 above."""

    omega_c: float
    kind = "brickwall"

    def __post_init__(self):
        if not (self.omega_c > 0.0 and math.isfinite(self.omega_c)):
            raise ValidationError(f"brickwall cutoff must be > 0, got {self.omega_c}")

    def __call__(self, omega):
        w = np.abs(np.asarray(omega, dtype=float))
        out = np.where(w < self.omega_c, 0.0, 1.0)
        return out if out.ndim else float(out)

    def breakpoints(self) -> tuple[float, ...]:
        return (self.omega_c,)

    def low_cutoff(self) -> float:
        return self.omega_c

    def low_exponent(self) -> float:
        return math.inf

    def bound_above(self, w0: float) -> float:
        return 1.0

    def deviation_above(self, w0: float) -> float:
        """Bound on ``|F - 1|`` over ``[w0, inf)``."""
        return 0.0 if w0 >= self.omega_c else 1.0

    def timescale(self) -> float:
        return 2.0 * math.pi / self.omega_c

    def to_dict(self) -> dict:
        return {"kind": self.kind, "omega_c_rad_s": self.omega_c}


@dataclass(frozen=True)
class Average:
    """Subtraction of the running mean over ``T``: ``(1 - sinc(omega T / 2))**2``."""

    T: float
    kind = "average"

    def __post_init__(self):
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ValidationError(f"averaging time must be > 0, got {self.T}")

    def __call__(self, omega):
        x = 0.5 * np.asarray(omega, dtype=float) * self.T
        out = (1.0 - np.sinc(x / math.pi)) ** 2
        return out if out.ndim else float(out)

    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def low_cutoff(self) -> float:
        return 0.0

    def low_exponent(self) -> float:
        return 4.0

    def bound_above(self, w0: float) -> float:
        """Upper bound of F on ``[w0, inf)`` from ``|sinc x| <= 1/x``."""
        x = 0.5 * w0 * self.T
        return min(AVERAGE_FILTER_MAX, (1.0 + 1.0 / x) ** 2) if x > 0 else AVERAGE_FILTER_MAX

    def deviation_above(self, w0: float) -> float:
        x = 0.5 * w0 * self.T
        return min(1.0, 2.0 / x + 1.0 / x ** 2) if x > 0 else 1.0

    def timescale(self) -> float:
        return self.T

    def to_dict(self) -> dict:
        return {"kind": self.kind, "T_s": self.T}


@dataclass(frozen=True)
class NoFilter:
    """All noise counted as uncontrolled."""

    kind = "none"

    def __call__(self, omega):
        out = np.ones(np.shape(omega))
        return out if out.ndim else 1.0

    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def low_cutoff(self) -> float:
        return 0.0

    def low_exponent(self) -> float:
        return 0.0

    def bound_above(self, w0: float) -> float:
        return 1.0

    def deviation_above(self, w0: float) -> float:
        return 0.0

    def timescale(self) -> float:
        return 0.0

    def to_dict(self) -> dict:
        return {"kind": self.kind}


FilterSpec = Union[Brickwall, Average, NoFilter]


def filter_eval(spec: FilterSpec, omega):
    """Evaluate F[omega] (dimensionless)."""
    return spec(omega)


def brickwall_for(T: float, convention: str = "angular") -> Brickwall:
    """Brickwall for a measuring time T.

    ``convention='angular'`` puts the cutoff at ``2 pi / T``;
    ``'inverse'`` at ``1 / T``.
    """
    if not T > 0.0:
        raise ValidationError(f"measuring time must be > 0, got {T}")
    if convention == "angular":
        return Brickwall(2.0 * math.pi / T)
    if convention == "inverse":
        return Brickwall(1.0 / T)
    raise ValidationError(f"unknown cutoff convention '{convention}' (valid: angular, inverse)")


def filter_from_dict(d: dict) -> FilterSpec:
    d = dict(d)
    kind = d.pop("kind")
    if kind == "brickwall":
        f = Brickwall(float(d.pop("omega_c_rad_s")))
    elif kind == "average":
        f = Average(float(d.pop("T_s")))
    elif kind == "none":
        f = NoFilter()
    else:
        raise ValidationError(f"unknown filter '{kind}' (valid: brickwall, average, none)")
    if d:
        raise ValidationError(f"filter '{kind}': unknown keys {sorted(d)}")
    return f
