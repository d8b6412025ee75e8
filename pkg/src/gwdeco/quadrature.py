"""Panel quadrature for one-sided spectral integrals.

Computes ``I = integral_0^inf S(w) R(w) F(w) dw`` for a non-negative
integrand whose response factor ``R`` oscillates with the zeros of
``1 - cos(w tau)`` and is bounded by ``E / w**2``.

Layout of the panels:

* below ``pi / (10 tau)``: one panel per decade in ``log w``, split at the
  breakpoints of the spectrum and filter;
* above: panels of width ``pi / tau`` (half an oscillation) aligned to
  ``w tau = k pi``, again split at breakpoints.

Each panel is integrated with 16- and 32-node Gauss-Legendre rules; the
difference is the error estimate and panels that miss their share of the
tolerance are bisected.  The upper limit is reached when the analytic
bound ``E * sup F * integral S / w**2`` on the remainder falls below the
tolerance times the accumulated value.

When ``w**2 R(w)`` is periodic in ``w`` with period ``2 pi / tau``
(``tail_kernel = (mean, osc)``, ``osc`` being the sum of ``|c_k| / k`` over its
harmonics) the remainder beyond the last breakpoint is replaced by
``mean * integral S F / w**2``; the oscillating rest is bounded by the second
mean value theorem, which lets the march stop orders of magnitude earlier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DivergenceError, ValidationError

_X16, _W16 = np.polynomial.legendre.leggauss(16)
_X32, _W32 = np.polynomial.legendre.leggauss(32)
_MAX_DEPTH = 40


@dataclass(frozen=True)
class QuadratureConfig:
    """Accuracy and budget of a spectral integral.

    ``max_decades`` bounds how far below ``pi/(10 tau)`` the logarithmic
    panels may extend when no filter cuts the low side.
    """

    rel_tol: float = 1e-6
    max_panels: int = 4_000_000
    max_decades: int = 80

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-2):
            raise ValidationError(f"relative tolerance must lie in (0, 1e-2], got {self.rel_tol}")
        if self.max_panels < 16:
            raise ValidationError("max_panels must be >= 16")

    def to_dict(self) -> dict:
        return {"rel_tol": self.rel_tol, "max_panels": self.max_panels,
                "max_decades": self.max_decades}


@dataclass
class BandIntegral:
    """Result of :func:`integrate_spectral` (one-sided integral, no 1/pi)."""

    value: float
    error: float
    panels: int
    omega: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)
    omega_max: float = 0.0
    converged: bool = True
    tail_value: float = 0.0

    @property
    def integrand(self) -> np.ndarray:
        return self.S * self.R * self.F


class _Accumulator:
    def __init__(self, keep_samples: bool):
        self.keep = keep_samples
        self.values: list[np.ndarray] = []
        self.errors: list[np.ndarray] = []
        self.samples: list[tuple] = []
        self.panels = 0

    def add(self, vals, errs, sample):
        self.values.append(vals)
        self.errors.append(errs)
        self.panels += vals.size
        if self.keep:
            self.samples.append(sample)

    def value(self) -> float:
        # fixed summation order: panels sorted by position
        return float(sum(math.fsum(v) for v in self.values))

    def error(self) -> float:
        return float(sum(math.fsum(e) for e in self.errors))


def _integrate_panels(fn, a, b, log_space, allowed_abs, allowed_rel, budget, acc):
    """Integrate panels [a, b]; bisect those failing the error test."""
    pend_a, pend_b = np.asarray(a, float), np.asarray(b, float)
    depth = 0
    done = []  # (left edge, value, error, sample)
    while pend_a.size:
        if acc.panels + pend_a.size > budget:
            raise _BudgetExceeded
        ua, ub = (np.log(pend_a), np.log(pend_b)) if log_space else (pend_a, pend_b)
        mid = 0.5 * (ua + ub)
        half = 0.5 * (ub - ua)
        x32 = mid[:, None] + half[:, None] * _X32[None, :]
        x16 = mid[:, None] + half[:, None] * _X16[None, :]
        u = np.concatenate([x32, x16], axis=1)
        w = np.exp(u) if log_space else u
        S, R, F = fn(w.ravel())
        prod = (S * R * F).reshape(w.shape)
        jac = w if log_space else 1.0
        g = prod * jac
        i32 = half * (g[:, :32] @ _W32)
        i16 = half * (g[:, 32:] @ _W16)
        err = np.abs(i32 - i16)
        ok = (err <= allowed_rel * np.abs(i32) + allowed_abs) | (depth >= _MAX_DEPTH)
        sel = np.flatnonzero(ok)
        if sel.size:
            wt = (half[sel, None] * _W32[None, :]) * (jac[sel, :32] if log_space else 1.0)
            sample = (w[sel, :32].ravel(), np.broadcast_to(wt, (sel.size, 32)).ravel(),
                      S.reshape(w.shape)[sel, :32].ravel(), R.reshape(w.shape)[sel, :32].ravel(),
                      F.reshape(w.shape)[sel, :32].ravel())
            done.append((pend_a[sel], i32[sel], err[sel], sample))
        bad = np.flatnonzero(~ok)
        if bad.size == 0:
            break
        ma = np.sqrt(pend_a[bad] * pend_b[bad]) if log_space else 0.5 * (pend_a[bad] + pend_b[bad])
        pend_a = np.concatenate([pend_a[bad], ma])
        pend_b = np.concatenate([ma, pend_b[bad]])
        depth += 1
    if not done:
        return
    left = np.concatenate([d[0] for d in done])
    order = np.argsort(left, kind="stable")
    vals = np.concatenate([d[1] for d in done])[order]
    errs = np.concatenate([d[2] for d in done])[order]
    sample = None
    if acc.keep:
        sample = tuple(np.concatenate([d[3][c] for d in done]) for c in range(5))
    acc.add(vals, errs, sample)


class _BudgetExceeded(Exception):
    pass


def _split(edges: np.ndarray, breakpoints) -> np.ndarray:
    lo, hi = edges[0], edges[-1]
    bp = [b for b in breakpoints if lo < b < hi]
    return np.union1d(edges, bp) if bp else edges


def integrate_spectral(fn: Callable, *, tau: float, envelope: float, spectrum, filt,
                       q: QuadratureConfig, breakpoints=(), low_exponent: float = 2.0,
                       keep_samples: bool = True, label: str = "",
                       tail_kernel: tuple[float, float] | None = None) -> BandIntegral:
    """One-sided integral of ``S R F`` with rigorous truncation.

    ``fn(w)`` returns the triple ``(S, R, F)`` on a flat array.  The bound
    ``R <= envelope / w**2`` is used for the remainder.
    """
    tol = q.rel_tol
    w_cut = float(filt.low_cutoff())
    if w_cut == 0.0:
        k = spectrum.low_exponent() + low_exponent + filt.low_exponent()
        if k <= -1.0:
            name = label or getattr(spectrum, "kind", "spectrum")
            raise DivergenceError(
                f"variance integral diverges at omega -> 0 for the {name} spectrum "
                f"{spectrum.to_dict()} with filter '{filt.kind}'; a low-frequency cutoff "
                f"(brickwall filter) is required")
    bps = sorted(set(float(b) for b in (*spectrum.breakpoints(), *filt.breakpoints(), *breakpoints)
                     if b > 0.0 and math.isfinite(b)))
    acc = _Accumulator(keep_samples)
    half_period = math.pi / tau
    w_a = half_period / 10.0
    converged = True
    low_remainder = 0.0
    tail_value = 0.0
    last_bp = max(bps, default=0.0)
    omega_max = max(w_a, w_cut)

    try:
        # -- low band, decade panels in log w, walking down from w_a
        if w_cut < w_a:
            decade_vals: list[float] = []
            hi = w_a
            for _ in range(q.max_decades):
                lo = max(hi / 10.0, w_cut)
                edges = _split(np.array([lo, hi]), bps)
                before = acc.value()
                _integrate_panels(fn, edges[:-1], edges[1:], True, 0.0, tol / 8.0,
                                  q.max_panels, acc)
                decade_vals.append(acc.value() - before)
                hi = lo
                if lo <= w_cut:
                    break
                total = acc.value()
                if len(decade_vals) >= 3 and lo < min(bps, default=math.inf):
                    d0, d1 = decade_vals[-1], decade_vals[-2]
                    if d0 == 0.0 and d1 == 0.0:
                        break
                    r = d0 / d1 if d1 > 0 else 1.0
                    if r < 0.5 and d0 * r / (1.0 - r) <= tol / 8.0 * total:
                        low_remainder = d0 * r / (1.0 - r)
                        break
            else:
                if w_cut == 0.0:
                    raise DivergenceError(
                        f"low-frequency contributions do not decay after {q.max_decades} decades")
        # -- oscillation band, half-period panels, marching up
        start = max(w_a, w_cut)
        j = math.floor(start / half_period) + 1
        batch = 256
        while True:
            edges = np.concatenate([[start], (j + np.arange(batch)) * half_period])
            edges = _split(edges, bps)
            total_before = acc.value()
            floor = 1e-3 * tol / 8.0 * total_before / max(edges.size, 1)
            _integrate_panels(fn, edges[:-1], edges[1:], False, floor, tol / 8.0,
                              q.max_panels, acc)
            start = float(edges[-1])
            j += batch
            batch = min(2 * batch, 1 << 16)
            omega_max = start
            total = acc.value()
            t2 = spectrum.tail_integral(start, 2.0)
            tail = envelope * filt.bound_above(start) * t2
            if tail <= tol / 2.0 * total or (tail == 0.0):
                break
            if not math.isfinite(tail):
                raise DivergenceError(
                    f"high-frequency tail diverges for spectrum {spectrum.to_dict()}")
            if tail_kernel is not None and start > last_bp:
                s_w = float(spectrum(start))
                if float(spectrum(2.0 * start)) <= 4.0 * s_w:
                    dev = filt.deviation_above(start)
                    mean, osc_coef = tail_kernel
                    osc = 2.0 * osc_coef * (s_w / start ** 2) / tau
                    bound = (mean + osc_coef) * dev * t2 + (1.0 + dev) * osc
                    if bound <= tol / 2.0 * total:
                        tail_value = mean * t2
                        tail = bound
                        break
    except _BudgetExceeded:
        converged = False
        tail = math.inf

    total = acc.value() + tail_value
    err = acc.error() + low_remainder + (tail if converged else 0.0)
    if acc.keep and acc.samples:
        cols = [np.concatenate([s[c] for s in acc.samples]) for c in range(5)]
        order = np.argsort(cols[0], kind="stable")
        cols = [c[order] for c in cols]
    else:
        cols = [np.empty(0)] * 5
    res = BandIntegral(total, err, acc.panels, *cols, omega_max=omega_max, converged=converged,
                       tail_value=tail_value)
    if not converged:
        raise ConvergenceError(
            f"quadrature exceeded {q.max_panels} panels before reaching rel_tol={tol} "
            f"(reached omega = {omega_max:.6g} rad/s)", partial=res)
    return res
