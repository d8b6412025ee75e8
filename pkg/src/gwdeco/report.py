"""Deterministic TOML and CSV writers for CLI reports."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np
import tomli_w

from ._version import __version__
from .errors import ValidationError

SPECTRAL_MODEL_NOTE = (
    "The phase variance is an integral over the assumed strain spectrum and is "
    "only as good as that model. The plateau edges, level and rolloff exponents "
    "used here are calibrated choices, not measured values; the band-edge scan "
    "shows how far the plateau must extend for the probe to reach the threshold."
)


def clean(obj):
    """Convert numpy scalars and arrays to plain Python values, dropping None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj if v is not None]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def document(command: str, scenario, results: dict, seed: int | None = None,
             notes: dict | None = None) -> dict:
    """Report layout: header, results, notes, then the re-loadable inputs."""
    head = {"command": command, "engine": "gwdeco", "engine_version": __version__}
    if scenario.name:
        head["scenario"] = scenario.name
    if seed is not None:
        head["seed"] = seed
    doc = {"report": head, "results": results}
    if notes:
        doc["notes"] = notes
    doc["inputs"] = scenario.to_config()
    return clean(doc)


def dumps(doc: dict) -> str:
    return tomli_w.dumps(clean(doc))


def write_report(path, doc: dict) -> Path:
    path = Path(path)
    path.write_text(dumps(doc))
    return path


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return repr(x) if math.isfinite(x) else str(x)
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


INTEGRAND_HEADER = ("omega_rad_s", "S_h_s", "A_s2", "F", "integrand")


def write_integrand_csv(path, result) -> Path:
    """Quadrature nodes of a :class:`DecoherenceResult`, ordered by omega."""
    s = result.samples
    if s is None:
        raise ValidationError("result holds no integrand samples (keep_samples=False)")
    return write_csv(path, INTEGRAND_HEADER, zip(s.omega, s.S, s.A, s.F, s.integrand))
