"""Command-line front end.

Exit codes: 0 success, 2 invalid input or unwritable output, 3 quadrature did
not converge.  The default output directory is ``$GWDECO_OUT`` or the
current directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import report
from .apparatus import WIDE_APERTURE
from .decoherence import (SWEEP_AXES, band_edge_scan, sweep, threshold_mass,
                          variance_estimate)
from .errors import ConvergenceError, ValidationError
from .montecarlo import validate
from .quadrature import QuadratureConfig
from .scenario import PRESETS, Scenario, load_scenario, preset
from .spectra import PlateauSpectrum

COMMANDS = ("variance", "contrast", "threshold-mass", "sweep", "mc-validate", "integrand")
OUT_ENV = "GWDECO_OUT"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gwdeco",
        description="Decoherence of matter-wave interferometers by stochastic "
                    "gravitational-wave backgrounds.")
    p.add_argument("command", choices=COMMANDS)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="scenario TOML file (or a previous report)")
    src.add_argument("--preset", choices=sorted(PRESETS), help="bundled scenario")
    p.add_argument("--out", type=Path, default=None,
                   help=f"output directory (default ${OUT_ENV} or .)")
    p.add_argument("--seed", type=int, default=None, help="Monte Carlo seed")
    p.add_argument("--rel-tol", type=float, default=None, help="quadrature relative tolerance")
    p.add_argument("--format", choices=("report", "csv"), default="report")
    p.add_argument("--axis", choices=SWEEP_AXES, help="sweep parameter (mass in amu)")
    p.add_argument("--values", help="comma-separated sweep values")
    p.add_argument("--response", choices=("mz", "path"), default="mz",
                   help="response used by threshold-mass")
    p.add_argument("--threshold", type=float, default=1.0, help="variance threshold (rad^2)")
    p.add_argument("--workers", type=int, default=None, help="Monte Carlo / sweep workers")
    return p


def _scenario(args) -> Scenario:
    sc = load_scenario(args.config) if args.config else preset(args.preset)
    if args.rel_tol is not None:
        q = sc.quadrature
        sc = replace(sc, quadrature=QuadratureConfig(args.rel_tol, q.max_panels, q.max_decades))
    if args.seed is not None or args.workers is not None:
        mc = sc.mc
        mc = replace(mc, seed=mc.seed if args.seed is None else args.seed,
                     workers=mc.workers if args.workers is None else args.workers)
        sc = replace(sc, mc=mc)
    return sc


def _variance_results(sc: Scenario, res) -> dict:
    g = sc.geometry
    out = {"dphi2_rad2": res.dphi2, "contrast": res.contrast, "dh2_bar": res.dh2_bar,
           "error_estimate_rad2": res.error, "rel_tol": res.rel_tol,
           "bec_N": res.bec_N, "omega_kinetic_rad_s": g.Omega,
           "coupling_rad_s": g.coupling, "alpha_rad": g.alpha,
           "dominant_omega_rad_s": res.dominant_omega,
           "quadrature_samples": res.n_samples, "omega_max_rad_s": res.omega_max,
           "decade_fractions": {str(k): v for k, v in sorted(res.decade_fractions.items())}}
    if sc.splitter is not None:
        dO = sc.delta_Omega
        out["delta_Omega_rad_s"] = dO
        if res.dh2_bar is not None:
            out["estimate_from_delta_Omega_rad2"] = (
                variance_estimate(dO, g.tau, res.dh2_bar) * sc.bec_N ** 2)
    if res.generic_dphi2 is not None:
        out["generic_path_dphi2_rad2"] = res.generic_dphi2
    return out


def _notes(sc: Scenario) -> dict:
    n = {"spectral_model": report.SPECTRAL_MODEL_NOTE}
    if sc.geometry.alpha > WIDE_APERTURE:
        n["aperture"] = ("the closed-form response assumes a narrow aperture; the "
                         "generic-path value is reported alongside it")
    if sc.splitter is not None:
        n["splitter"] = "aperture set by identifying delta_Omega with Omega sin(alpha)"
    return n


def _name(sc: Scenario) -> str:
    return sc.name or "scenario"


def _out_dir(args) -> Path:
    out = args.out or Path(os.environ.get(OUT_ENV, "."))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"{out}: cannot create output directory ({exc.strerror})") from None
    return out


def _run(args) -> int:
    sc = _scenario(args)
    out = _out_dir(args)
    stem = f"{_name(sc)}-{args.command}"
    cmd = args.command
    written = []

    if cmd in ("variance", "contrast", "integrand"):
        res = sc.evaluate(keep_samples=(cmd == "integrand"))
        results = _variance_results(sc, res)
        if cmd == "integrand":
            written.append(report.write_integrand_csv(out / f"{stem}.csv", res))
            results = {"quadrature_samples": res.n_samples, "dphi2_rad2": res.dphi2,
                       "csv": written[-1].name}
            if args.format == "csv":
                return _done(written)
        elif args.format == "csv":
            keys = ["dphi2_rad2", "contrast", "error_estimate_rad2"]
            written.append(report.write_csv(out / f"{stem}.csv", keys,
                                            [[results[k] for k in keys]]))
            return _done(written)
        doc = report.document(cmd, sc, results, notes=_notes(sc))
    elif cmd == "threshold-mass":
        tm = threshold_mass(sc.geometry, sc.spectrum, sc.filter, sc.quadrature,
                            threshold=args.threshold, response=args.response)
        results = {"threshold": tm.to_dict(), "bec_N": sc.bec_N}
        if sc.bec_N > 1 and tm.bounded:
            results["threshold"]["threshold_mass_bec_kg"] = tm.mass / sc.bec_N
        if isinstance(sc.spectrum, PlateauSpectrum):
            results["band_edge"] = {
                m: band_edge_scan(sc.geometry, sc.spectrum, sc.filter, sc.quadrature,
                                  args.threshold, method=m).to_dict()
                for m in ("estimate", "quadrature")}
        if args.format == "csv":
            t = results["threshold"]
            written.append(report.write_csv(out / f"{stem}.csv",
                                            ["threshold_mass_kg", "threshold_mass_amu"],
                                            [[t["threshold_mass_kg"], t["threshold_mass_amu"]]]))
            return _done(written)
        doc = report.document(cmd, sc, results, notes=_notes(sc))
    elif cmd == "sweep":
        if not args.axis or args.values is None:
            raise ValidationError("sweep needs --axis and --values")
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError as exc:
            raise ValidationError(f"--values: {exc}") from None
        rows = sweep(args.axis, values, sc, workers=args.workers or 1)
        header = [args.axis, "dphi2_rad2", "contrast", "error_estimate_rad2"]
        table = [[v, r.dphi2, r.contrast, r.error] for v, r in rows]
        if args.format == "csv":
            written.append(report.write_csv(out / f"{stem}.csv", header, table))
            return _done(written)
        results = {"axis": args.axis, "values": [v for v, _ in rows],
                   "dphi2_rad2": [r.dphi2 for _, r in rows],
                   "contrast": [r.contrast for _, r in rows],
                   "error_estimate_rad2": [r.error for _, r in rows]}
        doc = report.document(cmd, sc, results, notes=_notes(sc))
    else:  # mc-validate
        cfg = sc.realization_config()
        results = validate(sc.spectrum, sc.geometry, sc.filter, cfg, sc.quadrature)
        doc = report.document(cmd, sc, results, seed=cfg.seed)
    written.append(report.write_report(out / f"{stem}.toml", doc))
    return _done(written)


def _done(paths) -> int:
    for p in paths:
        print(p)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConvergenceError as exc:
        print(f"gwdeco: convergence error: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"gwdeco: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"gwdeco: I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
