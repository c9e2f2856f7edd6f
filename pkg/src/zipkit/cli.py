"""``zipkit`` command-line interface.

Exit codes: 0 success, 1 numerical failure, 2 invalid input.
"""
import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import buffering, model, orbits, spectral
from .normal_form import normal_form as compute_normal_form
from .config import build_config
from .equilibrium import steady_branch
from .errors import InvalidInput, NumericalError
from .output import SCHEMA_VERSION, atomic_write, csv_text, gnuplot_text, json_text

log = logging.getLogger("zipkit")

EXIT_OK, EXIT_NUMERICAL, EXIT_INVALID = 0, 1, 2

# reference values and tolerances checked by ``report``
REFERENCE_HOPF = [
    {"mu": (0.1895, 1e-3), "omega": (1.983, 1e-2), "remaining": (-3.474, -238.6),
     "slope": (1.83, 0.05)},
    {"mu": (12.643, 1e-2), "omega": (2.782, 1e-2), "remaining": (-5.599, -84.43),
     "slope": (-0.0126, 5e-4)},
]


class Result:
    """Output of one subcommand: CSV rows plus a JSON document."""

    def __init__(self, name, columns, rows, summary, block_key=None):
        self.name = name
        self.columns = columns
        self.rows = rows
        self.summary = summary
        self.block_key = block_key


def _c(z):
    return {"re": float(z.real), "im": float(z.imag)}


def _sig(x, digits=3):
    return float(f"{x:.{digits}g}")


# ---------------------------------------------------------------------------
# commands


def cmd_steady(cfg):
    params = cfg.model_params()
    grid = np.linspace(cfg.mu_lo, cfg.mu_hi, cfg.steady_points)
    branch = steady_branch(grid, params)
    rows = [{"mu": s.mu, "u1": s.u_star[0], "u2": s.u_star[1], "u3": s.u_star[2],
             "u4": s.u_star[3], "det_J": s.det_jac, "tr_J": s.trace_jac,
             "residual": s.residual_norm} for s in branch]
    summary = {"n_points": len(rows), "min_det_J": min(r["det_J"] for r in rows),
               "max_tr_J": max(r["tr_J"] for r in rows),
               "max_residual": max(r["residual"] for r in rows)}
    cols = ["mu", "u1", "u2", "u3", "u4", "det_J", "tr_J", "residual"]
    return Result("steady", cols, rows, summary)


def _hopf_records(cfg):
    params = cfg.model_params()
    points = spectral.find_hopf_points(cfg.mu_lo, cfg.mu_hi, params, cfg.hopf_scan_points,
                                       allow_outside=cfg.mu_hi > model.MU_MAX)
    nfs = []
    for hp in points:
        try:
            nfs.append(compute_normal_form(hp.mu_star, hp.omega, params))
        except NumericalError as exc:
            log.warning("normal form failed at mu=%g: %s", hp.mu_star, exc)
            nfs.append(None)
    return points, nfs


def cmd_hopf(cfg):
    points, nfs = _hopf_records(cfg)
    rows = []
    for hp, nf in zip(points, nfs):
        row = {"mu_star": hp.mu_star, "omega": hp.omega,
               "d_re_lambda_d_mu": hp.d_re_lambda_d_mu,
               "sgn_re_b": int(np.sign(nf.b.real)) if nf else None,
               "crossing_number": hp.crossing_number, "center_index": hp.center_index}
        for k, z in enumerate(hp.spectrum, 1):
            row[f"lambda{k}_re"] = z.real
            row[f"lambda{k}_im"] = z.imag
        rows.append(row)
    cols = (["mu_star", "omega"]
            + [f"lambda{k}_{p}" for k in range(1, 5) for p in ("re", "im")]
            + ["d_re_lambda_d_mu", "sgn_re_b", "crossing_number", "center_index"])
    return Result("hopf", cols, rows, {"n_points": len(rows)})


def cmd_normalform(cfg):
    points, nfs = _hopf_records(cfg)
    rows = []
    for hp, nf in zip(points, nfs):
        if nf is None:
            rows.append({"mu_star": hp.mu_star, "omega": hp.omega, "status": "failed"})
            continue
        rows.append({"mu_star": nf.mu_star, "omega": nf.omega, "a_re": nf.a.real,
                     "a_im": nf.a.imag, "b_re": nf.b.real, "b_im": nf.b.imag,
                     "criticality": nf.criticality, "orbit_side": nf.orbit_side,
                     "amplitude_slope": nf.amplitude_slope, "status": "ok"})
    cols = ["mu_star", "omega", "a_re", "a_im", "b_re", "b_im", "criticality",
            "orbit_side", "amplitude_slope", "status"]
    return Result("normalform", cols, rows, {"n_points": len(rows)})


def _branch(cfg, points):
    if len(points) < 2:
        raise NumericalError(f"need two Hopf points for the orbit branch, found {len(points)}")
    mu1, mu2 = points[0].mu_star, points[1].mu_star
    grid = orbits.default_grid(mu1, mu2, cfg.orbit_points)
    return mu1, mu2, orbits.orbit_branch(grid, cfg.model_params(), mu1=mu1, mu2=mu2,
                                         cfg=cfg.integrator())


def cmd_orbits(cfg):
    params = cfg.model_params()
    points = spectral.find_hopf_points(cfg.mu_lo, cfg.mu_hi, params, cfg.hopf_scan_points)
    mu1, mu2, branch = _branch(cfg, points)
    rows = []
    for bp in branch:
        row = {"mu": bp.mu, "status": "ok" if bp.ok else bp.error}
        if bp.ok:
            row.update(T=bp.orbit.T, shoot_residual=bp.orbit.shoot_residual,
                       amplitude_u2=bp.amplitude_u2, stable=bp.floquet.stable,
                       unit_index=bp.floquet.unit_index)
            for k, z in enumerate(bp.floquet.multipliers, 1):
                row[f"m{k}_re"], row[f"m{k}_im"], row[f"m{k}_abs"] = z.real, z.imag, abs(z)
        rows.append(row)
    cols = (["mu", "T", "shoot_residual", "amplitude_u2"]
            + [f"m{k}_{p}" for k in range(1, 5) for p in ("re", "im", "abs")]
            + ["unit_index", "stable", "status"])
    summary = {"mu1": mu1, "mu2": mu2, "n_points": len(rows),
               "n_failed": sum(not b.ok for b in branch),
               "T_limit_mu1": 2 * math.pi / points[0].omega,
               "T_limit_mu2": 2 * math.pi / points[1].omega}
    return Result("orbits", cols, rows, summary)


def cmd_buffer(cfg):
    params = cfg.model_params()
    mu_grid = np.linspace(cfg.mu_lo, min(cfg.mu_hi, model.MU_MAX), cfg.map_mu_points)
    smap = buffering.stability_map(mu_grid, cfg.map_p1, cfg.map_p2, params)
    edge = smap.boundary
    rows = []
    for i, mu in enumerate(smap.mu):
        for j, p1 in enumerate(smap.p1):
            for k, p2 in enumerate(smap.p2):
                rows.append({"mu": float(mu), "p1": float(p1), "p2": float(p2),
                             "max_re": float(smap.max_re[i, j, k]),
                             "boundary": bool(edge[i, j, k]),
                             "failed": bool(smap.failed[i, j, k])})
    summary = {"n_cells": len(rows), "n_failed": int(smap.failed.sum())}
    try:
        summary["critical_p1"] = {"mu": 1.0, "p2": cfg.p2,
                                  "value": buffering.critical_p1(1.0, cfg.p2, params)}
        summary["critical_p2"] = {"mu": 1.0, "p1": cfg.p1,
                                  "value": buffering.critical_p2(1.0, cfg.p1, params)}
    except NumericalError as exc:
        summary["threshold_error"] = str(exc)
    cols = ["mu", "p1", "p2", "max_re", "boundary", "failed"]
    return Result("buffer", cols, rows, summary, block_key="mu")


def _bode_curves(cfg):
    params = cfg.model_params()
    omega = np.geomspace(cfg.omega_min, cfg.omega_max, cfg.omega_points)
    return {p1: buffering.transfer_function(cfg.mu0, model.BufferParams(p1, cfg.bode_p2),
                                            omega, params)
            for p1 in cfg.bode_p1}


def cmd_bode(cfg):
    curves = _bode_curves(cfg)
    rows, resonances = [], []
    for p1, samples in curves.items():
        for s in samples:
            rows.append({"p1": p1, "omega": s.omega, "gain_db": s.gain_db,
                         "phase_accum": s.phase_accum, "phase_principal": s.phase_principal,
                         "singular": s.singular})
        peak = buffering.resonance_peak(samples)
        resonances.append({"p1": p1, "resonance": peak is not None,
                           "omega_peak": peak[0] if peak else None,
                           "gain_peak_db": peak[1] if peak else None,
                           "max_phase_accum": float(np.nanmax([s.phase_accum for s in samples]))})
    cols = ["p1", "omega", "gain_db", "phase_accum", "phase_principal", "singular"]
    summary = {"mu0": cfg.mu0, "p2": cfg.bode_p2, "curves": resonances}
    return Result("bode", cols, rows, summary, block_key="p1")


def _check(name, value, expected=None, tol=None, passed=None):
    if passed is None:
        passed = value is not None and abs(value - expected) <= tol
    return {"name": name, "value": value, "expected": expected, "tolerance": tol,
            "passed": bool(passed)}


def cmd_report(cfg):
    params = cfg.model_params()
    checks = []
    points, nfs = _hopf_records(cfg)
    checks.append(_check("hopf_count", len(points), 2, 0))
    hopf = []
    for k, hp in enumerate(points):
        nf = nfs[k]
        rest = sorted(z.real for z in hp.remaining)[::-1]
        hopf.append({"mu_star": hp.mu_star, "omega": hp.omega,
                     "spectrum": [_c(z) for z in hp.spectrum],
                     "d_re_lambda_d_mu": hp.d_re_lambda_d_mu,
                     "center_index": hp.center_index,
                     "a": _c(nf.a) if nf else None, "b": _c(nf.b) if nf else None,
                     "criticality": nf.criticality if nf else None})
        if k < len(REFERENCE_HOPF):
            ref = REFERENCE_HOPF[k]
            tag = f"hopf{k + 1}"
            checks.append(_check(f"{tag}_mu", hp.mu_star, *ref["mu"]))
            checks.append(_check(f"{tag}_omega", hp.omega, *ref["omega"]))
            checks.append(_check(f"{tag}_slope", hp.d_re_lambda_d_mu, *ref["slope"]))
            for j, r in enumerate(ref["remaining"]):
                got = rest[j] if j < len(rest) else None
                checks.append(_check(f"{tag}_lambda{j + 3}", got, r, None,
                                     passed=got is not None and _sig(got) == _sig(r)))
            checks.append(_check(f"{tag}_sgn_re_b", int(np.sign(nf.b.real)) if nf else None,
                                 -1, 0, passed=bool(nf and nf.b.real < 0)))
            checks.append(_check(f"{tag}_center_index", hp.center_index,
                                 1 if k == 0 else -1, 0))
    doc = {"hopf_points": hopf}

    try:
        p1c = buffering.critical_p1(1.0, 1.0, params)
    except NumericalError as exc:
        p1c = None
        log.warning("critical p1: %s", exc)
    checks.append(_check("critical_p1_mu1_p2_1", p1c, 1.1, 0.2))
    try:
        p2c = buffering.critical_p2(1.0, 10.0, params)
    except NumericalError as exc:
        p2c = None
        log.warning("critical p2: %s", exc)
    checks.append(_check("critical_p2_mu1_p1_10", p2c, 0.09, 0.03))
    strong = [buffering.buffered_spectrum(mu, model.BufferParams(1000.0, 1.0), params)
              for mu in np.linspace(0.0, model.MU_MAX, 61)]
    checks.append(_check("p1_1000_all_real_negative", None, passed=all(
        z.real < 0 and z.imag == 0 for spec in strong for z in spec)))

    curves = _bode_curves(replace(cfg, mu0=1.0, bode_p2=1.0, bode_p1=(0.0, 0.5, 10.0, 1000.0)))
    for p1, samples in curves.items():
        res = buffering.resonance_peak(samples) is not None
        checks.append(_check(f"bode_resonance_p1_{p1:g}", res, None, None,
                             passed=res == (p1 < 1.1)))
    g1000 = [s.gain_db for s in curves[1000.0] if 2.0 <= s.omega <= 400.0]
    checks.append(_check("bode_p1_1000_gain_band", None, None, None,
                         passed=bool(g1000) and -70.0 <= min(g1000) and max(g1000) <= -50.0))

    if cfg.report_orbits and len(points) >= 2:
        try:
            mu1, mu2, branch = _branch(cfg, points)
            ok = [b for b in branch if b.ok]
            doc["orbits"] = {"n_points": len(branch), "n_ok": len(ok),
                             "T_first": ok[0].orbit.T if ok else None,
                             "T_last": ok[-1].orbit.T if ok else None}
            checks.append(_check("orbits_all_converged", len(ok), len(branch), 0))
            checks.append(_check("orbits_all_stable", None, passed=bool(ok) and all(
                b.floquet.stable for b in ok)))
            if ok:
                checks.append(_check("orbit_T_mu1_rel", ok[0].orbit.T * points[0].omega / (2 * math.pi),
                                     1.0, 0.02))
                checks.append(_check("orbit_T_mu2_rel", ok[-1].orbit.T * points[1].omega / (2 * math.pi),
                                     1.0, 0.02))
        except NumericalError as exc:
            doc["orbits"] = {"error": str(exc)}
            checks.append(_check("orbits_all_converged", None, passed=False))

    doc["checks"] = checks
    summary = {"n_checks": len(checks), "n_passed": sum(c["passed"] for c in checks),
               "all_passed": all(c["passed"] for c in checks)}
    return Result("report", [], [], {**summary, **doc})


COMMANDS = {
    "steady": cmd_steady, "hopf": cmd_hopf, "normalform": cmd_normalform,
    "orbits": cmd_orbits, "buffer": cmd_buffer, "bode": cmd_bode, "report": cmd_report,
}


def write_result(result, cfg, gnuplot=False):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if result.name != "report" and cfg.format in ("csv", "both"):
        written.append(atomic_write(out / f"{result.name}.csv",
                                    csv_text(result.name, result.columns, result.rows)))
    if result.name == "report" or cfg.format in ("json", "both"):
        doc = {"schema": f"zipkit.{result.name}", "version": SCHEMA_VERSION,
               "command": result.name, "config": cfg.as_dict(), "summary": result.summary}
        if result.name != "report":
            doc["records"] = result.rows
        written.append(atomic_write(out / f"{result.name}.json", json_text(doc)))
    if gnuplot and result.rows:
        written.append(atomic_write(out / f"{result.name}.dat",
                                    gnuplot_text(result.columns, result.rows, result.block_key)))
    return written


def build_parser():
    p = argparse.ArgumentParser(prog="zipkit", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", metavar="FILE", help="INI-style config file")
    p.add_argument("--param", action="append", default=[], metavar="K=V",
                   help="override a config key (repeatable); 'section.key' or 'key'")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--format", choices=("csv", "json", "both"))
    p.add_argument("--gnuplot", action="store_true", help="also write a .dat file")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args.config, args.param, out=args.out, format=args.format)
        result = COMMANDS[args.command](cfg)
        for path in write_result(result, cfg, args.gnuplot):
            print(path)
    except (InvalidInput, ValueError) as exc:
        print(f"zipkit: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"zipkit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"zipkit: I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
