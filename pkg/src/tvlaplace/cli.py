"""Command-line front end: ``tvlaplace <command> --scenario FILE [--out DIR]``.

Exit status: 0 success, 1 unexpected library error, 2 invalid scenario,
3 inapplicable datum, 4 infeasible field, 5 nonexistence regime,
6 verification failure, 7 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from typing import Any

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import __version__
from .approx import run_convergence_study
from .errors import ReportIOError, ScenarioError, TVLaplaceError, VerificationError
from .growth import classify_growth
from .lorentz import (
    RearrangementProfile,
    dual_norm_bounds,
    norm_lorentz_q1,
    norm_marcinkiewicz,
    quasinorm_marcinkiewicz,
    sobolev_constant,
)
from .scenario import COMMANDS, Scenario, load_scenario, parse_scenario
from .solver import (
    boundary_check,
    bump_family,
    classify_regime,
    construct_radial_solution,
    green_identity,
    solution_table,
    tampered_profiles,
    total_variation,
    weak_residual,
)


def _clean(x: Any) -> Any:
    """JSON-safe copy: non-finite floats become strings, sets become sorted lists."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_clean(v) for v in x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc.strerror}") from None


def _trace_dict(tr) -> dict:
    return {"kind": type(tr).__name__, **dataclasses.asdict(tr)}


# ----------------------------------------------------------------------
# commands


def _solve(s: Scenario, files: dict) -> dict:
    opt = s.options
    con = construct_radial_solution(s.datum, s.growth, opt["policy"], opt["envelope"])
    prof, fld = con.profile, con.field
    grid = s.datum.R * np.geomspace(1e-6, 1.0, opt["grid"])
    lines = ["r,h,xi_times_r,w,segment_kind"]
    lines += [f"{r!r},{h!r},{e!r},{w!r},{k}" for r, h, e, w, k in solution_table(prof, fld, grid)]
    files["solution.csv"] = "\n".join(lines) + "\n"
    return {
        "regime": con.report.to_dict(),
        "profile": {
            "segments": [dataclasses.asdict(x) for x in prof.segments],
            "jumps": [dataclasses.asdict(j) for j in prof.jumps],
            "boundary_value": prof.boundary_value,
            "unbounded_at_origin": prof.unbounded_at_origin,
            "origin_power": prof.origin_power,
        },
        "field": {
            "constants": list(fld.constants),
            "feasibility_margin": fld.feasibility_margin,
            "interface_mismatch": fld.interface_mismatch,
        },
        "boundary": _trace_dict(boundary_check(prof, fld)),
        "total_variation": total_variation(prof),
    }


def _candidate_from_csv(path: str, con):
    """Profile and field interpolated from a solution table (monotone cubic in h, linear in eta)."""
    try:
        with open(path, encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ReportIOError(f"cannot read candidate {path}: {exc.strerror}") from None
    try:
        r = np.array([float(x["r"]) for x in rows])
        h = np.array([float(x["h"]) for x in rows])
        eta = np.array([float(x["xi_times_r"]) for x in rows])
    except (KeyError, ValueError) as exc:
        raise ScenarioError(f"candidate {path}: malformed table ({exc})") from None
    hp = PchipInterpolator(r, h, extrapolate=True)
    dhp = hp.derivative()
    R = con.profile.R
    prof = dataclasses.replace(
        con.profile,
        h=lambda x: hp(np.clip(x, r[0], R)),
        dh=lambda x: np.where(np.asarray(x) < r[0], 0.0, dhp(np.clip(x, r[0], R))),
        jumps=(),
    )
    fld = dataclasses.replace(con.field, eta=lambda x: np.interp(x, r, eta))
    return prof, fld


def _verify(s: Scenario, files: dict) -> dict:
    opt = s.options
    tol = opt["tol"]
    con = construct_radial_solution(s.datum, s.growth, opt["policy"], opt["envelope"])
    prof, fld = con.profile, con.field
    label = "constructed"
    if opt["tamper"] is not None:
        lib = {name: (p, fl) for name, p, fl in tampered_profiles(prof, fld)}
        if opt["tamper"] not in lib:
            raise ScenarioError(f"options/tamper: unknown tamper {opt['tamper']!r}; choose from {sorted(lib)}")
        prof, fld = lib[opt["tamper"]]
        label = f"tampered:{opt['tamper']}"
    if opt["candidate"] is not None:
        prof, fld = _candidate_from_csv(opt["candidate"], con)
        label = f"candidate:{opt['candidate']}"
    res = weak_residual(prof, fld, s.datum, s.growth, bump_family(s.datum.R, opt["bumps"]))
    out = {
        "subject": label,
        "tolerance": tol,
        "max_residual": res.max_abs,
        "residuals": list(res.values),
        "pairing_defect": res.pairing_defect,
    }
    failures = []
    if res.max_abs > tol:
        k = int(np.argmax(np.abs(res.values)))
        failures.append(f"weak residual {res.values[k]:.6e} on test function {k} exceeds {tol:g}")
    if res.pairing_defect > tol:
        failures.append(f"pairing defect {res.pairing_defect:.6e} exceeds {tol:g}")
    try:
        out["boundary"] = _trace_dict(boundary_check(prof, fld))
    except VerificationError as exc:
        failures.append(str(exc))
    if not (prof.unbounded_at_origin and prof.origin_power >= prof.N - 1):
        gb = green_identity(prof, fld)
        out["green"] = {**dataclasses.asdict(gb), "defect": gb.defect}
        if gb.defect > tol:
            failures.append(f"Green identity defect {gb.defect:.6e} exceeds {tol:g}")
    out["failures"] = failures
    out["passed"] = not failures
    return out


def _norms(s: Scenario, files: dict) -> dict:
    f = s.datum
    N, q = f.N, s.options["q"]
    prof = RearrangementProfile.of(f)
    bracket = dual_norm_bounds(f)
    return {
        "q": q,
        "distribution_function": [[t, prof.mu(t)] for t in s.options["levels"]],
        "decreasing_rearrangement": [[m, prof.rearrangement(m)] for m in s.options["measures"]],
        "quasinorm_marcinkiewicz": quasinorm_marcinkiewicz(f, q),
        "norm_marcinkiewicz": norm_marcinkiewicz(f, q),
        "norm_lorentz_q1": norm_lorentz_q1(f, q / (q - 1.0)),
        "lorentz_exponent": q / (q - 1.0),
        "sobolev_constant": sobolev_constant(N),
        "dual_norm_bounds": {
            "lower": bracket.lower, "upper": bracket.upper, "argmax_radius": bracket.argmax_radius,
        },
        "integral": f.integral(),
    }


def _classify(s: Scenario, files: dict) -> dict:
    gc = classify_growth(s.growth)
    rep = classify_regime(s.datum, s.growth, s.options["policy"])
    out = {
        "growth_class": {
            "tag": gc.tag, "m": gc.m, "sigma": gc.sigma, "G_infinity": gc.G_infinity,
            "integrable": gc.integrable, "zero_set": list(gc.zero_set), "warnings": list(gc.warnings),
        },
        "regime": rep.to_dict(),
    }
    if "NonexistentRadial" in rep.tags:
        raise _Exit(5, out, "nonexistence regime: " + rep.witnesses.get("inequality", ""))
    return out


def _converge(s: Scenario, files: dict) -> dict:
    table = run_convergence_study(s.datum, s.growth, s.schedule, s.options["policy"])
    files["convergence.csv"] = table.to_csv()
    return {
        "rows": [dataclasses.asdict(r) | {"bound_holds": r.bound_holds} for r in table.rows],
        "monotone_from": table.monotone_from,
        "empirical_rate": table.rate,
    }


class _Exit(Exception):
    def __init__(self, code: int, payload: dict, message: str):
        super().__init__(message)
        self.code, self.payload = code, payload


_DISPATCH = {"solve": _solve, "verify": _verify, "norms": _norms, "classify": _classify, "converge": _converge}


def run(s: Scenario, out_dir: str | None = None) -> tuple[dict, int]:
    """Execute a scenario; returns (report, exit status) and writes files when out_dir is set."""
    files: dict[str, str] = {}
    # the output location is not part of the problem; leaving it out keeps
    # reports from different directories byte-identical
    echo = {**s.document, "options": {k: v for k, v in s.document["options"].items() if k != "out"}}
    report: dict[str, Any] = {"version": __version__, "command": s.command, "scenario": echo}
    code = 0
    try:
        report["result"] = _DISPATCH[s.command](s, files)
        if s.command == "verify" and not report["result"]["passed"]:
            code = VerificationError.exit_code
            report["error"] = {"kind": "VerificationError", "message": "; ".join(report["result"]["failures"])}
    except _Exit as exc:
        report["result"] = exc.payload
        report["error"] = {"kind": "NonexistenceError", "message": str(exc)}
        code = exc.code
    except ReportIOError:
        raise
    except TVLaplaceError as exc:
        report["error"] = {"kind": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "report", None) is not None:
            report["result"] = {"regime": exc.report.to_dict()}
        code = exc.exit_code
    report["exit_code"] = code
    text = json.dumps(_clean(report), indent=2, sort_keys=True, allow_nan=False) + "\n"
    files["report.json"] = text
    if out_dir is not None:
        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as exc:
            raise ReportIOError(f"cannot create output directory {out_dir}: {exc.strerror}") from None
        for name in sorted(files):
            _write(os.path.join(out_dir, name), files[name])
    return report, code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tvlaplace", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("command", choices=COMMANDS + ("run",), help="'run' uses the scenario's own command")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--out", help="directory for report.json and CSV tables")
    p.add_argument("--grid", type=int, help="number of output nodes")
    p.add_argument("--policy", choices=("minimal", "upper"))
    p.add_argument("--tol", type=float, help="verification tolerance")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        s = load_scenario(args.scenario)
        doc = s.document
        if args.command != "run":
            doc = {**doc, "command": args.command}
        for key in ("grid", "policy", "tol"):
            val = getattr(args, key)
            if val is not None:
                doc["options"] = {**doc["options"], key: val}
        if args.out is not None:
            doc["options"] = {**doc["options"], "out": args.out}
        s = parse_scenario(doc)
        report, code = run(s, s.options["out"])
    except TVLaplaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    if s.options["out"] is None:
        sys.stdout.write(json.dumps(_clean(report), indent=2, sort_keys=True, allow_nan=False) + "\n")
    elif "error" in report:
        print(f"error: {report['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
