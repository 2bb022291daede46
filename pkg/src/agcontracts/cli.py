"""Command-line front end.

Exit codes
----------
refine     0 refinement holds, 1 fails, 2 bad input, 3 solver failure,
           4 extendability not certified under ``--extendability-policy fail``
satisfy    0 holds, 1 fails, 2 bad input, 3 solver failure
extend     0 extendable, 1 not extendable, 2 bad input, 4 beyond enumeration limits
casestudy  0 verified and simulated, 2 bad input, 3 solver failure,
           5 refinement fails, 6 satisfaction fails, 7 a simulated run breaks headway

The default tolerance is read from ``AGCONTRACTS_TOL`` when set.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .casestudy import (Scenario, build_contract_C, build_contract_C1,
                        build_contract_C2, build_follower_system, build_triple,
                        evaluate_trace, simulate)
from .contracts import CascadeTriple, ContractError, ContractFileError, load_contract, save_contract
from .files import load_init, load_system, load_triple, save_init, save_system, validate_document
from .lp import PivotBudgetExceeded
from .refinement import (DEFAULT_TOL, HorizonConfig, check_extendability, check_refinement,
                         suggest_horizons, theorem_triples)
from .satisfaction import check_satisfaction

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SOLVER, EXIT_UNSUPPORTED = 0, 1, 2, 3, 4
EXIT_REFINE, EXIT_SATISFY, EXIT_UNSAFE = 5, 6, 7

_SOLVER_ERRORS = (PivotBudgetExceeded, np.linalg.LinAlgError)
_INPUT_ERRORS = (OSError, ContractError, ContractFileError, ValueError, KeyError)


def default_tolerance() -> float:
    raw = os.environ.get("AGCONTRACTS_TOL")
    return float(raw) if raw else DEFAULT_TOL


def manifest(command, inputs, overrides=None, seed=None, result=None) -> dict:
    return {
        "command": command,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "overrides": dict(overrides or {}),
        "seed": seed,
        "tool_version": __version__,
        "wall_clock": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "result": dict(result or {}),
    }


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _clean(a):
    # rounded copy without negative zeros, for display
    return (np.round(np.asarray(a, dtype=float), 9) + 0.0).tolist()


def _fmt(v):
    return f"{v:+.6g}" if math.isfinite(v) else ("+inf" if v > 0 else "-inf")


def _horizons(args, triple):
    auto = suggest_horizons(triple)
    ii = auto.horizon_ii if args.horizon_ii == "auto" else int(args.horizon_ii)
    iii = auto.horizon_iii if args.horizon_iii == "auto" else int(args.horizon_iii)
    return HorizonConfig(ii, iii)


def cmd_refine(args) -> int:
    try:
        triple = CascadeTriple(load_contract(args.c1), load_contract(args.c2), load_contract(args.c))
        h = _horizons(args, triple)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        verdict = check_refinement(triple, h, args.tol)
        ext = [check_extendability(*tr) for tr in theorem_triples(triple)] if args.check_extendability else []
    except _SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    doc = verdict.to_dict()
    if ext:
        doc["extendability"] = [e.to_dict() for e in ext]
    doc["manifest"] = manifest("refine", {"c1": args.c1, "c2": args.c2, "c": args.c},
                               {"horizon_ii": h.horizon_ii, "horizon_iii": h.horizon_iii,
                                "tol": args.tol},
                               result={"holds": verdict.holds})
    if args.report:
        _write_json(args.report, doc)

    print(f"rho_D = {_fmt(verdict.rho_D)}  rho_otimes = {_fmt(verdict.rho_otimes)}  "
          f"rho_Omega = {_fmt(verdict.rho_Omega)}  ({verdict.lp_count} LPs, tol {args.tol:g}, "
          f"horizons {h.horizon_ii}/{h.horizon_iii})")
    for row in verdict.rows:
        if row.theta > args.tol:
            print(f"  violated: {row.family} row {row.row} theta = {_fmt(row.theta)}")
            if row.witness is not None:
                wit = {k: _clean(v) for k, v in row.layout.unpack(row.witness).items()}
                print(f"    witness {wit}")
    uncertified = False
    for i, e in enumerate(ext, 1):
        if e.extendable is None:
            print(f"warning: triple {i} not checked ({e.detail})", file=sys.stderr)
            uncertified = True
        elif not e.extendable:
            print(f"warning: triple {i} is not extendable; the fail direction of the verdict "
                  f"is not guaranteed exact", file=sys.stderr)
            uncertified = True
    print("refinement holds" if verdict.holds else "refinement FAILS")
    if not verdict.holds:
        return EXIT_FAIL
    if uncertified and args.extendability_policy == "fail":
        return EXIT_UNSUPPORTED
    return EXIT_OK


def cmd_satisfy(args) -> int:
    try:
        system = load_system(args.system)
        contract = load_contract(args.contract)
        init = load_init(args.init)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        verdict = check_satisfaction(system, contract, init, args.tol)
    except _SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    doc = verdict.to_dict()
    doc["manifest"] = manifest("satisfy", {"system": args.system, "contract": args.contract,
                                           "init": args.init}, {"tol": args.tol},
                               result={"holds": verdict.holds})
    if args.report:
        _write_json(args.report, doc)
    for row in verdict.rows:
        print(f"theta[{row.family}, row {row.row}] = {_fmt(row.theta)}")
    print(f"{verdict.lp_count} LPs; satisfaction {'holds' if verdict.holds else 'FAILS'}")
    return EXIT_OK if verdict.holds else EXIT_FAIL


def cmd_extend(args) -> int:
    try:
        V1, V0, v0 = load_triple(args.matrices)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    verdict = check_extendability(V1, V0, v0)
    doc = verdict.to_dict()
    doc["manifest"] = manifest("extend", {"matrices": args.matrices},
                               result={"extendable": verdict.extendable})
    if args.report:
        _write_json(args.report, doc)
    if verdict.extendable is None:
        print(f"unsupported: pair space has dimension {verdict.dimension}; {verdict.detail}")
        return EXIT_UNSUPPORTED
    if verdict.extendable:
        print(f"extendable (pair space dimension {verdict.dimension})")
        return EXIT_OK
    print("NOT extendable")
    if verdict.counterexample is not None:
        u0, u1 = verdict.counterexample
        print(f"  u0 = {_clean(u0)}  u1 = {_clean(u1)}")
    return EXIT_FAIL


def _parse_overrides(pairs):
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = None if value.strip().lower() in ("null", "none") else float(value)
    return out


def _timeseries_csv(traces, params) -> str:
    lines = ["run,k,t,headway,spec,v_f"]
    for tr in traces:
        rep = evaluate_trace(tr, params)
        spec = tr.p_l - tr.p_f - params.h * tr.v_f
        for i in range(len(tr)):
            lines.append(f"{tr.run},{int(tr.k[i])},{float(tr.t[i])!r},{float(rep.headway[i])!r},"
                         f"{float(spec[i])!r},{float(tr.v_f[i])!r}")
    return "\n".join(lines) + "\n"


def cmd_casestudy(args) -> int:
    try:
        if args.scenario:
            with open(args.scenario, encoding="utf-8") as fh:
                doc = json.load(fh)
            validate_document(doc, "scenario")
            scenario = Scenario.from_dict(doc)
        else:
            scenario = Scenario()
        overrides = _parse_overrides(args.set)
        params = scenario.params.with_overrides(**overrides) if overrides else scenario.params
    except (*_INPUT_ERRORS, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inputs = {"scenario": args.scenario or "<default>"}
    triple = build_triple(params)
    h = HorizonConfig(2, 2)
    try:
        ref = check_refinement(triple, h, args.tol)
        system, init = build_follower_system(params)
        sat = check_satisfaction(system, build_contract_C2(params), init, args.tol)
    except _SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    for name, c in (("C", build_contract_C(params)), ("C1", build_contract_C1(params)),
                    ("C2", build_contract_C2(params))):
        save_contract(c, out / f"{name}.json")
    save_system(system, out / "system.json")
    save_init(init, out / "init.json")

    try:
        traces = simulate(params, scenario.profile, seed=args.seed, n_runs=args.runs,
                          duration_s=scenario.duration_s, gap=scenario.gap,
                          follower_kmh=scenario.follower_kmh)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    reports = [evaluate_trace(tr, params) for tr in traces]

    with open(out / "traces.csv", "w", encoding="utf-8", newline="") as fh:
        for i, tr in enumerate(traces):
            text = tr.to_csv(with_run=True)
            fh.write(text if i == 0 else text.split("\n", 1)[1])
    (out / "timeseries.csv").write_text(_timeseries_csv(traces, params), encoding="utf-8")

    spec_min = min(r.spec_min for r in reports)
    robust_min = min(r.robust_min for r in reports)
    safe = all(not r.violation_steps for r in reports)
    if not ref.holds:
        status, code = "refinement-failed", EXIT_REFINE
    elif not sat.holds:
        status, code = "satisfaction-failed", EXIT_SATISFY
    elif not safe:
        status, code = "simulation-unsafe", EXIT_UNSAFE
    else:
        status, code = "verified+simulated", EXIT_OK

    ref_doc = ref.to_dict()
    sat_doc = sat.to_dict()
    summary = {
        "status": status,
        "params": params.to_dict(),
        "refinement": ref_doc["aggregate"],
        "satisfaction": sat_doc["aggregate"],
        "runs": [dict(run=tr.run, **rep.to_dict()) for tr, rep in zip(traces, reports)],
        "aggregate": {"n_runs": len(traces), "n_steps": len(traces[0]) if traces else 0,
                      "spec_min": spec_min, "robust_min": robust_min, "safe": safe},
    }
    man = manifest("casestudy", inputs, overrides, args.seed,
                   result={"status": status, "spec_min": spec_min})
    summary["manifest"] = man
    ref_doc["manifest"] = man
    sat_doc["manifest"] = man
    _write_json(out / "refinement.json", ref_doc)
    _write_json(out / "satisfaction.json", sat_doc)
    _write_json(out / "summary.json", summary)

    print(f"refinement: rho = ({_fmt(ref.rho_D)}, {_fmt(ref.rho_otimes)}, {_fmt(ref.rho_Omega)})")
    print(f"satisfaction: theta_base = {_fmt(float(np.max(sat.theta_base)))}, "
          f"theta_step = {_fmt(float(np.max(sat.theta_step)))}")
    print(f"simulation: {len(traces)} runs, min p_l - p_f - h v_f = {spec_min:.6g}, "
          f"min p_m - p_f - h v_f - delta_p = {robust_min:.6g}")
    print(status)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agcontracts", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    tol = default_tolerance()

    p = sub.add_parser("refine", help="check that c1 cascaded with c2 refines c")
    p.add_argument("c1")
    p.add_argument("c2")
    p.add_argument("c")
    p.add_argument("--horizon-ii", choices=["1", "2", "auto"], default="auto")
    p.add_argument("--horizon-iii", choices=["1", "2", "auto"], default="auto")
    p.add_argument("--tol", type=float, default=tol)
    p.add_argument("--check-extendability", action="store_true")
    p.add_argument("--extendability-policy", choices=["warn", "fail"], default="warn")
    p.add_argument("-o", "--report")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("satisfy", help="check that an affine system satisfies a contract")
    p.add_argument("system")
    p.add_argument("contract")
    p.add_argument("init")
    p.add_argument("--tol", type=float, default=tol)
    p.add_argument("-o", "--report")
    p.set_defaults(func=cmd_satisfy)

    p = sub.add_parser("extend", help="check extendability of a (V1, V0, v0) triple")
    p.add_argument("matrices")
    p.add_argument("-o", "--report")
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("casestudy", help="verify and simulate the car-following case study")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="casestudy-out")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--tol", type=float, default=tol)
    p.set_defaults(func=cmd_casestudy)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
