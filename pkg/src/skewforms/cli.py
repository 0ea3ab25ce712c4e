"""Command-line front end.

Exit codes: 0 for success (closed / identical / factor found, as applicable),
1 for a well-formed negative or indeterminate verdict (not closed,
nonidentical, no factor, a failing case claim), 2 for input errors.  Output
is canonical JSON on stdout (``--text`` switches to a human rendering); all
diagnostics go to stderr.

The environment variable SKEWFORMS_CONFIG may point to a JSON object with
default flag values ({"seed": ..., "tol": ..., "dt": ..., "steps": ...,
"jobs": ...}); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import cases as case_mod
from . import problemfile
from .characteristics import (
    canonical_system,
    characteristic_system,
    closure_along,
    detect_degeneracy,
    integrate,
)
from .expr import ExprError, to_text
from .forms import exterior_derivative, form_to_literal, is_closed, commutator, wedge
from .jsonio import canonical_json
from .relations import (
    NotClosedOnPseudostructure,
    analyze,
    find_integrating_factor,
    restrict,
)
from .verdict import Policy, Verdict

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2


def _env_defaults() -> dict:
    path = os.environ.get("SKEWFORMS_CONFIG")
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"skewforms: bad SKEWFORMS_CONFIG: {exc}", file=sys.stderr)
        return {}
    return doc if isinstance(doc, dict) else {}


def _build_parser(defaults: dict) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="problem file (JSON)")
    common.add_argument("--text", action="store_true", help="human-readable output")
    common.add_argument("--seed", type=int, default=int(defaults.get("seed", 0)))
    common.add_argument("--tol", type=float, default=float(defaults.get("tol", 1e-9)))
    common.add_argument("--jobs", type=int, default=int(defaults.get("jobs", 1)))

    ap = argparse.ArgumentParser(prog="skewforms", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("d", parents=[common], help="exterior derivative of a form")
    p.add_argument("--form", required=True)

    p = sub.add_parser("wedge", parents=[common], help="wedge product of two forms")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)

    p = sub.add_parser("closed", parents=[common], help="closure verdict for a form")
    p.add_argument("--form", required=True)

    p = sub.add_parser("commutator", parents=[common], help="commutator table of a 1-form")
    p.add_argument("--form", required=True)
    p.add_argument("--connection")

    p = sub.add_parser("analyze", parents=[common], help="identity verdicts for relations")
    p.add_argument("--relation", action="append", required=True)

    p = sub.add_parser("factor", parents=[common], help="integrating-factor search")
    p.add_argument("--form", required=True)

    p = sub.add_parser("restrict", parents=[common], help="restrict a relation to a pseudostructure")
    p.add_argument("--relation", required=True)
    p.add_argument("--pseudostructure", required=True)

    p = sub.add_parser("characteristics", parents=[common], help="integrate a strip problem")
    p.add_argument("--problem", required=True)
    p.add_argument("--dt", type=float, default=defaults.get("dt"))
    p.add_argument("--steps", type=int, default=defaults.get("steps"))
    p.add_argument("--csv", help="write the trajectory samples to this CSV file")
    p.add_argument("--thin", type=int, default=0, help="include every Nth sample in the JSON")

    p = sub.add_parser("case", parents=[common], help="run a named case study")
    p.add_argument("--case", required=True)

    sub.add_parser("validate", parents=[common], help="validate a problem file")
    return ap


def _emit(payload: dict, text: str | None, use_text: bool):
    if use_text and text is not None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(canonical_json(payload))


def _verdict_exit(v: Verdict) -> int:
    return EXIT_OK if v is Verdict.ZERO else EXIT_NEGATIVE


def main(argv=None) -> int:
    args = _build_parser(_env_defaults()).parse_args(argv)
    policy = Policy(seed=args.seed, tol=args.tol)
    try:
        pf = problemfile.load(args.input)
    except ExprError as exc:
        print(f"skewforms: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return _dispatch(args, pf, policy)
    except ExprError as exc:
        print(f"skewforms: {exc}", file=sys.stderr)
        return EXIT_INPUT


def _dispatch(args, pf: problemfile.ProblemFile, policy: Policy) -> int:
    cmd = args.command
    if cmd == "validate":
        payload = {
            "file": pf.path,
            "ok": True,
            "schema": problemfile.SCHEMA_VERSION,
            "counts": {
                "forms": len(pf.forms),
                "connections": len(pf.connections),
                "pseudostructures": len(pf.pseudostructures),
                "relations": len(pf.relations),
                "problems": len(pf.problems),
                "cases": len(pf.cases),
            },
        }
        _emit(payload, f"{pf.path}: ok", args.text)
        return EXIT_OK

    if cmd == "d":
        w = pf.form(args.form)
        d = exterior_derivative(w)
        payload = {"form": args.form, "degree": d.degree, "result": form_to_literal(d)}
        _emit(payload, form_to_literal(d), args.text)
        return EXIT_OK

    if cmd == "wedge":
        w = wedge(pf.form(args.left), pf.form(args.right))
        payload = {
            "left": args.left,
            "right": args.right,
            "degree": w.degree,
            "result": form_to_literal(w),
        }
        _emit(payload, form_to_literal(w), args.text)
        return EXIT_OK

    if cmd == "closed":
        w = pf.form(args.form)
        d = exterior_derivative(w)
        verdict = is_closed(w, policy)
        payload = {
            "form": args.form,
            "verdict": str(verdict),
            "derivative": form_to_literal(d),
        }
        _emit(payload, f"{args.form}: {verdict} (d = {form_to_literal(d)})", args.text)
        return _verdict_exit(verdict)

    if cmd == "commutator":
        w = pf.form(args.form)
        conn = pf.connection(args.connection) if args.connection else None
        rep = commutator(w, conn, policy)
        entries = [
            {
                "alpha": rep.chart.names[e.alpha],
                "beta": rep.chart.names[e.beta],
                "derivative_part": to_text(e.derivative_part),
                "connection_part": to_text(e.connection_part),
                "total": to_text(e.total),
                "verdict": str(e.verdict),
            }
            for e in rep.entries
        ]
        payload = {
            "form": args.form,
            "connection": args.connection,
            "aggregate": str(rep.aggregate),
            "entries": entries,
        }
        lines = [f"{args.form}: aggregate {rep.aggregate}"] + [
            f"  K({e['alpha']},{e['beta']}) = {e['total']}  [{e['verdict']}]" for e in entries
        ]
        _emit(payload, "\n".join(lines), args.text)
        return _verdict_exit(rep.aggregate)

    if cmd == "analyze":
        names = list(args.relation)
        reports = {}
        worst = Verdict.ZERO
        for name in names:
            verdict = analyze(pf.relation(name), policy)
            entry = {"classification": verdict.classification, "sources": list(verdict.sources)}
            if verdict.commutator is not None:
                entry["commutator"] = {
                    f"{verdict.commutator.chart.names[e.alpha]},{verdict.commutator.chart.names[e.beta]}": to_text(
                        e.total
                    )
                    for e in verdict.commutator.entries
                }
            if verdict.derivative is not None:
                entry["derivative"] = form_to_literal(verdict.derivative)
            reports[name] = entry
            if verdict.classification != "identical":
                worst = Verdict.NONZERO
        payload = {"relations": reports}
        text = "\n".join(
            f"{n}: {reports[n]['classification']}"
            + (f" ({', '.join(reports[n]['sources'])})" if reports[n]["sources"] else "")
            for n in names
        )
        _emit(payload, text, args.text)
        return EXIT_OK if worst is Verdict.ZERO else EXIT_NEGATIVE

    if cmd == "factor":
        w = pf.form(args.form)
        fs = find_integrating_factor(w, policy)
        payload = {
            "form": args.form,
            "status": fs.status,
            "factor": to_text(fs.factor) if fs.factor is not None else None,
            "ansatz": fs.ansatz,
            "scaled": form_to_literal(fs.scaled) if fs.scaled is not None else None,
        }
        text = (
            f"{args.form}: factor {to_text(fs.factor)}"
            if fs.found
            else f"{args.form}: {fs.status}"
        )
        _emit(payload, text, args.text)
        return EXIT_OK if fs.found else EXIT_NEGATIVE

    if cmd == "restrict":
        rel = pf.relation(args.relation)
        ps = pf.pseudostructure(args.pseudostructure)
        try:
            r = restrict(rel, ps, policy)
        except NotClosedOnPseudostructure as exc:
            payload = {
                "relation": args.relation,
                "pseudostructure": args.pseudostructure,
                "error": "NotClosedOnPseudostructure",
                "verdict": str(exc.verdict),
                "residual": form_to_literal(exc.residual),
            }
            _emit(payload, f"not closed: residual {form_to_literal(exc.residual)}", args.text)
            return EXIT_NEGATIVE
        payload = {
            "relation": args.relation,
            "pseudostructure": args.pseudostructure,
            "verdict": str(r.closure_verdict),
            "omega_pi": form_to_literal(r.omega_pi),
            "psi_pi": form_to_literal(r.psi_pi) if r.psi_pi is not None else None,
        }
        text = f"omega_pi = {form_to_literal(r.omega_pi)}"
        if r.psi_pi is not None:
            text += f"\npsi_pi = {form_to_literal(r.psi_pi)}"
        _emit(payload, text, args.text)
        return EXIT_OK

    if cmd == "characteristics":
        return _run_characteristics(args, pf, policy)

    if cmd == "case":
        spec = pf.case(args.case)
        report = _run_case(spec, policy, args.jobs)
        _emit(report.to_json_dict(), report.to_text(), args.text)
        return EXIT_OK if report.ok else EXIT_NEGATIVE

    raise AssertionError(f"unhandled command {cmd}")  # pragma: no cover


def _run_characteristics(args, pf: problemfile.ProblemFile, policy: Policy) -> int:
    sp = pf.problem(args.problem)
    dt = args.dt if args.dt is not None else sp.dt
    steps = args.steps if args.steps is not None else sp.steps
    if sp.kind == "hamilton-jacobi":
        system = canonical_system(sp.problem)
        space, momenta = sp.problem.space, sp.problem.momenta
    else:
        system = characteristic_system(sp.problem)
        space, momenta = sp.problem.space, sp.problem.momenta
    if sp.fan is None:
        raise problemfile.ProblemFileError(f"problem {args.problem!r} has no fan spec")
    trajectories = integrate(system, sp.fan.initial_states(), dt, steps, jobs=args.jobs)
    events = detect_degeneracy(trajectories) if len(trajectories) > 1 else []
    rows = []
    for tr in trajectories:
        kwargs = {}
        if sp.kind == "hamilton-jacobi":
            kwargs["time_momentum"] = -tr.diagnostic
        rep = closure_along(tr, space, momenta, unknown=system.states[-1], **kwargs)
        row = {
            "initial": tr.initial(),
            "final": tr.final(),
            "samples_kept": 0,
            "complete": tr.complete,
            "closure_residual": rep.max_residual,
            "diagnostic_max_drift": float(np.max(np.abs(tr.diagnostic - tr.diagnostic[0])))
            if tr.diagnostic is not None and len(tr.diagnostic)
            else None,
        }
        if args.thin and args.thin > 0:
            kept = [
                dict(zip(("t",) + tr.states, map(float, (t, *vals))))
                for t, vals in zip(tr.times[:: args.thin], tr.values[:: args.thin])
            ]
            row["samples"] = kept
            row["samples_kept"] = len(kept)
        rows.append(row)
    payload = {
        "problem": args.problem,
        "dt": dt,
        "steps": steps,
        "trajectories": rows,
        "events": [
            {
                "time": e.time,
                "bracket": list(e.bracket),
                "pair": list(e.pair),
                "jacobians": list(e.jacobians),
            }
            for e in events
        ],
    }
    if args.csv:
        _write_csv(args.csv, trajectories, system)
    text_lines = [f"{args.problem}: {len(trajectories)} trajectories, {len(events)} events"]
    for e in events:
        text_lines.append(f"  event at t ~ {e.time:.6g} in {e.bracket}")
    _emit(payload, "\n".join(text_lines), args.text)
    return EXIT_OK


def _write_csv(path: str, trajectories, system) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["trajectory", system.param] + list(system.states)
        if system.diagnostic is not None:
            header.append(system.diagnostic_name)
        writer.writerow(header)
        for i, tr in enumerate(trajectories):
            for k in range(len(tr.times)):
                row = [i, "%.17g" % tr.times[k]] + ["%.17g" % v for v in tr.values[k]]
                if tr.diagnostic is not None:
                    row.append("%.17g" % tr.diagnostic[k])
                writer.writerow(row)


def _run_case(spec: problemfile.CaseInput, policy: Policy, jobs: int):
    from .parsing import parse_expression

    params = dict(spec.params)
    if spec.kind == "thermodynamics":
        return case_mod.thermodynamics_case(
            heat_capacity=params.get("heat_capacity", "c_v"),
            gas_constant=params.get("gas_constant", "R"),
            policy=policy,
        )
    if spec.kind == "gas-dynamics":
        def vec(key, default=("0", "0", "0")):
            raw = params.get(key, list(default))
            return [parse_expression(s) for s in raw]

        return case_mod.gas_dynamics_case(
            velocity=vec("velocity"),
            head=parse_expression(params.get("head", "0")),
            force=vec("force"),
            temperature=parse_expression(params["temperature"])
            if "temperature" in params
            else None,
            unsteady=params.get("unsteady"),
            policy=policy,
        )
    if spec.kind == "electromagnetic":
        return case_mod.electromagnetic_case(
            profile=params.get("profile", "f"),
            wave_speed=params.get("wave_speed", "c"),
            policy=policy,
        )
    if spec.kind == "hamilton-jacobi":
        fan = params.get("fan", {})
        fanspec = case_mod.FanSpec(
            start=float(fan["start"]),
            stop=float(fan["stop"]),
            count=int(fan["count"]),
            momentum=parse_expression(fan["momentum"]),
            value=parse_expression(fan.get("value", "0")),
        )
        return case_mod.hamilton_jacobi_case(
            hamiltonian=parse_expression(params["hamiltonian"]),
            fan=fanspec,
            dt=float(params.get("dt", 1e-2)),
            steps=int(params.get("steps", 200)),
            policy=policy,
            jobs=jobs,
        )
    raise problemfile.ProblemFileError(f"unknown case kind {spec.kind!r}")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
