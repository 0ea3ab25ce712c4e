"""Problem files: one JSON document naming charts, forms, connections,
relations, pseudostructures, strip problems, and case inputs.

Schema (version 1)::

    {
      "schema": 1,
      "chart": ["T", "V"],
      "forms": {"heat": "c_v dT + R*T/V dV"},
      "connections": {"g": {"dimension": 2,
                            "entries": [{"rho": 1, "mu": 1, "nu": 2, "coeff": "x"}],
                            "metric": [{"mu": 1, "nu": 1, "coeff": "1"}]}},
      "pseudostructures": {"front": {"params": ["tau"],
                                     "map": {"t": "tau", "x": "c*tau + xi0"},
                                     "constraints": ["x - c*t - xi0"]}},
      "relations": {"r": {"omega": "heat", "psi": null, "connection": null}},
      "problems": {"h": {"kind": "hamilton-jacobi", "time": "t", "space": ["x"],
                         "momenta": ["p"], "hamiltonian": "(p^2 + x^2)/2",
                         "fan": {"start": -0.5, "stop": 0.5, "count": 9,
                                 "momentum": "-x0", "value": "-x0^2/2"},
                         "dt": 0.001, "steps": 1000}},
      "cases": {"t": {"kind": "thermodynamics"}}
    }

Connection and metric indices are 1-based, matching the classical upper/lower
index notation; form literals use the published grammar.  All cross
references are by name and resolved at load time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from . import cases as case_mod
from .characteristics import FirstOrderPDE, HamiltonJacobiProblem
from .connection import Connection
from .expr import Expr, ExprError
from .forms import Chart, Form, FormError, Pseudostructure, parse_form
from .parsing import ParseError, parse_expression
from .relations import EvolutionaryRelation

SCHEMA_VERSION = 1


class ProblemFileError(ExprError):
    pass


@dataclass
class StripProblem:
    kind: str  # "hamilton-jacobi" | "first-order"
    problem: object
    fan: case_mod.FanSpec | None
    dt: float
    steps: int


@dataclass
class CaseInput:
    kind: str
    params: Mapping


@dataclass
class ProblemFile:
    path: str
    chart: Chart
    forms: dict = field(default_factory=dict)
    connections: dict = field(default_factory=dict)
    pseudostructures: dict = field(default_factory=dict)
    relations: dict = field(default_factory=dict)
    problems: dict = field(default_factory=dict)
    cases: dict = field(default_factory=dict)

    def form(self, name: str) -> Form:
        return self._lookup(self.forms, name, "form")

    def connection(self, name: str) -> Connection:
        return self._lookup(self.connections, name, "connection")

    def pseudostructure(self, name: str) -> Pseudostructure:
        return self._lookup(self.pseudostructures, name, "pseudostructure")

    def relation(self, name: str) -> EvolutionaryRelation:
        return self._lookup(self.relations, name, "relation")

    def problem(self, name: str) -> StripProblem:
        return self._lookup(self.problems, name, "problem")

    def case(self, name: str) -> CaseInput:
        return self._lookup(self.cases, name, "case")

    @staticmethod
    def _lookup(table: dict, name: str, what: str):
        try:
            return table[name]
        except KeyError:
            known = ", ".join(sorted(table)) or "none"
            raise ProblemFileError(f"unknown {what} {name!r} (known: {known})") from None


def _expr(text, where: str) -> Expr:
    if not isinstance(text, str):
        raise ProblemFileError(f"{where}: expected an expression string, got {text!r}")
    try:
        return parse_expression(text)
    except (ParseError, ExprError) as exc:
        raise ProblemFileError(f"{where}: {exc}") from None


def load(path) -> ProblemFile:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ProblemFileError(f"cannot read {p}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{p}: not valid JSON: {exc}") from None
    return parse_document(doc, str(p))


def parse_document(doc, path: str = "<memory>") -> ProblemFile:
    if not isinstance(doc, dict):
        raise ProblemFileError(f"{path}: the document must be a JSON object")
    version = doc.get("schema")
    if version != SCHEMA_VERSION:
        raise ProblemFileError(
            f"{path}: schema version {version!r} is not supported (expected {SCHEMA_VERSION})"
        )
    chart_names = doc.get("chart")
    if not isinstance(chart_names, list) or not all(isinstance(n, str) for n in chart_names):
        raise ProblemFileError(f"{path}: 'chart' must be a list of coordinate names")
    try:
        chart = Chart(chart_names)
    except FormError as exc:
        raise ProblemFileError(f"{path}: {exc}") from None
    pf = ProblemFile(path=path, chart=chart)

    for name, literal in _section(doc, "forms", path).items():
        if not isinstance(literal, str):
            raise ProblemFileError(f"{path}: form {name!r} must be a literal string")
        try:
            pf.forms[name] = parse_form(literal, chart)
        except (ParseError, FormError, ExprError) as exc:
            raise ProblemFileError(f"{path}: form {name!r}: {exc}") from None

    for name, spec in _section(doc, "connections", path).items():
        pf.connections[name] = _connection(spec, chart, f"{path}: connection {name!r}")

    for name, spec in _section(doc, "pseudostructures", path).items():
        pf.pseudostructures[name] = _pseudostructure(spec, f"{path}: pseudostructure {name!r}")

    for name, spec in _section(doc, "relations", path).items():
        where = f"{path}: relation {name!r}"
        if not isinstance(spec, dict) or "omega" not in spec:
            raise ProblemFileError(f"{where}: needs an 'omega' form reference")
        omega = pf.form(spec["omega"])
        psi = pf.form(spec["psi"]) if spec.get("psi") else None
        conn = pf.connection(spec["connection"]) if spec.get("connection") else None
        try:
            pf.relations[name] = EvolutionaryRelation(omega, psi, conn)
        except ExprError as exc:
            raise ProblemFileError(f"{where}: {exc}") from None

    for name, spec in _section(doc, "problems", path).items():
        pf.problems[name] = _problem(spec, f"{path}: problem {name!r}")

    for name, spec in _section(doc, "cases", path).items():
        where = f"{path}: case {name!r}"
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ProblemFileError(f"{where}: needs a 'kind'")
        kind = spec["kind"]
        if kind not in ("thermodynamics", "gas-dynamics", "electromagnetic", "hamilton-jacobi"):
            raise ProblemFileError(f"{where}: unknown case kind {kind!r}")
        pf.cases[name] = CaseInput(kind=kind, params={k: v for k, v in spec.items() if k != "kind"})

    return pf


def _section(doc: dict, key: str, path: str) -> dict:
    sec = doc.get(key, {})
    if not isinstance(sec, dict):
        raise ProblemFileError(f"{path}: '{key}' must be an object")
    return sec


def _connection(spec, chart: Chart, where: str) -> Connection:
    if not isinstance(spec, dict):
        raise ProblemFileError(f"{where}: must be an object")
    n = spec.get("dimension")
    if n != chart.dim:
        raise ProblemFileError(f"{where}: dimension {n!r} does not match the chart ({chart.dim})")
    entries = []
    for e in spec.get("entries", []):
        try:
            rho, mu, nu = int(e["rho"]) - 1, int(e["mu"]) - 1, int(e["nu"]) - 1
        except (KeyError, TypeError, ValueError):
            raise ProblemFileError(f"{where}: entries need integer rho/mu/nu") from None
        if not all(0 <= i < chart.dim for i in (rho, mu, nu)):
            raise ProblemFileError(f"{where}: index out of range in {e!r}")
        entries.append((rho, mu, nu, _expr(e.get("coeff"), where)))
    metric_entries = None
    if "metric" in spec:
        metric_entries = []
        for e in spec["metric"]:
            try:
                mu, nu = int(e["mu"]) - 1, int(e["nu"]) - 1
            except (KeyError, TypeError, ValueError):
                raise ProblemFileError(f"{where}: metric entries need integer mu/nu") from None
            metric_entries.append((mu, nu, _expr(e.get("coeff"), where)))
    try:
        return Connection.from_entries(chart, entries, metric_entries)
    except (FormError, ExprError) as exc:
        raise ProblemFileError(f"{where}: {exc}") from None


def _pseudostructure(spec, where: str) -> Pseudostructure:
    if not isinstance(spec, dict) or "params" not in spec or "map" not in spec:
        raise ProblemFileError(f"{where}: needs 'params' and 'map'")
    mapping = {k: _expr(v, where) for k, v in spec["map"].items()}
    constraints = tuple(_expr(c, where) for c in spec.get("constraints", []))
    try:
        return Pseudostructure(spec["params"], mapping, constraints)
    except (FormError, ExprError) as exc:
        raise ProblemFileError(f"{where}: {exc}") from None


def _problem(spec, where: str) -> StripProblem:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ProblemFileError(f"{where}: needs a 'kind'")
    kind = spec["kind"]
    fan = None
    if "fan" in spec:
        f = spec["fan"]
        try:
            fan = case_mod.FanSpec(
                start=float(f["start"]),
                stop=float(f["stop"]),
                count=int(f["count"]),
                momentum=_expr(f["momentum"], where),
                value=_expr(f.get("value", "0"), where),
            )
        except (KeyError, TypeError, ValueError):
            raise ProblemFileError(f"{where}: bad fan spec {f!r}") from None
    dt = float(spec.get("dt", 1e-2))
    steps = int(spec.get("steps", 100))
    if kind == "hamilton-jacobi":
        try:
            problem = HamiltonJacobiProblem(
                time=spec.get("time", "t"),
                space=tuple(spec["space"]),
                momenta=tuple(spec["momenta"]),
                hamiltonian=_expr(spec["hamiltonian"], where),
            )
        except (KeyError, ExprError) as exc:
            raise ProblemFileError(f"{where}: {exc}") from None
    elif kind == "first-order":
        try:
            problem = FirstOrderPDE(
                space=tuple(spec["space"]),
                unknown=spec.get("unknown", "u"),
                momenta=tuple(spec["momenta"]),
                relation=_expr(spec["relation"], where),
            )
        except (KeyError, ExprError) as exc:
            raise ProblemFileError(f"{where}: {exc}") from None
    else:
        raise ProblemFileError(f"{where}: unknown problem kind {kind!r}")
    return StripProblem(kind=kind, problem=problem, fan=fan, dt=dt, steps=steps)
