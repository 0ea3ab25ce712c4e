"""Desk-scale case studies composed from the other modules.

Each case builds its relation from physics-shaped inputs, runs the generic
machinery (commutators, integrating factors, pullbacks, characteristic
strips), and returns a replayable report: every sub-claim records the
operation it came from and the inputs it saw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .characteristics import (
    HamiltonJacobiProblem,
    canonical_system,
    closure_along,
    detect_degeneracy,
    integrate,
)
from .expr import (
    Expr,
    MINUS_ONE,
    ONE,
    ZERO,
    add,
    differentiate,
    free_symbols,
    is_identically_zero,
    mul,
    opaque,
    pow_int,
    subst,
    sym,
    to_text,
)
from .forms import (
    Chart,
    Form,
    Pseudostructure,
    commutator,
    exactness_witness_check,
    form_add,
    form_scale,
    is_closed,
    pullback,
)
from .relations import (
    EvolutionaryRelation,
    analyze,
    find_integrating_factor,
    recover_potential,
    restrict,
)
from .verdict import DEFAULT_POLICY, Policy, Verdict


@dataclass(frozen=True)
class Claim:
    """One checked or reported sub-result.

    ``passed`` is True/False for claims with a definite expectation and None
    for purely reported findings (verdicts, event lists).
    """

    name: str
    operation: str
    summary: str
    passed: bool | None = None
    data: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class CaseReport:
    case: str
    inputs: Mapping
    claims: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed is not False for c in self.claims)

    def claim(self, name: str) -> Claim:
        for c in self.claims:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json_dict(self) -> dict:
        return {
            "case": self.case,
            "inputs": dict(self.inputs),
            "ok": self.ok,
            "claims": [
                {
                    "name": c.name,
                    "operation": c.operation,
                    "summary": c.summary,
                    "passed": c.passed,
                    "data": dict(c.data),
                }
                for c in self.claims
            ],
        }

    def to_text(self) -> str:
        lines = [f"case {self.case}: {'ok' if self.ok else 'FAILED'}"]
        for k, v in sorted(self.inputs.items()):
            lines.append(f"  input {k} = {v}")
        for c in self.claims:
            mark = {True: "pass", False: "FAIL", None: "info"}[c.passed]
            lines.append(f"  [{mark}] {c.name}: {c.summary}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# thermodynamics: heat form on the (T, V) chart
# ---------------------------------------------------------------------------


def thermodynamics_case(
    heat_capacity: str = "c_v",
    gas_constant: str = "R",
    policy: Policy | None = None,
) -> CaseReport:
    """Ideal-gas heat form c_v dT + (R T / V) dV.

    The relation is nonidentical (the coefficient curl is R/V); scaling by
    1/T closes it and the recovered state function is the entropy
    c_v ln T + R ln V.  The irreversible-case inequality is reported as a
    symbolic statement only.
    """
    policy = policy or DEFAULT_POLICY
    chart = Chart(("T", "V"))
    cv = sym(heat_capacity)
    R = sym(gas_constant)
    T, V = sym("T"), sym("V")
    w = Form(chart, 1, {(0,): cv, (1,): mul(R, T, pow_int(V, -1))})
    claims = []

    verdict = analyze(EvolutionaryRelation(w), policy)
    expected_curl = mul(R, pow_int(V, -1))
    k = verdict.commutator.entry(0, 1)
    claims.append(
        Claim(
            "nonidentical",
            "relations.analyze",
            f"classification {verdict.classification}; K(T,V) = {to_text(k.total)}",
            passed=verdict.classification == "nonidentical" and k.total == expected_curl,
            data={"classification": verdict.classification, "commutator_TV": to_text(k.total)},
        )
    )

    fs = find_integrating_factor(w, policy)
    mu_ok = fs.found and fs.factor == pow_int(T, -1)
    claims.append(
        Claim(
            "integrating-factor",
            "relations.find_integrating_factor",
            f"status {fs.status}, factor {to_text(fs.factor) if fs.factor else '-'}",
            passed=mu_ok,
            data={"status": fs.status, "factor": to_text(fs.factor) if fs.factor else None},
        )
    )

    scaled = fs.scaled if fs.found else form_scale(w, pow_int(T, -1))
    closed = is_closed(scaled, policy)
    claims.append(
        Claim(
            "scaled-form-closed",
            "forms.is_closed",
            f"d(form/T) verdict {closed}",
            passed=closed is Verdict.ZERO,
            data={"verdict": str(closed)},
        )
    )

    entropy = None
    entropy_ok = False
    try:
        entropy = recover_potential(scaled, policy)
        expected = add(mul(cv, _ln(T)), mul(R, _ln(V)))
        witness = exactness_witness_check(scaled, Form.scalar(chart, entropy), policy)
        entropy_ok = entropy == expected and witness is Verdict.ZERO
    except Exception as exc:  # pragma: no cover - defensive
        witness = None
    claims.append(
        Claim(
            "state-function",
            "relations.recover_potential",
            f"recovered {to_text(entropy) if entropy is not None else '-'}",
            passed=entropy_ok,
            data={"potential": to_text(entropy) if entropy is not None else None},
        )
    )

    claims.append(
        Claim(
            "irreversible-inequality",
            "report-only",
            "with additional non-thermal action the recovered state differential "
            "exceeds the scaled heat form (symbolic statement, no numeric claim)",
            passed=None,
            data={"statement": f"d(state) > (heat form)/T"},
        )
    )

    return CaseReport(
        case="thermodynamics",
        inputs={
            "chart": "(T, V)",
            "heat_capacity": heat_capacity,
            "gas_constant": gas_constant,
            "form": str(w),
        },
        claims=tuple(claims),
    )


def _ln(e):
    from .expr import apply_function

    return apply_function("ln", e)


# ---------------------------------------------------------------------------
# gas dynamics: entropy balance sources on (t, x, y, z)
# ---------------------------------------------------------------------------


def _grad(e: Expr, names: Sequence[str]) -> list:
    return [differentiate(e, n) for n in names]


def _curl3(v: Sequence[Expr], names: Sequence[str]) -> list:
    x, y, z = names
    return [
        add(differentiate(v[2], y), mul(MINUS_ONE, differentiate(v[1], z))),
        add(differentiate(v[0], z), mul(MINUS_ONE, differentiate(v[2], x))),
        add(differentiate(v[1], x), mul(MINUS_ONE, differentiate(v[0], y))),
    ]


def _cross3(a: Sequence[Expr], b: Sequence[Expr]) -> list:
    return [
        add(mul(a[1], b[2]), mul(MINUS_ONE, a[2], b[1])),
        add(mul(a[2], b[0]), mul(MINUS_ONE, a[0], b[2])),
        add(mul(a[0], b[1]), mul(MINUS_ONE, a[1], b[0])),
    ]


GAS_SOURCES = ("head-gradient", "vorticity", "body-force", "unsteadiness")


def gas_dynamics_case(
    velocity: Sequence[Expr],
    head: Expr = ZERO,
    force: Sequence[Expr] = (ZERO, ZERO, ZERO),
    temperature: Expr | None = None,
    unsteady: bool | None = None,
    policy: Policy | None = None,
) -> CaseReport:
    """Entropy-balance relation of an ideal flow, with source attribution.

    The right side of the momentum balance (head gradient, velocity crossed
    with its curl, minus the body force, plus the velocity time derivative,
    all over temperature) supplies the coefficients of a 1-form on
    (t, x, y, z) whose along-trajectory slot is zero; the time coordinate
    stands in for the along-trajectory direction and the spatial coordinates
    for the normal ones.  Each named source contributes additively to the
    commutator, so nonidentity is attributed source by source.
    """
    policy = policy or DEFAULT_POLICY
    names = ("x", "y", "z")
    chart = Chart(("t",) + names)
    if temperature is None:
        temperature = sym("T0")
    u = [v for v in velocity]
    if len(u) != 3 or len(tuple(force)) != 3:
        raise ValueError("velocity and force must have three components")
    tinv = pow_int(temperature, -1)

    du_dt = [differentiate(c, "t") for c in u]
    detected_unsteady = any(c != ZERO for c in du_dt)
    if unsteady is False:
        du_dt = [ZERO, ZERO, ZERO]
    lamb = _cross3(u, _curl3(u, names))
    sources = {
        "head-gradient": [mul(tinv, g) for g in _grad(head, names)],
        "vorticity": [mul(tinv, c) for c in lamb],
        "body-force": [mul(tinv, MINUS_ONE, f) for f in force],
        "unsteadiness": [mul(tinv, c) for c in du_dt],
    }

    def source_form(vec):
        return Form(chart, 1, {(i + 1,): c for i, c in enumerate(vec)})

    total = Form.zero(chart, 1)
    claims = []
    source_reports = {}
    for name in GAS_SOURCES:
        f = source_form(sources[name])
        total = form_add(total, f)
        active = Verdict.ZERO if f.is_structurally_zero else _vector_verdict(sources[name], policy)
        rep = commutator(f, None, policy)
        source_reports[name] = rep
        claims.append(
            Claim(
                f"source:{name}",
                "forms.commutator",
                f"contribution {active}; commutator {rep.aggregate}",
                passed=None,
                data={
                    "active": str(active),
                    "commutator": str(rep.aggregate),
                    "components": [to_text(c) for c in sources[name]],
                },
            )
        )

    claims.append(
        Claim(
            "along-trajectory-component",
            "construction",
            "the relation carries no differential in the along-trajectory slot",
            passed=total.coefficient((0,)) == ZERO,
            data={},
        )
    )

    verdict = analyze(EvolutionaryRelation(total), policy)
    claims.append(
        Claim(
            "classification",
            "relations.analyze",
            f"relation is {verdict.classification}",
            passed=None,
            data={
                "classification": verdict.classification,
                "sources": list(verdict.sources),
            },
        )
    )

    total_rep = verdict.commutator
    additive = all(
        total_rep.entry(e.alpha, e.beta).total
        == add(*(source_reports[nm].entry(e.alpha, e.beta).total for nm in GAS_SOURCES))
        for e in total_rep.entries
    )
    claims.append(
        Claim(
            "commutator-additivity",
            "forms.commutator",
            "total commutator equals the sum of the per-source tables",
            passed=additive,
            data={},
        )
    )

    if unsteady is not None:
        claims.append(
            Claim(
                "unsteady-flag",
                "construction",
                f"declared unsteady={unsteady}, detected time dependence={detected_unsteady}",
                passed=(unsteady == detected_unsteady) if unsteady is not None else None,
                data={"declared": unsteady, "detected": detected_unsteady},
            )
        )

    return CaseReport(
        case="gas-dynamics",
        inputs={
            "chart": str(chart),
            "velocity": [to_text(c) for c in u],
            "head": to_text(head),
            "force": [to_text(f) for f in force],
            "temperature": to_text(temperature),
            "relation": str(total),
        },
        claims=tuple(claims),
    )


def _vector_verdict(vec, policy) -> Verdict:
    from .verdict import combine

    return combine(is_identically_zero(c, policy) for c in vec)


# ---------------------------------------------------------------------------
# electromagnetic plane wave on (t, x)
# ---------------------------------------------------------------------------


def electromagnetic_case(
    profile: str | Expr = "f",
    wave_speed: str = "c",
    policy: Policy | None = None,
) -> CaseReport:
    """Plane-wave flux transport along x - c t = const.

    Fields E = (0, f(x - c t), 0) and H = (0, 0, f(x - c t)) give the flux
    modulus S = f^2 and the density I = (E^2 + H^2)/c = 2 f^2 / c.  On the
    locus x - c t = const both are constant (their pulled-back differentials
    vanish structurally), the two-sided balance residual vanishes there once
    the action term is zero, and the ratio of the time and space derivatives
    of S recovers the wave speed as the integrating direction.
    """
    policy = policy or DEFAULT_POLICY
    chart = Chart(("t", "x"))
    c = sym(wave_speed)
    phase = add(sym("x"), mul(MINUS_ONE, c, sym("t")))
    if isinstance(profile, Expr):
        f = subst(profile, {"xi": phase})
        profile_name = to_text(profile)
    else:
        f = opaque(profile, (phase,))
        profile_name = f"{profile}(x - {wave_speed}*t)"
    S = mul(f, f)
    I = mul(2, S, pow_int(c, -1))

    claims = []
    ps = Pseudostructure(
        ("tau",),
        {"t": sym("tau"), "x": add(mul(c, sym("tau")), sym("xi0"))},
        constraints=(add(sym("x"), mul(MINUS_ONE, c, sym("t")), mul(MINUS_ONE, sym("xi0"))),),
    )

    dS = Form(chart, 1, {(0,): differentiate(S, "t"), (1,): differentiate(S, "x")})
    dI = Form(chart, 1, {(0,): differentiate(I, "t"), (1,): differentiate(I, "x")})
    pbS = pullback(dS, ps)
    pbI = pullback(dI, ps)
    claims.append(
        Claim(
            "flux-and-density-constant-on-front",
            "forms.pullback",
            "pulled-back differentials of S and I vanish structurally",
            passed=pbS.is_structurally_zero and pbI.is_structurally_zero,
            data={"dS_on_front": str(pbS), "dI_on_front": str(pbI)},
        )
    )

    balance = form_add(dS, dI)
    pb_balance = pullback(balance, ps)
    claims.append(
        Claim(
            "balance-residual-on-front",
            "forms.pullback",
            "two-sided balance residual vanishes on the front when the action term is zero",
            passed=pb_balance.is_structurally_zero,
            data={"residual_on_front": str(pb_balance), "action_term": "0"},
        )
    )

    St = differentiate(S, "t")
    Sx = differentiate(S, "x")
    sx_verdict = is_identically_zero(Sx, policy)
    if sx_verdict is Verdict.ZERO:
        claims.append(
            Claim(
                "integrating-direction",
                "expr.is_identically_zero",
                "profile is constant along the front; the direction is indeterminate "
                "(degenerate input)",
                passed=None,
                data={"degenerate": True},
            )
        )
    else:
        direction = mul(MINUS_ONE, St, pow_int(Sx, -1))
        claims.append(
            Claim(
                "integrating-direction",
                "expr core",
                f"-(dS/dt)/(dS/dx) = {to_text(direction)}",
                passed=direction == c,
                data={"direction": to_text(direction), "degenerate": False},
            )
        )

    return CaseReport(
        case="electromagnetic",
        inputs={
            "chart": str(chart),
            "profile": profile_name,
            "wave_speed": wave_speed,
            "flux_modulus": to_text(S),
            "density": to_text(I),
            "front": "x - c*t = const",
        },
        claims=tuple(claims),
    )


# ---------------------------------------------------------------------------
# Hamilton-Jacobi strips, closure, and caustics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FanSpec:
    """1-parameter family of initial strips, seeded by the symbol ``x0``."""

    start: float
    stop: float
    count: int
    momentum: Expr  # p(0) as an expression in x0
    value: Expr = ZERO  # u(0) as an expression in x0

    def initial_states(self) -> list:
        from .expr import evaluate

        out = []
        for a in np.linspace(self.start, self.stop, self.count):
            env = {"x0": float(a)}
            out.append(
                {
                    "x": float(a),
                    "p": float(evaluate(self.momentum, env)),
                    "u": float(evaluate(self.value, env)),
                }
            )
        return out


def hamilton_jacobi_case(
    hamiltonian: Expr,
    fan: FanSpec,
    dt: float = 1e-2,
    steps: int = 200,
    closure_tol: float = 1e-6,
    policy: Policy | None = None,
    jobs: int = 1,
) -> CaseReport:
    """Integrate a fan of canonical strips and check the invariant structure.

    Claims: the strip closure du = -E dt + p dx within tolerance on every
    member; conservation of an autonomous Hamiltonian along the members; the
    structural closure of -E dt + p dx pulled onto a single trajectory
    (1-parameter chart); and the bracketed caustic events of the fan.
    """
    policy = policy or DEFAULT_POLICY
    hj = HamiltonJacobiProblem("t", ("x",), ("p",), hamiltonian)
    system = canonical_system(hj)
    trajectories = integrate(system, fan.initial_states(), dt, steps, jobs=jobs)
    claims = []

    residuals = [
        closure_along(tr, ("x",), ("p",), time_momentum=-tr.diagnostic).max_residual
        for tr in trajectories
    ]
    worst = max(residuals) if residuals else 0.0
    claims.append(
        Claim(
            "strip-closure",
            "characteristics.closure_along",
            f"max closure residual {worst:.3e} over {len(trajectories)} members",
            passed=worst <= closure_tol,
            data={"max_residual": worst, "tolerance": closure_tol},
        )
    )

    autonomous = "t" not in free_symbols(hamiltonian)
    if autonomous:
        drift = max(
            float(np.max(np.abs(tr.diagnostic - tr.diagnostic[0]))) for tr in trajectories
        )
        claims.append(
            Claim(
                "energy-conservation",
                "characteristics.integrate",
                f"max energy drift {drift:.3e}",
                passed=drift <= closure_tol,
                data={"max_drift": drift, "tolerance": closure_tol},
            )
        )

    # structural closure of -E dt + p dx on a single strip (opaque trajectory)
    phase_chart = Chart(("t", "x", "p"))
    theta = Form(phase_chart, 1, {(0,): mul(MINUS_ONE, hamiltonian), (1,): sym("p")})
    strip = Pseudostructure(
        ("tau",),
        {
            "t": sym("tau"),
            "x": opaque("Xtraj", (sym("tau"),)),
            "p": opaque("Ptraj", (sym("tau"),)),
        },
    )
    restriction = restrict(EvolutionaryRelation(theta), strip, policy)
    claims.append(
        Claim(
            "invariant-form-closed-on-strip",
            "relations.restrict",
            "-E dt + p dx pulled onto a trajectory is structurally closed",
            passed=restriction.closure_verdict is Verdict.ZERO,
            data={"omega_pi": str(restriction.omega_pi)},
        )
    )

    events = detect_degeneracy(trajectories)
    claims.append(
        Claim(
            "caustic-events",
            "characteristics.detect_degeneracy",
            f"{len(events)} Jacobian sign changes bracketed",
            passed=None,
            data={
                "events": [
                    {
                        "time": e.time,
                        "bracket": list(e.bracket),
                        "pair": list(e.pair),
                        "jacobians": list(e.jacobians),
                    }
                    for e in events
                ]
            },
        )
    )

    return CaseReport(
        case="hamilton-jacobi",
        inputs={
            "hamiltonian": to_text(hamiltonian),
            "fan": f"x0 in [{fan.start}, {fan.stop}] x{fan.count}, "
            f"p0 = {to_text(fan.momentum)}, u0 = {to_text(fan.value)}",
            "dt": dt,
            "steps": steps,
        },
        claims=tuple(claims),
    )
