"""Analysis of relations "d(state function) = form".

A relation whose right side is closed is identical: the state function exists
and can be recovered.  An unclosed right side makes the relation
nonidentical; the commutator table names what obstructs it (coefficient curl
and, with a connection, torsion).  Restriction to a pseudostructure pulls the
form onto a parametrized locus where it may close, and then lowers the degree
by recovering a potential; chaining restrictions integrates the relation step
by step.  A single-variable integrating-factor search covers the classical
two-coordinate case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import matrices
from .expr import (
    Add,
    Expr,
    ExprError,
    Fn,
    MINUS_ONE,
    Mul,
    Num,
    ONE,
    Pow,
    Sym,
    ZERO,
    add,
    apply_function,
    differentiate,
    expand,
    free_symbols,
    is_identically_zero,
    mul,
    num,
    opaque,
    pow_int,
    subst,
    sym,
    to_text,
)
from .forms import (
    Chart,
    CommutatorReport,
    Form,
    FormError,
    Pseudostructure,
    commutator,
    exactness_witness_check,
    exterior_derivative,
    form_scale,
    is_closed,
    pullback,
    wedge,
)
from .verdict import DEFAULT_POLICY, Policy, Verdict, combine

SOURCE_COEFFICIENT_CURL = "coefficient curl"
SOURCE_TORSION = "torsion"


class RelationError(ExprError):
    pass


class NotClosedOnPseudostructure(RelationError):
    """Raised when the pulled-back form fails to close on a candidate locus."""

    def __init__(self, residual: Form, verdict: Verdict):
        self.residual = residual
        self.verdict = verdict
        super().__init__(
            f"form is not closed on the pseudostructure (verdict {verdict}); "
            f"residual {residual}"
        )


class NotIntegrableError(RelationError):
    pass


@dataclass(frozen=True)
class EvolutionaryRelation:
    """Right side ``omega``; optional known state form ``psi`` one degree lower."""

    omega: Form
    psi: Form | None = None
    connection: object | None = None

    def __post_init__(self):
        if self.psi is not None:
            if self.psi.chart != self.omega.chart:
                raise RelationError("psi and omega must share a chart")
            if self.psi.degree != self.omega.degree - 1:
                raise RelationError("deg(psi) must be deg(omega) - 1")
        if self.connection is not None and self.connection.chart != self.omega.chart:
            raise RelationError("connection chart does not match omega")


@dataclass(frozen=True)
class IdentityVerdict:
    classification: str  # "identical" | "nonidentical" | "indeterminate"
    sources: tuple
    commutator: CommutatorReport | None = None
    derivative: Form | None = None

    @property
    def is_identical(self) -> bool:
        return self.classification == "identical"


def analyze(rel: EvolutionaryRelation, policy: Policy | None = None) -> IdentityVerdict:
    """Classify the relation by the closure of its right side.

    For 1-forms the commutator table is reported with per-entry splits; each
    nonzero contribution is attributed to a named source.  Higher degrees use
    the flat exterior derivative; a connection is only supported for degree 1.
    """
    policy = policy or DEFAULT_POLICY
    w = rel.omega
    if w.degree == 1:
        rep = commutator(w, rel.connection, policy)
        sources = []
        if any(e.derivative_verdict is Verdict.NONZERO for e in rep.entries):
            sources.append(SOURCE_COEFFICIENT_CURL)
        if any(e.connection_verdict is Verdict.NONZERO for e in rep.entries):
            sources.append(SOURCE_TORSION)
        cls = _classify(rep.aggregate)
        return IdentityVerdict(cls, tuple(sources), commutator=rep)
    if rel.connection is not None:
        raise RelationError(
            "a connection-aware differential is only defined for 1-forms here"
        )
    d = exterior_derivative(w)
    verdict = combine(is_identically_zero(c, policy) for _, c in d.terms)
    sources = (SOURCE_COEFFICIENT_CURL,) if verdict is Verdict.NONZERO else ()
    return IdentityVerdict(_classify(verdict), sources, derivative=d)


def _classify(v: Verdict) -> str:
    if v is Verdict.ZERO:
        return "identical"
    if v is Verdict.NONZERO:
        return "nonidentical"
    return "indeterminate"


# ---------------------------------------------------------------------------
# antiderivatives (single variable, closed-form rules only)
# ---------------------------------------------------------------------------


def antiderivative(e: Expr, var: str) -> Expr:
    """Antiderivative for the rule set the engine needs.

    Supported per term, with any factor free of ``var``: powers (including
    the logarithmic exponent -1), and ln/exp/sin/cos of arguments linear in
    ``var``.  Raises :class:`NotIntegrableError` otherwise; no constant term.
    """
    terms = e.terms if isinstance(e, Add) else (e,)
    return add(*(_anti_term(t, var) for t in terms))


def _anti_term(t: Expr, var: str) -> Expr:
    const = []
    dep = []
    for f in t.factors if isinstance(t, Mul) else (t,):
        (dep if var in free_symbols(f) else const).append(f)
    if not dep:
        return mul(*const, sym(var))
    if len(dep) > 1:
        raise NotIntegrableError(f"cannot integrate {to_text(t)} in {var}")
    g = dep[0]
    base, k = (g.base, g.exp) if isinstance(g, Pow) else (g, 1)
    if isinstance(base, Sym):  # base is the variable itself
        if k == -1:
            return mul(*const, apply_function("ln", base))
        return mul(*const, num(Fraction(1, k + 1)), pow_int(base, k + 1))
    lin = _linear_slope(base if not isinstance(base, Fn) else base.arg, var)
    if isinstance(base, Fn) and k == 1 and lin is not None:
        u = base.arg
        inv = pow_int(lin, -1)
        if base.name == "sin":
            body = mul(MINUS_ONE, apply_function("cos", u))
        elif base.name == "cos":
            body = apply_function("sin", u)
        elif base.name == "exp":
            body = base
        else:  # ln
            body = add(mul(u, base), mul(MINUS_ONE, u))
        return mul(*const, inv, body)
    if isinstance(base, Add) and lin is not None:
        inv = pow_int(lin, -1)
        if k == -1:
            return mul(*const, inv, apply_function("ln", base))
        return mul(*const, inv, num(Fraction(1, k + 1)), pow_int(base, k + 1))
    raise NotIntegrableError(f"cannot integrate {to_text(t)} in {var}")


def _linear_slope(u: Expr, var: str):
    """Slope a when u = a*var + b with a nonzero and free of var, else None."""
    a = differentiate(u, var)
    if a == ZERO or var in free_symbols(a):
        return None
    return a


# ---------------------------------------------------------------------------
# integrating factor (two coordinates, single-variable ansatz)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactorSearch:
    status: str  # "found" | "no_factor" | "indeterminate"
    factor: Expr | None = None
    ansatz: str | None = None  # coordinate the factor depends on
    scaled: Form | None = None

    @property
    def found(self) -> bool:
        return self.status == "found"


def find_integrating_factor(w: Form, policy: Policy | None = None) -> FactorSearch:
    """Search mu = mu(x1), then mu = mu(x2), making mu*w closed.

    Solves mu'/mu = (curl)/(coefficient) when that ratio depends on the
    ansatz coordinate alone; the returned factor is re-verified structurally
    and normalized to leading rational coefficient 1.  A closed input gets
    mu = 1.  Factors are unique only up to constants (and anything the
    one-variable ansatz cannot see).
    """
    policy = policy or DEFAULT_POLICY
    if w.degree != 1 or w.chart.dim != 2:
        raise RelationError("integrating-factor search expects a 1-form on a 2-coordinate chart")
    x1, x2 = w.chart.names
    m = w.coefficient((0,))
    n = w.coefficient((1,))
    curl = add(differentiate(n, x1), mul(MINUS_ONE, differentiate(m, x2)))
    cv = is_identically_zero(curl, policy)
    if cv is Verdict.ZERO:
        return FactorSearch("found", ONE, None, w)
    if cv is Verdict.UNKNOWN:
        return FactorSearch("indeterminate")
    saw_unknown = False
    for var, ratio in (
        (x1, mul(MINUS_ONE, curl, pow_int(n, -1)) if n != ZERO else None),
        (x2, mul(curl, pow_int(m, -1)) if m != ZERO else None),
    ):
        if ratio is None:
            continue
        g = _single_variable_reduction(ratio, var, w.chart)
        if g is None:
            continue
        try:
            factor = _exp_integral(g, var)
        except NotIntegrableError:
            continue
        scaled = form_scale(w, factor)
        verdict = is_closed(scaled, policy)
        if verdict is Verdict.ZERO:
            return FactorSearch("found", factor, var, scaled)
        if verdict is Verdict.UNKNOWN:
            saw_unknown = True
    return FactorSearch("indeterminate" if saw_unknown else "no_factor")


def _single_variable_reduction(ratio: Expr, var: str, chart: Chart):
    """Normalize the ratio and accept it when only ``var`` of the chart remains."""
    from .expr import together

    candidates = [ratio, together(expand(ratio))]
    others = set(chart.names) - {var}
    for cand in candidates:
        if not (free_symbols(cand) & others):
            return cand
    return None


def _exp_integral(g: Expr, var: str) -> Expr:
    """exp(integral of g dvar), folding c*ln(b) pieces into integer powers."""
    a = antiderivative(g, var)
    power_parts = []
    residual_terms = []
    for t in a.terms if isinstance(a, Add) else (a,):
        c = Fraction(1)
        rest = t
        if isinstance(t, Mul) and isinstance(t.factors[0], Num):
            c = t.factors[0].value
            rest = mul(*t.factors[1:])
        if isinstance(rest, Fn) and rest.name == "ln" and c.denominator == 1:
            power_parts.append(pow_int(rest.arg, int(c)))
        else:
            residual_terms.append(t)
    factor = mul(*power_parts) if power_parts else ONE
    if residual_terms:
        factor = mul(factor, apply_function("exp", add(*residual_terms)))
    coeff, monic = _strip_coeff(factor)
    return monic


def _strip_coeff(e: Expr):
    if isinstance(e, Num):
        return e.value, ONE
    if isinstance(e, Mul) and isinstance(e.factors[0], Num):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), e


# ---------------------------------------------------------------------------
# potential recovery
# ---------------------------------------------------------------------------


class PotentialNotFound(RelationError):
    pass


def recover_potential(w: Form, policy: Policy | None = None) -> Expr:
    """State function of an exact 1-form by successive antiderivatives.

    Integrates coefficient by coefficient along the chart order and verifies
    d(potential) = w structurally at the end; handles the ln/power rule set
    of :func:`antiderivative`.
    """
    if w.degree != 1:
        raise RelationError("potential recovery expects a 1-form")
    chart = w.chart
    potential = ZERO
    for name in chart.names:
        residual = w - exterior_derivative(Form.scalar(chart, potential))
        c = residual.coefficient((chart.index(name),))
        if c == ZERO:
            continue
        try:
            potential = add(potential, antiderivative(c, name))
        except NotIntegrableError as exc:
            raise PotentialNotFound(str(exc)) from None
    residual = w - exterior_derivative(Form.scalar(chart, potential))
    if not residual.is_structurally_zero:
        raise PotentialNotFound(f"residual {residual} after integration")
    return potential


def homotopy_potential(w: Form, policy: Policy | None = None) -> Form:
    """Potential of a closed form with polynomial coefficients (degree >= 1).

    Uses the scaling homotopy from the chart origin: each coefficient is
    evaluated along x -> s*x, weighted by s^(degree-1), and integrated
    exactly in s term by term.  The result is verified structurally.
    """
    if w.degree < 1:
        raise RelationError("homotopy potential needs degree >= 1")
    chart = w.chart
    p = w.degree
    s = sym("_s")
    scale_map = {name: mul(s, sym(name)) for name in chart.names}
    acc: dict = {}
    for idx, c in w.terms:
        weighted = expand(mul(pow_int(s, p - 1), subst(c, scale_map)))
        integral = _integrate_unit_interval(weighted, "_s")
        for q, iq in enumerate(idx):
            rest = idx[:q] + idx[q + 1 :]
            sign = -1 if q % 2 else 1
            coeff = mul(num(sign), sym(chart.names[iq]), integral)
            acc[rest] = add(acc.get(rest, ZERO), coeff)
    theta = Form(chart, p - 1, acc)
    check = exactness_witness_check(w, theta)
    if check is not Verdict.ZERO:
        raise PotentialNotFound("homotopy integration failed its structural check")
    return theta


def _integrate_unit_interval(e: Expr, svar: str) -> Expr:
    """Exact integral over [0, 1] of a polynomial in ``svar``."""
    total = ZERO
    for t in e.terms if isinstance(e, Add) else (e,):
        k = 0
        rest = []
        for f in t.factors if isinstance(t, Mul) else (t,):
            if isinstance(f, Sym) and f.name == svar:
                k = 1
            elif isinstance(f, Pow) and isinstance(f.base, Sym) and f.base.name == svar:
                k = f.exp
            elif svar in free_symbols(f):
                raise PotentialNotFound("coefficients must be polynomial for the homotopy")
            else:
                rest.append(f)
                continue
            if k < 0:
                raise PotentialNotFound("coefficients must be polynomial for the homotopy")
        total = add(total, mul(num(Fraction(1, k + 1)), *rest))
    return total


# ---------------------------------------------------------------------------
# restriction to pseudostructures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdenticalRestriction:
    """A relation made identical on a pseudostructure.

    ``omega_pi`` is the pulled-back, closed form on the parameter chart; it
    is the interior differential of the state form, whose integrated value
    ``psi_pi`` is attached when the engine can produce it symbolically.
    """

    pseudostructure: Pseudostructure
    omega_pi: Form
    closure_verdict: Verdict
    psi_pi: Form | None = None


def restrict(
    rel: EvolutionaryRelation, s: Pseudostructure, policy: Policy | None = None
) -> IdenticalRestriction:
    """Pull the relation onto a pseudostructure; succeed only if it closes there."""
    policy = policy or DEFAULT_POLICY
    wpi = pullback(rel.omega, s)
    verdict = is_closed(wpi, policy)
    if verdict is not Verdict.ZERO:
        raise NotClosedOnPseudostructure(exterior_derivative(wpi), verdict)
    return IdenticalRestriction(
        pseudostructure=s,
        omega_pi=wpi,
        closure_verdict=verdict,
        psi_pi=_try_potential(wpi, policy),
    )


def _try_potential(wpi: Form, policy: Policy) -> Form | None:
    if wpi.degree == 0:
        return None
    if wpi.degree == 1 and wpi.chart.dim == 1:
        c = wpi.coefficient((0,))
        try:
            return Form.scalar(wpi.chart, antiderivative(c, wpi.chart.names[0]))
        except NotIntegrableError:
            return None
    if wpi.degree == 1:
        try:
            return Form.scalar(wpi.chart, recover_potential(wpi, policy))
        except PotentialNotFound:
            pass
    try:
        return homotopy_potential(wpi, policy)
    except (PotentialNotFound, RelationError):
        return None


def numeric_potential_samples(
    restriction: IdenticalRestriction, grid, bindings=None
) -> np.ndarray:
    """Cumulative trapezoid integral of a 1-parameter restriction's coefficient.

    Fallback for coefficients outside the symbolic rule set; ``bindings``
    supplies values for any free constants.
    """
    w = restriction.omega_pi
    if w.degree != 1 or w.chart.dim != 1:
        raise RelationError("numeric integration applies to 1-forms on one parameter")
    from .expr import evaluate

    g = np.asarray(grid, dtype=np.float64)
    name = w.chart.names[0]
    c = w.coefficient((0,))
    env = dict(bindings or {})
    vals = np.empty_like(g)
    for i, x in enumerate(g):
        env[name] = float(x)
        vals[i] = float(evaluate(c, env))
    out = np.zeros_like(g)
    out[1:] = np.cumsum((vals[1:] + vals[:-1]) * np.diff(g) / 2.0)
    return out


@dataclass(frozen=True)
class ChainFailure:
    step: int
    reason: str
    residual: Form | None = None
    verdict: Verdict | None = None


@dataclass(frozen=True)
class ChainResult:
    steps: tuple
    failure: ChainFailure | None = None

    @property
    def completed(self) -> bool:
        return self.failure is None


def sequential_integrate(
    rel: EvolutionaryRelation,
    chain: Sequence[Pseudostructure],
    policy: Policy | None = None,
) -> ChainResult:
    """Apply restrict along a chain, lowering the degree once per step.

    After a successful restriction the recovered potential becomes the right
    side of the next relation (on the parameter chart).  Stops and reports at
    the first failure: a form that does not close on its candidate locus, or
    a potential outside the symbolic rule set.
    """
    policy = policy or DEFAULT_POLICY
    steps = []
    current = rel.omega
    for i, ps in enumerate(chain):
        try:
            step = restrict(EvolutionaryRelation(current), ps, policy)
        except NotClosedOnPseudostructure as exc:
            return ChainResult(
                tuple(steps),
                ChainFailure(i, "not closed on pseudostructure", exc.residual, exc.verdict),
            )
        steps.append(step)
        if i + 1 == len(chain):
            break
        if step.psi_pi is None:
            return ChainResult(
                tuple(steps),
                ChainFailure(i, "no symbolic potential available to continue the chain"),
            )
        current = step.psi_pi
    return ChainResult(tuple(steps))


# ---------------------------------------------------------------------------
# degenerate-transform conditions
# ---------------------------------------------------------------------------


def degenerate_conditions(coefficients) -> list:
    """Vanishing conditions for a linear system in the chart differentials.

    ``coefficients`` is the matrix of expressions multiplying the
    differentials; a square system yields its determinant, a rectangular one
    the full list of maximal minors.
    """
    rows = [list(r) for r in coefficients]
    if rows and len(rows) == len(rows[0]):
        return [matrices.det(rows)]
    return matrices.maximal_minors(rows)
