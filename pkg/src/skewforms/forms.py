"""Skew-symmetric differential forms on ordered coordinate charts.

A form of degree p stores coefficients on strictly increasing multi-indices
of chart positions; permutation signs are absorbed into coefficients, so the
stored representation is the canonical one.  Operations: wedge product,
exterior derivative, closure and exactness verdicts, the commutator of a
1-form (optionally with the antisymmetrized-connection term), and pullback
onto parametrized pseudostructures.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import parsing
from .expr import (
    Expr,
    ExprError,
    MINUS_ONE,
    ZERO,
    add,
    differentiate,
    expand,
    free_symbols,
    is_identically_zero,
    mul,
    num,
    subst,
    to_text,
)
from .verdict import DEFAULT_POLICY, Policy, Verdict, combine


class FormError(ExprError):
    pass


@dataclass(frozen=True)
class Chart:
    """Ordered coordinate names; the order fixes all multi-index ordering."""

    names: tuple

    def __init__(self, names: Iterable[str]):
        object.__setattr__(self, "names", tuple(names))
        if not self.names:
            raise FormError("a chart needs at least one coordinate")
        if len(set(self.names)) != len(self.names):
            raise FormError("chart coordinates must be unique")

    @property
    def dim(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise FormError(f"coordinate {name!r} not on chart {self.names}") from None

    def __str__(self) -> str:
        return "(" + ", ".join(self.names) + ")"


class Form:
    """Degree-p form; ``terms`` maps strictly increasing index tuples to coefficients."""

    __slots__ = ("chart", "degree", "terms", "_tdict")

    def __init__(self, chart: Chart, degree: int, terms: Mapping | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = {}
        n = chart.dim
        if degree < 0:
            raise FormError("form degree must be nonnegative")
        for idx, coeff in items:
            idx = tuple(int(i) for i in idx)
            if len(idx) != degree:
                raise FormError(f"index {idx} does not match degree {degree}")
            if any(not 0 <= i < n for i in idx):
                raise FormError(f"index {idx} out of range for chart {chart}")
            if any(idx[k] >= idx[k + 1] for k in range(len(idx) - 1)):
                raise FormError(f"multi-index {idx} is not strictly increasing")
            c = add(acc.get(idx, ZERO), coeff)
            if c == ZERO:
                acc.pop(idx, None)
            else:
                acc[idx] = c
        if degree > n and acc:
            raise FormError(f"degree {degree} exceeds chart dimension {n}")
        self.chart = chart
        self.degree = degree
        self.terms = tuple(sorted(acc.items(), key=lambda kv: kv[0]))
        self._tdict = dict(self.terms)

    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "Form":
        return cls(chart, degree)

    @classmethod
    def scalar(cls, chart: Chart, coeff: Expr) -> "Form":
        return cls(chart, 0, {(): coeff})

    def coefficient(self, idx: Sequence[int]) -> Expr:
        return self._tdict.get(tuple(idx), ZERO)

    def component(self, *names: str) -> Expr:
        """Coefficient addressed by coordinate names (any order, with sign)."""
        pos = [self.chart.index(n) for n in names]
        order = sorted(range(len(pos)), key=lambda k: pos[k])
        sign = _permutation_sign(order)
        srt = tuple(pos[k] for k in order)
        if len(set(srt)) != len(srt):
            return ZERO
        return mul(num(sign), self._tdict.get(srt, ZERO))

    @property
    def is_structurally_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return (
            isinstance(other, Form)
            and self.chart == other.chart
            and self.degree == other.degree
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.chart, self.degree, self.terms))

    def __add__(self, other):
        return form_add(self, other)

    def __sub__(self, other):
        return form_add(self, form_scale(other, MINUS_ONE))

    def __str__(self) -> str:
        return form_to_literal(self)

    def __repr__(self) -> str:
        return f"<Form deg {self.degree} on {self.chart}: {form_to_literal(self)}>"


def _permutation_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        for j in range(i + 1, len(seen)):
            if seen[i] > seen[j]:
                sign = -sign
    return sign


def _same_chart(a: Form, b: Form):
    if a.chart != b.chart:
        raise FormError(f"chart mismatch: {a.chart} vs {b.chart}")


def form_add(a: Form, b: Form) -> Form:
    _same_chart(a, b)
    if a.degree != b.degree:
        raise FormError(f"degree mismatch: {a.degree} vs {b.degree}")
    acc = dict(a.terms)
    for idx, c in b.terms:
        acc[idx] = add(acc.get(idx, ZERO), c)
    return Form(a.chart, a.degree, acc)


def form_scale(a: Form, factor: Expr) -> Form:
    return Form(a.chart, a.degree, {idx: mul(factor, c) for idx, c in a.terms})


def _merge_indices(I: tuple, J: tuple):
    """Merge two increasing index tuples; returns (merged, sign) or (None, 0)."""
    out = []
    sign = 1
    i = j = 0
    while i < len(I) and j < len(J):
        a, b = I[i], J[j]
        if a == b:
            return None, 0
        if a < b:
            out.append(a)
            i += 1
        else:
            if (len(I) - i) % 2:
                sign = -sign
            out.append(b)
            j += 1
    out.extend(I[i:])
    out.extend(J[j:])
    return tuple(out), sign


def wedge(a: Form, b: Form) -> Form:
    """Exterior product; repeated basis differentials annihilate."""
    _same_chart(a, b)
    acc: dict = {}
    for I, ca in a.terms:
        for J, cb in b.terms:
            merged, sign = _merge_indices(I, J)
            if merged is None:
                continue
            prev = acc.get(merged, ZERO)
            acc[merged] = add(prev, mul(num(sign), ca, cb))
    return Form(a.chart, a.degree + b.degree, acc)


def exterior_derivative(a: Form) -> Form:
    """Flat exterior derivative: d(f dx^I) = df ^ dx^I."""
    chart = a.chart
    acc: dict = {}
    for I, c in a.terms:
        for q, name in enumerate(chart.names):
            dc = differentiate(c, name)
            if dc == ZERO or q in I:
                continue
            pos = bisect_left(I, q)
            idx = I[:pos] + (q,) + I[pos:]
            sign = -1 if pos % 2 else 1
            acc[idx] = add(acc.get(idx, ZERO), mul(num(sign), dc))
    return Form(chart, a.degree + 1, acc)


def is_closed(a: Form, policy: Policy | None = None) -> Verdict:
    """Verdict over all components of the exterior derivative."""
    d = exterior_derivative(a)
    policy = policy or DEFAULT_POLICY
    return combine(is_identically_zero(c, policy) for _, c in d.terms)


def exactness_witness_check(a: Form, psi: Form, policy: Policy | None = None) -> Verdict:
    """Zero iff ``a - d(psi)`` is structurally zero (then psi is a potential)."""
    _same_chart(a, psi)
    if psi.degree != a.degree - 1:
        raise FormError(f"witness degree {psi.degree} must be {a.degree - 1}")
    residual = a - exterior_derivative(psi)
    policy = policy or DEFAULT_POLICY
    return combine(is_identically_zero(c, policy) for _, c in residual.terms)


# ---------------------------------------------------------------------------
# commutator of a 1-form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CommutatorEntry:
    alpha: int
    beta: int
    derivative_part: Expr
    connection_part: Expr
    total: Expr
    derivative_verdict: Verdict
    connection_verdict: Verdict
    verdict: Verdict


@dataclass(frozen=True)
class CommutatorReport:
    """Antisymmetric component table of a 1-form's differential.

    Entries are stored for alpha < beta; the table entry splits into the
    coefficient-derivative part and the antisymmetrized-connection part.
    Without a connection the latter is identically 0 and the table is
    exactly the coefficient table of the exterior derivative.
    """

    chart: Chart
    entries: tuple
    aggregate: Verdict = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "aggregate", combine(e.verdict for e in self.entries))

    def entry(self, alpha: int, beta: int) -> CommutatorEntry:
        for e in self.entries:
            if (e.alpha, e.beta) == (alpha, beta):
                return e
        raise KeyError((alpha, beta))

    def component(self, alpha: int, beta: int) -> Expr:
        """K with any index order; K[beta,alpha] = -K[alpha,beta]."""
        if alpha == beta:
            return ZERO
        if alpha < beta:
            return self.entry(alpha, beta).total
        return mul(MINUS_ONE, self.entry(beta, alpha).total)


def commutator(a: Form, connection=None, policy: Policy | None = None) -> CommutatorReport:
    """Component table of d(a) for a 1-form, split per contribution.

    With a connection, each entry gains the antisymmetrized term built from
    the connection coefficients contracted with the form coefficients; a
    symmetric connection contributes nothing.
    """
    if a.degree != 1:
        raise FormError("the commutator table is defined for 1-forms")
    policy = policy or DEFAULT_POLICY
    chart = a.chart
    n = chart.dim
    if connection is not None and connection.chart != chart:
        raise FormError("connection chart does not match the form chart")
    coeffs = [a.coefficient((i,)) for i in range(n)]
    entries = []
    for al in range(n):
        for be in range(al + 1, n):
            dpart = add(
                differentiate(coeffs[be], chart.names[al]),
                mul(MINUS_ONE, differentiate(coeffs[al], chart.names[be])),
            )
            if connection is None:
                cpart = ZERO
            else:
                g = connection.gamma
                cpart = add(
                    *(
                        mul(add(g[s][be][al], mul(MINUS_ONE, g[s][al][be])), coeffs[s])
                        for s in range(n)
                    )
                )
            total = add(dpart, cpart)
            entries.append(
                CommutatorEntry(
                    alpha=al,
                    beta=be,
                    derivative_part=dpart,
                    connection_part=cpart,
                    total=total,
                    derivative_verdict=is_identically_zero(dpart, policy),
                    connection_verdict=is_identically_zero(cpart, policy),
                    verdict=is_identically_zero(total, policy),
                )
            )
    return CommutatorReport(chart=chart, entries=tuple(entries))


# ---------------------------------------------------------------------------
# pseudostructures and pullback
# ---------------------------------------------------------------------------


class Pseudostructure:
    """Parametrized locus on which otherwise unclosed forms may close.

    ``mapping`` sends each chart coordinate to an expression in the
    parameters (plus free constants).  Optional constraint expressions must
    vanish structurally under the parametrization; that is checked here.
    """

    __slots__ = ("params", "mapping", "constraints")

    def __init__(
        self,
        params: Iterable[str],
        mapping: Mapping[str, Expr],
        constraints: Iterable[Expr] = (),
    ):
        self.params = tuple(params)
        if not self.params:
            raise FormError("a pseudostructure needs at least one parameter")
        self.mapping = dict(mapping)
        self.constraints = tuple(constraints)
        for c in self.constraints:
            r = subst(c, self.mapping)
            if r != ZERO:
                raise FormError(
                    f"constraint {to_text(c)} does not vanish on the parametrization "
                    f"(residual {to_text(r)})"
                )

    @property
    def chart(self) -> Chart:
        return Chart(self.params)

    def __repr__(self):
        body = ", ".join(f"{k} = {to_text(v)}" for k, v in sorted(self.mapping.items()))
        return f"<Pseudostructure ({', '.join(self.params)}) : {body}>"


def pullback(a: Form, s: Pseudostructure) -> Form:
    """Substitute the parametrization into ``a``: coordinates in the
    coefficients and dx^i -> sum_j (dx^i/du^j) du^j in the basis."""
    chart = a.chart
    needed = set()
    for idx, c in a.terms:
        needed.update(chart.names[i] for i in idx)
        needed.update(free_symbols(c) & set(chart.names))
    missing = sorted(needed - set(s.mapping))
    if missing:
        raise FormError(f"parametrization missing chart coordinates: {', '.join(missing)}")
    target = s.chart
    differentials = {}
    for i, name in enumerate(chart.names):
        if name not in s.mapping:
            continue
        image = s.mapping[name]
        differentials[i] = Form(
            target,
            1,
            {(j,): differentiate(image, u) for j, u in enumerate(s.params)},
        )
    result = None
    for idx, c in a.terms:
        g = Form.scalar(target, subst(c, s.mapping))
        for i in idx:
            g = wedge(g, differentials[i])
        result = g if result is None else form_add(result, g)
    if result is None:
        return Form(target, a.degree)
    # distribute the jacobian products so cancellations show structurally
    return Form(target, result.degree, {idx: expand(c) for idx, c in result.terms})


# ---------------------------------------------------------------------------
# form literals:  "c_v dT + (R*T/V) dV",  "x*y dx ^ dy"
# ---------------------------------------------------------------------------


def form_to_literal(a: Form) -> str:
    """Canonical literal; ``parse_form`` inverts it on the same chart."""
    if not a.terms:
        if a.degree == 0:
            return "0"
        basis = " ^ ".join("d" + n for n in a.chart.names[: a.degree])
        return "0 " + basis
    parts = []
    for k, (idx, c) in enumerate(a.terms):
        basis = " ^ ".join("d" + a.chart.names[i] for i in idx)
        neg, body = _literal_split_sign(c)
        coeff_txt = _literal_coeff(body)
        if idx:
            piece = (coeff_txt + " " + basis) if coeff_txt else basis
        else:
            piece = coeff_txt or "1"
        if k == 0:
            parts.append(("-" if neg else "") + piece)
        else:
            parts.append((" - " if neg else " + ") + piece)
    return "".join(parts)


def _literal_split_sign(c: Expr):
    from .expr import _neg_split  # shared sign convention with the printer

    return _neg_split(c)


def _literal_coeff(c: Expr) -> str:
    from .expr import Add as _Add, Num as _Num, ONE

    if c == ONE:
        return ""
    txt = to_text(c)
    if isinstance(c, _Add):
        return "(" + txt + ")"
    return txt


def parse_form(text: str, chart: Chart, degree: int | None = None) -> Form:
    """Parse a form literal against a chart.

    ``d<coord>`` names are reserved for basis differentials and may not be
    used as symbols inside coefficients.  All terms must share one degree;
    a bare scalar expression is a 0-form.
    """
    toks = parsing.tokenize(text)
    end = len(text)
    diff_names = {"d" + n: i for i, n in enumerate(chart.names)}

    segments = []  # (sign, tokens)
    depth = 0
    cur: list = []
    sign = 1
    signs = [1]
    for t in toks:
        if t.kind == "op":
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth -= 1
            elif depth == 0 and t.text in "+-" and _starts_term(cur):
                if cur:
                    segments.append((signs[-1], cur))
                    cur = []
                signs.append(1 if t.text == "+" else -1)
                continue
        cur.append(t)
    if cur or not segments:
        segments.append((signs[-1], cur))
    if len(signs) != len(segments):
        raise parsing.ParseError("empty term in form literal", end)

    acc: dict = {}
    seen_degree: int | None = None
    for sgn, seg in segments:
        while seg and seg[0].kind == "op" and seg[0].text in "+-":
            if seg[0].text == "-":
                sgn = -sgn
            seg = seg[1:]
        if not seg:
            raise parsing.ParseError("empty term in form literal", end)
        split = None
        d = 0
        for k, t in enumerate(seg):
            if t.kind == "op":
                if t.text == "(":
                    d += 1
                elif t.text == ")":
                    d -= 1
            elif t.kind == "name" and d == 0 and t.text in diff_names:
                split = k
                break
        if split is None:
            coeff = parsing.parse_tokens(seg, end)
            idx: tuple = ()
        else:
            coeff = parsing.parse_tokens(seg[:split], end) if split else None
            idx_list = []
            k = split
            while k < len(seg):
                t = seg[k]
                if not (t.kind == "name" and t.text in diff_names):
                    raise parsing.ParseError(f"expected a differential, found {t.text!r}", t.pos)
                idx_list.append(diff_names[t.text])
                k += 1
                if k < len(seg):
                    w = seg[k]
                    if not (w.kind == "op" and w.text == "^"):
                        raise parsing.ParseError(
                            f"expected '^' between differentials, found {w.text!r}", w.pos
                        )
                    k += 1
                    if k == len(seg):
                        raise parsing.ParseError("dangling '^' in form literal", end)
            # normalize the written index order into the canonical one
            order = sorted(range(len(idx_list)), key=lambda q: idx_list[q])
            if len(set(idx_list)) != len(idx_list):
                continue  # repeated differential: the term is zero
            perm_sign = _permutation_sign(order)
            idx = tuple(sorted(idx_list))
            sgn = sgn * perm_sign
            if coeff is None:
                coeff = num(1)
        term_degree = len(idx)
        if seen_degree is None:
            seen_degree = term_degree
        elif seen_degree != term_degree:
            raise parsing.ParseError(
                f"mixed degrees in form literal ({seen_degree} and {term_degree})", end
            )
        acc[idx] = add(acc.get(idx, ZERO), mul(num(sgn), coeff))
    if seen_degree is None:
        seen_degree = 0
    if degree is not None and degree != seen_degree:
        raise parsing.ParseError(f"expected degree {degree}, found {seen_degree}", end)
    # a plain "0" literal is degree 0 unless the caller said otherwise
    if not any(idx for idx in acc) and all(v == ZERO for v in acc.values()):
        return Form(chart, degree if degree is not None else seen_degree)
    return Form(chart, seen_degree, acc)


def _starts_term(cur: list) -> bool:
    """A +/- at depth 0 separates terms only if the current segment can end here."""
    if not cur:
        return False
    t = cur[-1]
    if t.kind == "op" and t.text in "+-*/^,(":
        return False
    return True
