"""Exact symbolic scalar expressions.

Trees over exact rational constants, named symbols, n-ary sums and products,
integer powers, the elementary functions ln/exp/sin/cos, and opaque function
symbols with declared argument lists (``f(x, t)``).  Every constructor returns
a normalized tree:

* sums and products are flattened, factors and terms are sorted by a fixed
  structural key, like terms and like bases are collected exactly;
* rational constants fold with :class:`fractions.Fraction` arithmetic, so
  floats never appear inside a tree (only at evaluation time);
* quotients are products with negative integer exponents; sums are *not*
  expanded and are not put over a common denominator unless asked
  (:func:`expand`, :func:`together`).

Symbols carry no variable-versus-constant marker: a "named constant" is
simply a symbol that the caller never differentiates with respect to.
Derivatives of an opaque application are formal: ``D(f(x, t), 1)`` is the
partial with respect to the first argument slot, which classical notation
writes ``f_x``.  Slots are kept sorted, so mixed formal partials commute
structurally.
"""

from __future__ import annotations

import math
import random
import zlib
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

from .verdict import DEFAULT_POLICY, Policy, Verdict

NumberLike = Union[int, Fraction]


class ExprError(Exception):
    pass


class UnboundSymbolError(ExprError):
    pass


_NAME_OK = None  # compiled lazily


def _check_name(name: str) -> str:
    global _NAME_OK
    if _NAME_OK is None:
        import re

        _NAME_OK = re.compile(r"[A-Za-z_][A-Za-z_0-9]*\Z")
    if not isinstance(name, str) or not _NAME_OK.match(name):
        raise ExprError(f"invalid symbol name {name!r}")
    return name


class Expr:
    """Base node.  Instances are immutable and always in normal form."""

    __slots__ = ("_hash", "_key", "_free")

    def _fields(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def _make_key(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def __hash__(self):
        h = self._hash
        if h is None:
            h = self._hash = hash((self.__class__.__name__, self._fields()))
        return h

    def __eq__(self, other):
        if self is other:
            return True
        if other.__class__ is not self.__class__:
            return False
        if hash(self) != hash(other):
            return False
        return self._fields() == other._fields()

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {to_text(self)}>"

    # arithmetic sugar -----------------------------------------------------
    def __add__(self, other):
        return add(self, _as_expr(other))

    def __radd__(self, other):
        return add(_as_expr(other), self)

    def __sub__(self, other):
        return add(self, mul(MINUS_ONE, _as_expr(other)))

    def __rsub__(self, other):
        return add(_as_expr(other), mul(MINUS_ONE, self))

    def __mul__(self, other):
        return mul(self, _as_expr(other))

    def __rmul__(self, other):
        return mul(_as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, pow_int(_as_expr(other), -1))

    def __rtruediv__(self, other):
        return mul(_as_expr(other), pow_int(self, -1))

    def __neg__(self):
        return mul(MINUS_ONE, self)

    def __pow__(self, other):
        if not isinstance(other, int):
            raise ExprError("exponents must be literal integers")
        return pow_int(self, other)


class Num(Expr):
    __slots__ = ("value",)

    def __init__(self, value: NumberLike):
        self._hash = self._key = self._free = None
        self.value = value if isinstance(value, Fraction) else Fraction(value)

    def _fields(self):
        return (self.value,)

    def _make_key(self):
        return (0, self.value)


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self._hash = self._key = self._free = None
        self.name = _check_name(name)

    def _fields(self):
        return (self.name,)

    def _make_key(self):
        return (1, self.name)


class Fn(Expr):
    """Application of a builtin elementary function (ln, exp, sin, cos)."""

    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        self._hash = self._key = self._free = None
        self.name = name
        self.arg = arg

    def _fields(self):
        return (self.name, self.arg)

    def _make_key(self):
        return (2, self.name, _key(self.arg))


class Opq(Expr):
    """Opaque function application with formal derivative slots.

    ``derivs`` is a sorted tuple of 0-based argument slots the symbol has
    been formally differentiated with respect to.
    """

    __slots__ = ("name", "args", "derivs")

    def __init__(self, name: str, args: tuple, derivs: tuple):
        self._hash = self._key = self._free = None
        self.name = name
        self.args = args
        self.derivs = derivs

    def _fields(self):
        return (self.name, self.args, self.derivs)

    def _make_key(self):
        return (3, self.name, self.derivs, tuple(_key(a) for a in self.args))


class Pow(Expr):
    """Integer power with base kind in {Sym, Fn, Opq, Add} and exp not 0/1."""

    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        self._hash = self._key = self._free = None
        self.base = base
        self.exp = exp

    def _fields(self):
        return (self.base, self.exp)

    def _make_key(self):
        return (4, _key(self.base), self.exp)


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple):
        self._hash = self._key = self._free = None
        self.terms = terms

    def _fields(self):
        return (self.terms,)

    def _make_key(self):
        return (5, tuple(_key(t) for t in self.terms))


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple):
        self._hash = self._key = self._free = None
        self.factors = factors

    def _fields(self):
        return (self.factors,)

    def _make_key(self):
        return (6, tuple(_key(f) for f in self.factors))


def _key(e: Expr):
    k = e._key
    if k is None:
        k = e._key = e._make_key()
    return k


def _as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return Num(v)
    raise ExprError(f"cannot coerce {v!r} to an expression")


# ---------------------------------------------------------------------------
# normalizing constructors
# ---------------------------------------------------------------------------

ZERO = Num(0)
ONE = Num(1)
MINUS_ONE = Num(-1)

FUNCTIONS = ("ln", "exp", "sin", "cos")


def num(value: NumberLike) -> Num:
    return Num(value)


def sym(name: str) -> Sym:
    return Sym(name)


def syms(names: str) -> tuple:
    """Split a whitespace/comma separated string into symbols."""
    return tuple(Sym(n) for n in names.replace(",", " ").split())


def _split_coeff(t: Expr):
    """Split a non-Num canonical term into (rational coefficient, monic part)."""
    if isinstance(t, Mul) and isinstance(t.factors[0], Num):
        rest = t.factors[1:]
        m = rest[0] if len(rest) == 1 else Mul(rest)
        return t.factors[0].value, m
    return Fraction(1), t


def _scale_monic(m: Expr, c: Fraction) -> Expr:
    if c == 1:
        return m
    if isinstance(m, Mul):
        return Mul((Num(c),) + m.factors)
    if isinstance(m, Add):
        return mul(Num(c), m)
    return Mul((Num(c), m))


def _rat_gcd(a: Fraction, b: Fraction) -> Fraction:
    from math import gcd

    num = gcd(a.numerator, b.numerator)
    den = (a.denominator * b.denominator) // gcd(a.denominator, b.denominator)
    return Fraction(num, den)


def _add_content(a: "Add"):
    """Rational content of a sum and its primitive part.

    The content is the gcd of the term coefficients, signed like the first
    term; sums inside products and powers are kept primitive so that the
    normal form is independent of association order.
    """
    coeffs = []
    for t in a.terms:
        coeffs.append(t.value if isinstance(t, Num) else _split_coeff(t)[0])
    g = abs(coeffs[0])
    for c in coeffs[1:]:
        g = _rat_gcd(g, abs(c))
    if coeffs[0] < 0:
        g = -g
    if g == 1:
        return Fraction(1), a
    inv = Num(1 / g)
    prim = add(*(mul(inv, t) for t in a.terms))
    return g, prim


def add(*items) -> Expr:
    const = Fraction(0)
    table: dict = {}

    def feed(ts):
        nonlocal const
        for t in ts:
            t = _as_expr(t)
            if isinstance(t, Num):
                const += t.value
            elif isinstance(t, Add):
                feed(t.terms)
            else:
                c, m = _split_coeff(t)
                table[m] = table.get(m, Fraction(0)) + c

    feed(items)
    terms = []
    for m in sorted(table, key=_key):
        c = table[m]
        if c != 0:
            terms.append(_scale_monic(m, c))
    if const != 0:
        terms.insert(0, Num(const))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(tuple(terms))


def mul(*items) -> Expr:
    coeff = Fraction(1)
    powers: dict = {}

    def feed(fs):
        nonlocal coeff
        for f in fs:
            f = _as_expr(f)
            if isinstance(f, Num):
                coeff *= f.value
            elif isinstance(f, Mul):
                feed(f.factors)
            elif isinstance(f, Pow):
                base, e = f.base, f.exp
                if isinstance(base, Add):
                    c, base = _add_content(base)
                    coeff *= c**e
                powers[base] = powers.get(base, 0) + e
            else:
                if isinstance(f, Add):
                    c, f = _add_content(f)
                    coeff *= c
                powers[f] = powers.get(f, 0) + 1

    feed(items)
    if coeff == 0:
        return ZERO
    factors = []
    for base in sorted(powers, key=_key):
        e = powers[base]
        if e == 0:
            continue
        factors.append(base if e == 1 else Pow(base, e))
    if not factors:
        return Num(coeff)
    if coeff == 1:
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))
    if len(factors) == 1 and isinstance(factors[0], Add):
        # rational multiples of sums distribute, so c*(s) meets the flattened s
        c = Num(coeff)
        return add(*(mul(c, t) for t in factors[0].terms))
    return Mul((Num(coeff),) + tuple(factors))


def pow_int(base, exp: int) -> Expr:
    base = _as_expr(base)
    if not isinstance(exp, int):
        raise ExprError("exponents must be literal integers")
    if exp == 0:
        return ONE
    if exp == 1:
        return base
    if isinstance(base, Num):
        if base.value == 0 and exp < 0:
            raise ZeroDivisionError("0 raised to a negative power")
        return Num(base.value**exp)
    if isinstance(base, Mul):
        return mul(*(pow_int(f, exp) for f in base.factors))
    if isinstance(base, Pow):
        return pow_int(base.base, base.exp * exp)
    if isinstance(base, Add):
        c, prim = _add_content(base)
        if c != 1:
            return mul(Num(c**exp), Pow(prim, exp))
    return Pow(base, exp)


def apply_function(name: str, arg) -> Expr:
    arg = _as_expr(arg)
    if name == "ln":
        if arg == ONE:
            return ZERO
    elif name == "exp":
        if arg == ZERO:
            return ONE
    elif name == "sin":
        if arg == ZERO:
            return ZERO
    elif name == "cos":
        if arg == ZERO:
            return ONE
    else:
        raise ExprError(f"unknown function name {name!r}")
    return Fn(name, arg)


def ln(arg) -> Expr:
    return apply_function("ln", arg)


def exp(arg) -> Expr:
    return apply_function("exp", arg)


def sin(arg) -> Expr:
    return apply_function("sin", arg)


def cos(arg) -> Expr:
    return apply_function("cos", arg)


def opaque(name: str, args: Sequence, derivs: Sequence[int] = ()) -> Opq:
    _check_name(name)
    targs = tuple(_as_expr(a) for a in args)
    if not targs:
        raise ExprError("opaque symbols need at least one declared argument")
    td = tuple(sorted(int(j) for j in derivs))
    for j in td:
        if not 0 <= j < len(targs):
            raise ExprError(f"derivative slot {j + 1} out of range for {name}")
    return Opq(name, targs, td)


def normalize(e: Expr) -> Expr:
    """Rebuild a tree through the normalizing constructors (idempotent)."""
    if isinstance(e, (Num, Sym)):
        return e
    if isinstance(e, Fn):
        return apply_function(e.name, normalize(e.arg))
    if isinstance(e, Opq):
        return opaque(e.name, tuple(normalize(a) for a in e.args), e.derivs)
    if isinstance(e, Pow):
        return pow_int(normalize(e.base), e.exp)
    if isinstance(e, Add):
        return add(*(normalize(t) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(normalize(f) for f in e.factors))
    raise ExprError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# structure queries
# ---------------------------------------------------------------------------


def free_symbols(e: Expr) -> frozenset:
    """Names of all symbols in the tree (opaque heads excluded)."""
    f = e._free
    if f is not None:
        return f
    if isinstance(e, Num):
        f = frozenset()
    elif isinstance(e, Sym):
        f = frozenset((e.name,))
    elif isinstance(e, Fn):
        f = free_symbols(e.arg)
    elif isinstance(e, Opq):
        f = frozenset().union(*(free_symbols(a) for a in e.args))
    elif isinstance(e, Pow):
        f = free_symbols(e.base)
    else:
        parts = e.terms if isinstance(e, Add) else e.factors
        f = frozenset().union(*(free_symbols(p) for p in parts))
    e._free = f
    return f


def opaque_atoms(e: Expr) -> set:
    """All distinct opaque applications occurring in the tree."""
    out: set = set()

    def walk(x):
        if isinstance(x, Opq):
            out.add(x)
            for a in x.args:
                walk(a)
        elif isinstance(x, Fn):
            walk(x.arg)
        elif isinstance(x, Pow):
            walk(x.base)
        elif isinstance(x, (Add, Mul)):
            for p in x.terms if isinstance(x, Add) else x.factors:
                walk(p)

    walk(e)
    return out


def subst(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace symbols by expressions; rebuilds in normal form."""
    if isinstance(e, Num):
        return e
    if isinstance(e, Sym):
        v = mapping.get(e.name)
        return e if v is None else _as_expr(v)
    if isinstance(e, Fn):
        return apply_function(e.name, subst(e.arg, mapping))
    if isinstance(e, Opq):
        return opaque(e.name, tuple(subst(a, mapping) for a in e.args), e.derivs)
    if isinstance(e, Pow):
        return pow_int(subst(e.base, mapping), e.exp)
    if isinstance(e, Add):
        return add(*(subst(t, mapping) for t in e.terms))
    return mul(*(subst(f, mapping) for f in e.factors))


# ---------------------------------------------------------------------------
# calculus
# ---------------------------------------------------------------------------


def differentiate(e: Expr, v) -> Expr:
    """Exact partial derivative with respect to the symbol ``v``.

    Opaque applications follow the chain rule through their argument slots:
    d/dx f(x, t) is D(f(x, t), 1), and derivatives with respect to symbols
    that appear in no argument vanish.
    """
    name = v.name if isinstance(v, Sym) else v
    return _diff(e, name)


def _diff(e: Expr, v: str) -> Expr:
    if v not in free_symbols(e):
        return ZERO
    if isinstance(e, Sym):
        return ONE
    if isinstance(e, Add):
        return add(*(_diff(t, v) for t in e.terms))
    if isinstance(e, Mul):
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            df = _diff(f, v)
            if df is ZERO or df == ZERO:
                continue
            parts.append(mul(*fs[:i], df, *fs[i + 1 :]))
        return add(*parts)
    if isinstance(e, Pow):
        return mul(Num(e.exp), pow_int(e.base, e.exp - 1), _diff(e.base, v))
    if isinstance(e, Fn):
        da = _diff(e.arg, v)
        if e.name == "ln":
            outer = pow_int(e.arg, -1)
        elif e.name == "exp":
            outer = e
        elif e.name == "sin":
            outer = apply_function("cos", e.arg)
        else:
            outer = mul(MINUS_ONE, apply_function("sin", e.arg))
        return mul(outer, da)
    # Opq
    parts = []
    for j, a in enumerate(e.args):
        da = _diff(a, v)
        if da == ZERO:
            continue
        head = Opq(e.name, e.args, tuple(sorted(e.derivs + (j,))))
        parts.append(mul(head, da))
    return add(*parts)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def opaque_key(name: str, derivs: Sequence[int] = ()) -> str:
    """Binding key for an opaque head: ``f`` or ``D(f, 1, 2)`` for slots."""
    if not derivs:
        return name
    return f"D({name}, {', '.join(str(j + 1) for j in derivs)})"


def evaluate(e: Expr, bindings: Mapping[str, object]):
    """Numerically evaluate the expression.

    ``bindings`` maps symbol names to numbers and opaque heads to callables
    (or numbers); formal derivative heads are looked up under
    :func:`opaque_key`, e.g. ``"D(f, 1)"``.  Rational subtrees evaluated with
    exact bindings stay exact; elementary functions go through floats.
    Every free symbol must be bound, otherwise :class:`UnboundSymbolError`.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Sym):
        try:
            v = bindings[e.name]
        except KeyError:
            raise UnboundSymbolError(e.name) from None
        if callable(v):
            raise ExprError(f"symbol {e.name!r} bound to a callable")
        return v
    if isinstance(e, Add):
        total = Fraction(0)
        for t in e.terms:
            total = total + evaluate(t, bindings)
        return total
    if isinstance(e, Mul):
        total = Fraction(1)
        for f in e.factors:
            total = total * evaluate(f, bindings)
        return total
    if isinstance(e, Pow):
        return evaluate(e.base, bindings) ** e.exp
    if isinstance(e, Fn):
        x = float(evaluate(e.arg, bindings))
        return getattr(math, "log" if e.name == "ln" else e.name)(x)
    # Opq
    key = opaque_key(e.name, e.derivs)
    try:
        v = bindings[key]
    except KeyError:
        raise UnboundSymbolError(key) from None
    if callable(v):
        return v(*(float(evaluate(a, bindings)) for a in e.args))
    return v


# ---------------------------------------------------------------------------
# on-demand rewrites used by the zero test
# ---------------------------------------------------------------------------


def expand(e: Expr) -> Expr:
    """Distribute products over sums and multiply out positive powers of sums.

    Negative powers (denominators) are left alone; see :func:`together`.
    """
    if isinstance(e, (Num, Sym)):
        return e
    if isinstance(e, Fn):
        return apply_function(e.name, expand(e.arg))
    if isinstance(e, Opq):
        return opaque(e.name, tuple(expand(a) for a in e.args), e.derivs)
    if isinstance(e, Pow):
        b = expand(e.base)
        if isinstance(b, Add) and e.exp > 1:
            acc = [ONE]
            for _ in range(e.exp):
                acc = [mul(a, t) for a in acc for t in b.terms]
            return add(*acc)
        return pow_int(b, e.exp)
    if isinstance(e, Mul):
        acc = [ONE]
        for f in e.factors:
            fe = expand(f)
            parts = fe.terms if isinstance(fe, Add) else (fe,)
            acc = [mul(a, p) for a in acc for p in parts]
        return add(*acc)
    return add(*(expand(t) for t in e.terms))


def together(e: Expr) -> Expr:
    """Combine a sum over the common denominator of its terms' negative powers."""
    if isinstance(e, (Num, Sym)):
        return e
    if isinstance(e, Fn):
        return apply_function(e.name, together(e.arg))
    if isinstance(e, Opq):
        return opaque(e.name, tuple(together(a) for a in e.args), e.derivs)
    if isinstance(e, Pow):
        return pow_int(together(e.base), e.exp)
    if isinstance(e, Mul):
        return mul(*(together(f) for f in e.factors))
    terms = [together(t) for t in e.terms]
    dens: dict = {}
    split = []
    for t in terms:
        numer = []
        den: dict = {}
        for f in t.factors if isinstance(t, Mul) else (t,):
            if isinstance(f, Pow) and f.exp < 0:
                den[f.base] = den.get(f.base, 0) - f.exp
            else:
                numer.append(f)
        split.append((numer, den))
        for b, k in den.items():
            dens[b] = max(dens.get(b, 0), k)
    if not dens:
        return add(*terms)
    numer_terms = []
    for numer, den in split:
        extra = [pow_int(b, dens[b] - den.get(b, 0)) for b in dens]
        numer_terms.append(mul(*numer, *extra))
    numerator = expand(add(*numer_terms))
    return mul(numerator, *(pow_int(b, -k) for b, k in dens.items()))


# ---------------------------------------------------------------------------
# three-valued zero test
# ---------------------------------------------------------------------------


def _opaque_sample(name: str, derivs: tuple, argvals, seed: int) -> float:
    # Deterministic smooth pseudo-function: occurrences of the same opaque
    # head evaluate consistently, distinct heads are independent.
    h = zlib.crc32(f"{name}|{derivs}|{seed}".encode())
    val = 0.37 + (h % 997) / 499.0
    for j, a in enumerate(argvals):
        w = 0.7 + ((h >> (3 * (j % 8))) & 7) * 0.29
        val += math.sin(w * a + 0.41 * (j + 1) + (h % 13))
    return val


def _eval_sampled(e: Expr, env: Mapping[str, float], seed: int) -> float:
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, Sym):
        return env[e.name]
    if isinstance(e, Add):
        return math.fsum(_eval_sampled(t, env, seed) for t in e.terms)
    if isinstance(e, Mul):
        v = 1.0
        for f in e.factors:
            v *= _eval_sampled(f, env, seed)
        return v
    if isinstance(e, Pow):
        return _eval_sampled(e.base, env, seed) ** e.exp
    if isinstance(e, Fn):
        x = _eval_sampled(e.arg, env, seed)
        return getattr(math, "log" if e.name == "ln" else e.name)(x)
    argvals = [_eval_sampled(a, env, seed) for a in e.args]
    return _opaque_sample(e.name, e.derivs, argvals, seed)


def is_identically_zero(e: Expr, policy: Policy | None = None) -> Verdict:
    """Three-valued zero test.

    Zero only when a normal form is structurally 0 (the constructors' form,
    or the on-demand common-denominator/expanded form).  NonZero when seeded
    random evaluation exceeds the policy tolerance at some sample point.
    Unknown otherwise.  Domain errors during sampling cause resampling.
    """
    policy = policy or DEFAULT_POLICY
    if isinstance(e, Num):
        return Verdict.ZERO if e.value == 0 else Verdict.NONZERO
    strong = together(expand(e))
    if isinstance(strong, Num):
        return Verdict.ZERO if strong.value == 0 else Verdict.NONZERO
    text = to_text(e)
    rng = random.Random(zlib.crc32(text.encode()) ^ (policy.seed * 0x9E3779B1))
    names = sorted(free_symbols(e))
    valid = 0
    tries = 0
    while valid < policy.samples and tries < policy.samples + policy.max_resamples:
        tries += 1
        env = {n: rng.uniform(policy.low, policy.high) for n in names}
        try:
            v = _eval_sampled(e, env, policy.seed)
        except (ValueError, ZeroDivisionError, OverflowError):
            continue
        if not math.isfinite(v):
            continue
        valid += 1
        if abs(v) > policy.tol:
            return Verdict.NONZERO
    return Verdict.UNKNOWN


# ---------------------------------------------------------------------------
# canonical printer (inverse of skewforms.parsing.parse_expression)
# ---------------------------------------------------------------------------


def _neg_split(t: Expr):
    if isinstance(t, Num):
        return (t.value < 0, Num(-t.value) if t.value < 0 else t)
    c, m = _split_coeff(t)
    if c < 0:
        return True, _scale_monic(m, -c)
    return False, t


def _p_atom(e: Expr) -> str:
    if isinstance(e, (Num, Sym, Fn, Opq)):
        return _p(e)
    return "(" + _p(e) + ")"


def _p(e: Expr) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Fn):
        return f"{e.name}({_p(e.arg)})"
    if isinstance(e, Opq):
        inner = f"{e.name}({', '.join(_p(a) for a in e.args)})"
        if not e.derivs:
            return inner
        return f"D({inner}, {', '.join(str(j + 1) for j in e.derivs)})"
    if isinstance(e, Pow):
        return f"{_p_atom(e.base)}^{e.exp}"
    if isinstance(e, Mul):
        neg, body = _neg_split(e)
        if neg:
            return "-" + (_p_atom(body) if isinstance(body, Add) else _p(body))
        return "*".join(_p_atom(f) if isinstance(f, Add) else _p(f) for f in e.factors)
    # Add
    out = []
    for i, t in enumerate(e.terms):
        neg, body = _neg_split(t)
        text = _p_atom(body) if isinstance(body, Add) else _p(body)
        if i == 0:
            out.append(("-" if neg else "") + text)
        else:
            out.append((" - " if neg else " + ") + text)
    return "".join(out)


def to_text(e: Expr) -> str:
    """Deterministic canonical rendering; parsing it reproduces the tree."""
    return _p(e)
