"""Affine connection data and its derived commutator tables.

The connection coefficients enter a 1-form's commutator only through their
antisymmetrized lower indices; here they also yield torsion (the
antisymmetrization itself), the curvature table, covariant derivatives of
covector coefficients, and a coarse classification of the chart geometry.

Index convention: ``gamma[rho][mu][nu]`` is the coefficient with upper index
rho and lower indices (mu, nu), in chart-coordinate positions.  Curvature is
``R[mu][nu][rho][sigma] = d_rho G^mu_(nu sigma) - d_sigma G^mu_(nu rho)
+ G^mu_(lam rho) G^lam_(nu sigma) - G^mu_(lam sigma) G^lam_(nu rho)``,
antisymmetric in its last index pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import matrices
from .expr import (
    Expr,
    ExprError,
    MINUS_ONE,
    ZERO,
    add,
    differentiate,
    is_identically_zero,
    mul,
    num,
    pow_int,
)
from .forms import Chart, Form, FormError
from .verdict import DEFAULT_POLICY, Policy, Verdict, combine


def _as_table3(chart: Chart, gamma) -> tuple:
    n = chart.dim
    rows = tuple(tuple(tuple(x for x in mu_row) for mu_row in rho_block) for rho_block in gamma)
    if len(rows) != n or any(len(b) != n or any(len(r) != n for r in b) for b in rows):
        raise FormError(f"connection table must be {n}x{n}x{n}")
    return rows


@dataclass(frozen=True)
class Connection:
    """Connection coefficients on a chart, with an optional symmetric metric."""

    chart: Chart
    gamma: tuple
    metric: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "gamma", _as_table3(self.chart, self.gamma))
        if self.metric is not None:
            n = self.chart.dim
            g = tuple(tuple(row) for row in self.metric)
            if len(g) != n or any(len(r) != n for r in g):
                raise FormError(f"metric must be {n}x{n}")
            for i in range(n):
                for j in range(i + 1, n):
                    if g[i][j] != g[j][i]:
                        raise FormError("metric table must be structurally symmetric")
            object.__setattr__(self, "metric", g)

    @property
    def dimension(self) -> int:
        return self.chart.dim

    @classmethod
    def zero(cls, chart: Chart) -> "Connection":
        n = chart.dim
        z = tuple(tuple((ZERO,) * n for _ in range(n)) for _ in range(n))
        return cls(chart, z)

    @classmethod
    def from_entries(cls, chart: Chart, entries, metric_entries=None) -> "Connection":
        """Sparse build: entries are (rho, mu, nu, expr) with 0-based positions."""
        n = chart.dim
        g = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
        for rho, mu, nu, e in entries:
            g[rho][mu][nu] = add(g[rho][mu][nu], e)
        metric = None
        if metric_entries is not None:
            m = [[ZERO] * n for _ in range(n)]
            for mu, nu, e in metric_entries:
                m[mu][nu] = e
                m[nu][mu] = e
            metric = tuple(tuple(r) for r in m)
        return cls(chart, tuple(tuple(tuple(r) for r in b) for b in g), metric)


def torsion(c: Connection) -> tuple:
    """Antisymmetrized connection, T[rho][mu][nu] = G[rho][mu][nu] - G[rho][nu][mu]."""
    n = c.dimension
    g = c.gamma
    return tuple(
        tuple(
            tuple(add(g[r][m][v], mul(MINUS_ONE, g[r][v][m])) for v in range(n))
            for m in range(n)
        )
        for r in range(n)
    )


def curvature(c: Connection) -> tuple:
    """R[mu][nu][rho][sigma] in the convention documented in the module header."""
    n = c.dimension
    g = c.gamma
    names = c.chart.names
    out = []
    for mu in range(n):
        block_mu = []
        for nu in range(n):
            block_nu = []
            for rho in range(n):
                row = []
                for sg in range(n):
                    terms = [
                        differentiate(g[mu][nu][sg], names[rho]),
                        mul(MINUS_ONE, differentiate(g[mu][nu][rho], names[sg])),
                    ]
                    for lam in range(n):
                        terms.append(mul(g[mu][lam][rho], g[lam][nu][sg]))
                        terms.append(mul(MINUS_ONE, g[mu][lam][sg], g[lam][nu][rho]))
                    row.append(add(*terms))
                block_nu.append(tuple(row))
            block_mu.append(tuple(block_nu))
        out.append(tuple(block_mu))
    return tuple(out)


def covariant_derivative_covector(a, c: Connection, sign: str = "+") -> tuple:
    """Table D[beta][alpha] of covariant derivatives of covector coefficients.

    The default is the raw-coefficient rule ``d a_beta / d x^alpha
    + G^sigma_(beta alpha) a_sigma``; pass ``sign="-"`` for the conventional
    covector rule.  The antisymmetrization in (beta, alpha) is the same
    either way and equals the 1-form commutator's connection-aware table.
    """
    if sign not in ("+", "-"):
        raise ExprError("sign must be '+' or '-'")
    n = c.dimension
    names = c.chart.names
    if isinstance(a, Form):
        if a.degree != 1 or a.chart != c.chart:
            raise FormError("expected a 1-form on the connection chart")
        coeffs = [a.coefficient((i,)) for i in range(n)]
    else:
        coeffs = list(a)
        if len(coeffs) != n:
            raise FormError(f"expected {n} covector coefficients")
    s = 1 if sign == "+" else -1
    out = []
    for be in range(n):
        row = []
        for al in range(n):
            terms = [differentiate(coeffs[be], names[al])]
            for sg in range(n):
                terms.append(mul(num(s), c.gamma[sg][be][al], coeffs[sg]))
            row.append(add(*terms))
        out.append(tuple(row))
    return tuple(out)


def _table_verdict(table, policy: Policy) -> Verdict:
    def flat(t):
        if isinstance(t, tuple):
            for x in t:
                yield from flat(x)
        else:
            yield t

    return combine(is_identically_zero(e, policy) for e in flat(table))


@dataclass(frozen=True)
class ClassifyReport:
    kind: str  # "euclidean-like" | "torsion-only" | "curved" | "indeterminate"
    torsion_verdict: Verdict
    curvature_verdict: Verdict


def classify(c: Connection, policy: Policy | None = None) -> ClassifyReport:
    """Coarse geometry: flat and torsion-free, flat with torsion, or curved."""
    policy = policy or DEFAULT_POLICY
    tv = _table_verdict(torsion(c), policy)
    rv = _table_verdict(curvature(c), policy)
    if rv is Verdict.NONZERO:
        kind = "curved"
    elif rv is Verdict.UNKNOWN or tv is Verdict.UNKNOWN:
        kind = "indeterminate"
    elif tv is Verdict.NONZERO:
        kind = "torsion-only"
    else:
        kind = "euclidean-like"
    return ClassifyReport(kind=kind, torsion_verdict=tv, curvature_verdict=rv)


def christoffel_from_metric(chart: Chart, metric) -> Connection:
    """Symmetric connection of a metric: exact inverse via the adjugate."""
    n = chart.dim
    g = [list(row) for row in metric]
    ginv = matrices.inverse(g)
    names = chart.names
    half = pow_int(num(2), -1)
    gamma = []
    for rho in range(n):
        block = []
        for mu in range(n):
            row = []
            for nu in range(n):
                terms = []
                for lam in range(n):
                    inner = add(
                        differentiate(g[lam][nu], names[mu]),
                        differentiate(g[lam][mu], names[nu]),
                        mul(MINUS_ONE, differentiate(g[mu][nu], names[lam])),
                    )
                    terms.append(mul(half, ginv[rho][lam], inner))
                row.append(add(*terms))
            block.append(tuple(row))
        gamma.append(tuple(block))
    return Connection(chart, tuple(gamma), tuple(tuple(r) for r in g))
