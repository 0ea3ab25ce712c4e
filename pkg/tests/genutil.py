"""Shared random generators and numeric oracles for the test suite.

Everything is driven by explicit ``random.Random`` instances so counts and
outcomes are pinned; the finite-difference helpers are the independent
oracles for derivative-shaped claims.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

from skewforms import expr as ex
from skewforms.forms import Chart, Form


def rand_rational(rng: random.Random) -> Fraction:
    num = rng.choice([-3, -2, -1, 1, 2, 3])
    den = rng.choice([1, 1, 1, 2, 3])
    return Fraction(num, den)


def rand_monomial(rng: random.Random, names, max_total_degree=3) -> ex.Expr:
    total = rng.randint(0, max_total_degree)
    factors = [ex.num(rand_rational(rng))]
    for _ in range(total):
        factors.append(ex.sym(rng.choice(names)))
    return ex.mul(*factors)


def rand_poly(rng: random.Random, names, max_terms=2, max_total_degree=3) -> ex.Expr:
    terms = [rand_monomial(rng, names, max_total_degree) for _ in range(rng.randint(1, max_terms))]
    return ex.add(*terms)


def rand_smooth(rng: random.Random, names, depth=2) -> ex.Expr:
    """Polynomial cores with occasional ln/exp/sin/cos wrappers (no opaques)."""
    if depth == 0 or rng.random() < 0.5:
        return rand_poly(rng, names)
    kind = rng.choice(["fn", "mul", "pow"])
    if kind == "fn":
        inner = rand_poly(rng, names, max_terms=2, max_total_degree=2)
        name = rng.choice(("sin", "cos", "exp"))
        return ex.apply_function(name, inner)
    if kind == "pow":
        return ex.pow_int(rand_poly(rng, names, max_terms=2, max_total_degree=1), rng.choice([2, 3]))
    return ex.mul(rand_smooth(rng, names, depth - 1), rand_smooth(rng, names, depth - 1))


def rand_form(rng: random.Random, chart: Chart, degree: int, max_terms=2, coeff_gen=None) -> Form:
    coeff_gen = coeff_gen or (lambda r: rand_poly(r, chart.names))
    all_indices = list(combinations(range(chart.dim), degree))
    rng.shuffle(all_indices)
    picked = all_indices[: rng.randint(1, min(max_terms, len(all_indices)))]
    return Form(chart, degree, {idx: coeff_gen(rng) for idx in picked})


def rand_connection_table(rng: random.Random, chart: Chart, symmetric=False):
    n = chart.dim
    g = [[[ex.ZERO] * n for _ in range(n)] for _ in range(n)]
    for r in range(n):
        for m in range(n):
            for v in range(n):
                if rng.random() < 0.4:
                    g[r][m][v] = rand_poly(rng, chart.names, max_terms=1, max_total_degree=2)
    if symmetric:
        for r in range(n):
            for m in range(n):
                for v in range(m + 1, n):
                    g[r][v][m] = g[r][m][v]
    return tuple(tuple(tuple(row) for row in block) for block in g)


def fd_partial(e: ex.Expr, var: str, env: dict, h: float = 1e-6) -> float:
    hi = dict(env)
    lo = dict(env)
    hi[var] = env[var] + h
    lo[var] = env[var] - h
    return (float(ex.evaluate(e, hi)) - float(ex.evaluate(e, lo))) / (2 * h)


def rand_env(rng: random.Random, names, low=0.8, high=2.2) -> dict:
    return {n: rng.uniform(low, high) for n in names}


def cofactor_det(rows):
    """Recursive cofactor expansion: the independent determinant oracle."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = ex.ZERO
    for j in range(n):
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        sign = ex.num(-1 if j % 2 else 1)
        total = ex.add(total, ex.mul(sign, rows[0][j], cofactor_det(minor)))
    return total
