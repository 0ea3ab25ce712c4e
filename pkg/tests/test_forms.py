import random

import pytest

from skewforms import expr as ex
from skewforms.forms import (
    Chart,
    Form,
    FormError,
    Pseudostructure,
    commutator,
    exactness_witness_check,
    exterior_derivative,
    form_add,
    form_scale,
    form_to_literal,
    is_closed,
    parse_form,
    pullback,
    wedge,
)
from skewforms.connection import Connection
from skewforms.parsing import parse_expression as P
from skewforms.verdict import Verdict

from tests.genutil import fd_partial, rand_env, rand_form, rand_poly

XY = Chart(("x", "y"))
XYZ = Chart(("x", "y", "z"))


def basis(chart, *names):
    return parse_form(" ^ ".join("d" + n for n in names), chart)


class TestWedge:
    def test_repeated_differential_annihilates(self):
        dx = basis(XY, "x")
        assert wedge(dx, dx).is_structurally_zero

    def test_anticommutes(self):
        dx, dy = basis(XY, "x"), basis(XY, "y")
        assert wedge(dx, dy) == form_scale(wedge(dy, dx), ex.MINUS_ONE)

    def test_bilinear_reordering_sign(self):
        a = parse_form("x dy", XY)
        b = parse_form("y dx", XY)
        assert wedge(a, b) == parse_form("-x*y dx ^ dy", XY)

    def test_chart_mismatch(self):
        with pytest.raises(FormError):
            wedge(basis(XY, "x"), basis(XYZ, "x"))

    def test_degree_overflow_is_zero(self):
        w = wedge(parse_form("dx ^ dy", XY), basis(XY, "x"))
        assert w.is_structurally_zero and w.degree == 3


class TestExteriorDerivative:
    def test_gradient(self):
        assert exterior_derivative(Form.scalar(XY, P("x*y"))) == parse_form("y dx + x dy", XY)

    def test_one_form_coefficients_are_curls(self):
        a = parse_form("a1(x, y) dx + a2(x, y) dy", XY)
        d = exterior_derivative(a)
        expected = ex.add(
            ex.differentiate(P("a2(x, y)"), "x"),
            ex.mul(ex.MINUS_ONE, ex.differentiate(P("a1(x, y)"), "y")),
        )
        assert d.coefficient((0, 1)) == expected

    def test_dd_zero_on_concrete_function(self):
        f = Form.scalar(XY, P("x^2*y + ln(y)"))
        assert exterior_derivative(exterior_derivative(f)).is_structurally_zero


class TestIsClosed:
    def test_exact_pair(self):
        assert is_closed(parse_form("y dx + x dy", XY)) is Verdict.ZERO

    def test_open_pair(self):
        assert is_closed(parse_form("x dy", XY)) is Verdict.NONZERO

    def test_invariant_form_with_generic_hamiltonian(self):
        chart = Chart(("t", "q", "p"))
        theta = parse_form("-H(t, q, p) dt + p dq", chart)
        # the dq^dp component of d(theta) is the constant -1
        d = exterior_derivative(theta)
        assert d.coefficient((1, 2)) == ex.MINUS_ONE
        assert is_closed(theta) is Verdict.NONZERO


class TestExactnessWitness:
    def test_good_witness(self):
        assert (
            exactness_witness_check(parse_form("y dx + x dy", XY), Form.scalar(XY, P("x*y")))
            is Verdict.ZERO
        )

    def test_bad_witness_residual(self):
        a = parse_form("x dy", XY)
        psi = Form.scalar(XY, P("x*y"))
        assert exactness_witness_check(a, psi) is Verdict.NONZERO
        residual = a - exterior_derivative(psi)
        assert residual == parse_form("-y dx", XY)

    def test_entropy_witness(self):
        chart = Chart(("T", "V"))
        a = parse_form("c_v/T dT + R/V dV", chart)
        psi = Form.scalar(chart, P("c_v*ln(T) + R*ln(V)"))
        assert exactness_witness_check(a, psi) is Verdict.ZERO

    def test_degree_mismatch(self):
        with pytest.raises(FormError):
            exactness_witness_check(parse_form("x dy", XY), parse_form("x dy", XY))


class TestCommutator:
    def test_exact_form_vanishes(self):
        df = exterior_derivative(Form.scalar(XY, P("x^2*y")))
        rep = commutator(df)
        assert rep.aggregate is Verdict.ZERO

    def test_symmetric_connection_contributes_nothing(self):
        rng = random.Random("sym-conn")
        gamma = [[[ex.ZERO] * 2 for _ in range(2)] for _ in range(2)]
        for r in range(2):
            g = rand_poly(rng, XY.names)
            gamma[r][0][1] = gamma[r][1][0] = g
            gamma[r][0][0] = rand_poly(rng, XY.names)
        conn = Connection(XY, tuple(tuple(tuple(r) for r in b) for b in gamma))
        rep = commutator(parse_form("x*y dx + y^2 dy", XY), conn)
        for e in rep.entries:
            assert e.connection_part == ex.ZERO

    def test_hand_evaluated_connection_term(self):
        conn = Connection.from_entries(XY, [(0, 0, 1, ex.ONE)])  # upper 1, lower (1,2)
        rep = commutator(parse_form("x dy", XY), conn)
        assert rep.entry(0, 1).total == ex.ONE
        rep2 = commutator(parse_form("y dx + x dy", XY), conn)
        assert rep2.entry(0, 1).total == P("-y")

    def test_antisymmetry_accessor(self):
        rep = commutator(parse_form("x dy", XY))
        assert rep.component(1, 0) == ex.mul(ex.MINUS_ONE, rep.component(0, 1))

    def test_requires_degree_one(self):
        with pytest.raises(FormError):
            commutator(parse_form("dx ^ dy", XY))


class TestPullback:
    def test_area_element_degenerates_on_line(self):
        ps = Pseudostructure(("t",), {"x": P("t"), "y": P("t")})
        assert pullback(parse_form("dx ^ dy", XY), ps).is_structurally_zero

    def test_characteristic_line_momentum_form(self):
        chart = Chart(("x", "p"))
        ps = Pseudostructure(("t",), {"x": P("x0 + p0*t"), "p": P("p0")})
        pb = pullback(parse_form("p dx", chart), ps)
        assert pb == parse_form("p0^2 dt", Chart(("t",)))
        assert is_closed(pb) is Verdict.ZERO

    def test_missing_coordinate(self):
        ps = Pseudostructure(("t",), {"x": P("t")})
        with pytest.raises(FormError, match="missing"):
            pullback(parse_form("x dy", XY), ps)

    def test_constraint_validation(self):
        with pytest.raises(FormError, match="constraint"):
            Pseudostructure(("t",), {"x": P("t"), "y": P("t")}, constraints=(P("x - 2*y"),))
        Pseudostructure(("t",), {"x": P("t"), "y": P("t")}, constraints=(P("x - y"),))


class TestFormLiterals:
    @pytest.mark.parametrize(
        "text",
        [
            "c_v dT + R*T/V dV",
            "dT ^ dV",
            "-dT",
            "(c_v + R) dT",
            "0",
            "T^2*V dT ^ dV",
            "x0 + T*V",
        ],
    )
    def test_roundtrip(self, text):
        chart = Chart(("T", "V"))
        w = parse_form(text, chart)
        assert parse_form(form_to_literal(w), chart) == w

    def test_written_order_contributes_sign(self):
        assert parse_form("dy ^ dx", XY) == form_scale(parse_form("dx ^ dy", XY), ex.MINUS_ONE)

    def test_mixed_degrees_rejected(self):
        with pytest.raises(Exception, match="mixed degrees"):
            parse_form("x + y dx", XY)

    def test_zero_form_of_positive_degree_roundtrips(self):
        z = Form.zero(XY, 2)
        assert parse_form(form_to_literal(z), XY) == z


def seeded_form(label, chart, degree, rng=None):
    rng = rng or random.Random(label)
    return rand_form(rng, chart, degree)


class TestAlgebraicLaws:
    def test_graded_anticommutativity(self):
        rng = random.Random("anticomm")
        for _ in range(150):
            n = rng.randint(2, 5)
            chart = Chart(tuple("abcde"[:n]))
            p = rng.randint(0, min(3, n))
            q = rng.randint(0, min(3, n))
            a = rand_form(rng, chart, p)
            b = rand_form(rng, chart, q)
            sign = ex.num((-1) ** (p * q))
            assert wedge(a, b) == form_scale(wedge(b, a), sign)

    def test_wedge_associativity(self):
        rng = random.Random("assoc")
        for _ in range(150):
            n = rng.randint(2, 5)
            chart = Chart(tuple("abcde"[:n]))
            forms = [rand_form(rng, chart, rng.randint(0, 2)) for _ in range(3)]
            a, b, c = forms
            assert wedge(wedge(a, b), c) == wedge(a, wedge(b, c))

    def test_leibniz(self):
        rng = random.Random("leibniz")
        for _ in range(150):
            n = rng.randint(2, 4)
            chart = Chart(tuple("abcd"[:n]))
            p = rng.randint(0, 2)
            a = rand_form(rng, chart, p)
            b = rand_form(rng, chart, rng.randint(0, 2))
            lhs = exterior_derivative(wedge(a, b))
            rhs = form_add(
                wedge(exterior_derivative(a), b),
                form_scale(wedge(a, exterior_derivative(b)), ex.num((-1) ** p)),
            )
            assert lhs == rhs

    def test_nilpotency(self):
        rng = random.Random("ddzero")
        for _ in range(200):
            n = rng.randint(2, 5)
            chart = Chart(tuple("abcde"[:n]))
            a = rand_form(rng, chart, rng.randint(0, max(0, n - 2)))
            assert exterior_derivative(exterior_derivative(a)).is_structurally_zero

    def test_flat_commutator_equals_derivative_table(self):
        rng = random.Random("flatk")
        for _ in range(100):
            n = rng.randint(2, 4)
            chart = Chart(tuple("abcd"[:n]))
            a = rand_form(rng, chart, 1)
            rep = commutator(a)
            d = exterior_derivative(a)
            for e in rep.entries:
                assert e.total == d.coefficient((e.alpha, e.beta))
                assert e.connection_part == ex.ZERO

    def test_commutator_against_finite_differences(self):
        rng = random.Random("fdk")
        for _ in range(30):
            n = rng.randint(2, 4)
            chart = Chart(tuple("abcd"[:n]))
            a = rand_form(rng, chart, 1, max_terms=n)
            rep = commutator(a)
            for _ in range(5):
                env = rand_env(rng, chart.names)
                for e in rep.entries:
                    ca = a.coefficient((e.alpha,))
                    cb = a.coefficient((e.beta,))
                    fd = fd_partial(cb, chart.names[e.alpha], env) - fd_partial(
                        ca, chart.names[e.beta], env
                    )
                    sym_val = float(ex.evaluate(e.total, env))
                    assert sym_val == pytest.approx(fd, rel=1e-5, abs=1e-5)

    def test_pullback_commutes_with_d(self):
        rng = random.Random("pbd")
        for _ in range(60):
            chart = Chart(("x", "y", "z"))
            nparams = rng.randint(1, 3)
            params = tuple("uvw"[:nparams])
            mapping = {
                name: rand_poly(rng, params, max_terms=2, max_total_degree=2)
                for name in chart.names
            }
            ps = Pseudostructure(params, mapping)
            a = rand_form(rng, chart, rng.randint(0, 2))
            lhs = exterior_derivative(pullback(a, ps))
            rhs = pullback(exterior_derivative(a), ps)
            # both sides expand to the canonical polynomial normal form
            lhs_n = Form(lhs.chart, lhs.degree, {i: ex.expand(c) for i, c in lhs.terms})
            rhs_n = Form(rhs.chart, rhs.degree, {i: ex.expand(c) for i, c in rhs.terms})
            assert lhs_n == rhs_n
