import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import hermite_e

from cubeharmonic.errors import CapacityError, ConfigurationError, ParameterError, ParseError, PreconditionError
from cubeharmonic.hermite import (
    HermiteExpansion,
    QuadratureRule,
    a_k_coefficients_check,
    derivative_multisets,
    format_expansion,
    gaussian_talagrand_report,
    grad_moment,
    gradient_inner,
    hermite_partial,
    hermite_table,
    inner,
    inverse_poincare_check,
    nelson_check,
    ou_generator,
    ou_integral,
    ou_semigroup,
    parse_expansion,
    remainder_time_integral,
    variance_taylor_check,
)

X1 = HermiteExpansion.from_monomials({(1,): 1.0}, 1)
X1X2 = HermiteExpansion.from_monomials({(1, 1): 1.0}, 2)
X1SQ = HermiteExpansion.from_monomials({(2,): 1.0}, 1)

expansions = st.builds(
    lambda n, d, seed: HermiteExpansion.random(n, d, seed=seed),
    st.integers(1, 3), st.integers(0, 5), st.integers(0, 2**32 - 1),
)


def tuple_grad_moment(f, k):
    """Oracle: sum over ordered k-tuples of (mean of the iterated partial)^2."""
    total = 0.0
    for tup in itertools.product(range(1, f.n + 1), repeat=k):
        g = f
        for i in tup:
            g = hermite_partial(g, i)
        total += g.mean() ** 2
    return total


def test_hermite_table_matches_numpy():
    x = np.linspace(-3, 3, 11)
    tab = hermite_table(6, x)
    for k in range(7):
        coef = np.zeros(k + 1)
        coef[k] = 1.0
        assert np.allclose(tab[k], hermite_e.hermeval(x, coef) / math.sqrt(math.factorial(k)))


def test_from_monomials_square():
    assert X1SQ.to_dict() == {(0,): 1.0, (2,): pytest.approx(math.sqrt(2))}
    assert X1SQ.variance() == pytest.approx(2.0)
    assert X1X2.to_dict() == {(1, 1): 1.0}


def test_evaluate_and_grid_agree_with_monomials():
    f = HermiteExpansion.from_monomials({(3, 0): 2.0, (1, 2): -1.0, (0, 0): 0.5}, 2)
    pts = np.random.default_rng(0).standard_normal((7, 2))
    direct = 2 * pts[:, 0] ** 3 - pts[:, 0] * pts[:, 1] ** 2 + 0.5
    assert np.allclose(f.evaluate(pts), direct)
    nodes = np.array([-1.0, 0.5, 2.0])
    grid = f.evaluate_grid(nodes)
    xx, yy = np.meshgrid(nodes, nodes, indexing="ij")
    assert np.allclose(grid, 2 * xx**3 - xx * yy**2 + 0.5)


def test_capacity_and_validation():
    with pytest.raises(CapacityError):
        HermiteExpansion.zeros(7, 2)
    with pytest.raises(CapacityError):
        HermiteExpansion.zeros(2, 9)
    with pytest.raises(PreconditionError):
        HermiteExpansion.from_dict({(2, 2): 1.0}, 2, 3)
    with pytest.raises(PreconditionError):
        HermiteExpansion(np.ones((3, 3)), 2)


def test_partial_ladder_rule():
    h3 = HermiteExpansion.from_dict({(3,): 1.0}, 1, 3)
    d = hermite_partial(h3, 1)
    assert d.to_dict() == {(2,): pytest.approx(math.sqrt(3))}
    d3 = hermite_partial(hermite_partial(d, 1), 1)
    assert d3.to_dict() == {(0,): pytest.approx(math.sqrt(6))}
    with pytest.raises(IndexError):
        hermite_partial(h3, 2)


def test_partial_matches_numerical_derivative():
    f = HermiteExpansion.random(2, 4, seed=5)
    pts = np.random.default_rng(1).standard_normal((5, 2))
    h = 1e-5
    num = (f.evaluate(pts + [h, 0]) - f.evaluate(pts - [h, 0])) / (2 * h)
    assert np.allclose(hermite_partial(f, 1).evaluate(pts), num, atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(expansions, st.integers(1, 4))
def test_grad_moment_matches_tuple_oracle(f, k):
    assert grad_moment(f, k) == pytest.approx(tuple_grad_moment(f, k), rel=1e-12, abs=1e-12)


def test_grad_moment_errors_and_examples():
    with pytest.raises(ParameterError):
        grad_moment(X1, 0)
    assert grad_moment(X1SQ, 2) == pytest.approx(4.0)
    assert grad_moment(X1SQ, 3) == 0.0


def test_derivative_multisets_multiplicities():
    f = HermiteExpansion.random(3, 4, seed=2)
    items = list(derivative_multisets(f, 3))
    assert sum(m for _, m, _ in items) == 27
    assert len(items) == math.comb(3 + 3 - 1, 3)


def test_ou_semigroup_and_laws():
    f = HermiteExpansion.random(2, 5, seed=1)
    g = HermiteExpansion.random(2, 5, seed=2)
    assert np.allclose(ou_semigroup(ou_semigroup(f, 0.3), 0.4).coeffs, ou_semigroup(f, 0.7).coeffs)
    assert ou_semigroup(f, 2.0).mean() == f.mean()
    assert -inner(f, ou_generator(g)) == pytest.approx(gradient_inner(f, g), rel=1e-12)
    for i in (1, 2):
        lhs = hermite_partial(ou_semigroup(f, 0.5), i).coeffs
        rhs = math.exp(-0.5) * ou_semigroup(hermite_partial(f, i), 0.5).coeffs
        assert np.allclose(lhs, rhs)
    with pytest.raises(ParameterError):
        ou_semigroup(f, -0.1)


@pytest.mark.parametrize("n", [1, 2])
def test_ou_quadrature_form_matches_spectral(n):
    f = HermiteExpansion.random(n, 6, seed=n)
    pts = np.random.default_rng(n).standard_normal((6, n)) * 1.5
    for t in (0.1, 0.5, 1.0, 2.0):
        assert np.max(np.abs(ou_integral(f, t, pts) - ou_semigroup(f, t).evaluate(pts))) <= 1e-8


def test_ou_quadrature_capacity():
    with pytest.raises(CapacityError):
        ou_integral(HermiteExpansion.random(3, 2), 0.1, np.zeros((1, 3)))


def test_remainder_time_integral():
    # int e^{-2t}(1-e^{-2t}) dt = 1/2 - 1/4
    assert remainder_time_integral(1, 0) == pytest.approx(0.25)
    from scipy import integrate

    for p in range(4):
        for m in range(4):
            val, _ = integrate.quad(lambda t: math.exp(-2 * t) * (1 - math.exp(-2 * t)) ** p * math.exp(-2 * t * m), 0, np.inf)
            assert float(remainder_time_integral(p, m)) == pytest.approx(val, rel=1e-10)


def test_taylor_worked_examples():
    r = variance_taylor_check(X1, 1)
    assert (r.variance, r.moments[0], r.remainder) == (pytest.approx(1.0), pytest.approx(1.0), 0.0)
    r = variance_taylor_check(X1X2, 1)
    assert r.remainder == pytest.approx(1.0, abs=1e-15)
    assert r.moments == (0.0,)
    r = variance_taylor_check(X1SQ, 2)
    assert r.moments[1] == pytest.approx(2.0)
    assert r.variance == pytest.approx(2.0)
    with pytest.raises(ParameterError):
        variance_taylor_check(X1, 0)


@settings(max_examples=40, deadline=None)
@given(expansions, st.integers(1, 4))
def test_taylor_identity_property(f, p):
    rep = variance_taylor_check(f, p)
    assert rep.residual <= 1e-9 * max(1.0, rep.variance)


def test_a_k_coefficients():
    rep = a_k_coefficients_check(10)
    assert rep.worst <= 1e-8
    assert rep.scalars[0] == pytest.approx(1.0)
    assert rep.scalars[1] == pytest.approx(1.0)
    assert rep.scalars[3] == pytest.approx(1 / 6)
    assert rep.time_integrals[2] == pytest.approx(1 / 6)
    with pytest.raises(ParameterError):
        a_k_coefficients_check(11)


def test_a3_recursion_at_half():
    rep = a_k_coefficients_check(3, grid=[0.5])
    assert rep.recursion_residual <= 1e-8


@settings(max_examples=40, deadline=None)
@given(expansions)
def test_inverse_poincare(f):
    c = inverse_poincare_check(f)
    assert c.holds
    if c.params["affine"]:
        assert c.lhs == pytest.approx(c.rhs, abs=1e-12)


def test_inverse_poincare_examples():
    c = inverse_poincare_check(X1)
    assert (c.lhs, c.rhs) == (pytest.approx(1.0), pytest.approx(1.0)) and c.params["affine"]
    c = inverse_poincare_check(X1X2)
    assert (c.lhs, c.rhs) == (0.0, pytest.approx(1.0)) and not c.params["affine"]


def test_quadrature_rule():
    rule = QuadratureRule.build(1, 10)
    assert rule.weights.sum() == pytest.approx(1.0)
    assert rule.monomial_error(rule.exact_degree) <= 1e-12
    assert rule.monomial_error(rule.exact_degree + 1) > 1e-6
    with pytest.raises(ParameterError):
        QuadratureRule.build(1, 41)


def test_quadrature_norms():
    rule = QuadratureRule.build(1, 40)
    assert rule.lp_norm(X1, 2) == pytest.approx(1.0)
    assert rule.lp_norm(X1, 4) == pytest.approx(3 ** 0.25)
    # the kink of |x| leaves the plain tensor rule about 1% off; the line-exact
    # L1 integrates each line between its roots in closed form
    assert abs(rule.lp_norm(X1, 1) - math.sqrt(2 / math.pi)) > 1e-3
    assert rule.l1_norm(X1) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)


def test_line_exact_l1_oracles():
    # E|x^2 - 1| = 4 phi(1) exactly; E|x1 x2| = 2/pi
    sq = HermiteExpansion.from_dict({(2,): math.sqrt(2)}, 1, 2)
    assert QuadratureRule.build(1, 8).l1_norm(sq) == pytest.approx(4 * math.exp(-0.5) / math.sqrt(2 * math.pi), rel=1e-13)
    rough = QuadratureRule.build(2, 40).l1_norm(X1X2)
    assert rough == pytest.approx(2 / math.pi, rel=2e-2)
    # a generic degree-7 polynomial against a fine trapezoid rule
    f = HermiteExpansion.random(1, 7, seed=4)
    xs = np.linspace(-12, 12, 400_001)
    dens = np.exp(-xs**2 / 2) / math.sqrt(2 * math.pi)
    trap = np.trapezoid(np.abs(f.evaluate(xs[:, None])) * dens, xs)
    assert QuadratureRule.build(1, 8).l1_norm(f) == pytest.approx(trap, rel=1e-8)


def test_gaussian_talagrand_examples():
    r = gaussian_talagrand_report(X1X2, 1)
    assert (r.lhs, r.rhs, r.ratio) == (pytest.approx(1.0), pytest.approx(2.0), pytest.approx(0.5))
    assert r.terms == {(1, 2): pytest.approx(2.0)}
    r = gaussian_talagrand_report(X1, 1)
    assert r.lhs == pytest.approx(0.0) and r.rhs == 0.0 and r.degenerate
    h3 = HermiteExpansion.from_dict({(3,): 1.0}, 1, 3)
    r = gaussian_talagrand_report(h3, 2)
    assert r.lhs == pytest.approx(1.0)
    assert r.rhs == pytest.approx(6.0)


def test_gaussian_talagrand_under_resolved_rule():
    f = HermiteExpansion.random(1, 6)
    with pytest.raises(ConfigurationError):
        gaussian_talagrand_report(f, 1, QuadratureRule.build(1, 4))
    with pytest.raises(ConfigurationError):
        gaussian_talagrand_report(f, 1, QuadratureRule.build(2, 10))


def test_gaussian_talagrand_error_estimate_is_zero_in_one_dimension():
    r = gaussian_talagrand_report(HermiteExpansion.random(1, 6, seed=8), 1)
    assert r.params["quadrature_error"] <= 1e-12


@settings(max_examples=15, deadline=None)
@given(expansions, st.integers(1, 2))
def test_gaussian_talagrand_terms_sum(f, p):
    r = gaussian_talagrand_report(f, p)
    assert math.fsum(r.terms.values()) == pytest.approx(r.rhs, abs=1e-10)
    assert r.rhs >= 0


def test_nelson_spot_checks():
    rule = QuadratureRule.build(1, 40)
    for seed in range(5):
        f = HermiteExpansion.random(1, 5, seed=seed)
        for t in (0.1, 0.5, 1.0):
            for q in (2.0, 3.0, 4.0):
                assert nelson_check(f, t, q, rule).holds


def test_text_format_roundtrip():
    f = HermiteExpansion.random(3, 4, seed=9)
    assert parse_expansion(format_expansion(f)) == f


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("n=2\n1 0 1.0\n", 1),
    ("n=2 maxdeg=2\n1 1.0\n", 2),
    ("n=2 maxdeg=2\n2 1 1.0\n", 2),
    ("n=1 maxdeg=2\n1 xyz\n", 2),
])
def test_text_format_errors(text, line):
    with pytest.raises(ParseError) as e:
        parse_expansion(text)
    assert e.value.line == line
