import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubeharmonic.cube import BooleanFunction, RealCubeFunction, derivative_stack, discrete_derivative, point_coords, variance
from cubeharmonic.errors import CapacityError, ParameterError, PreconditionError
from cubeharmonic.spectral import (
    bonami_beckner,
    character,
    check_commutation,
    check_semigroup_laws,
    dirichlet_form,
    exponential_decay_check,
    format_spectrum,
    fwht,
    generator,
    hypercontractivity_check,
    inverse_fwht,
    noise_kernel,
    parse_spectrum,
    tail_identity_check,
    variance_representation_check,
)
from cubeharmonic.zoo import dictator, majority, parity, tribes


def naive_coefficient(values, n, mask):
    total = 0.0
    for x in range(1 << n):
        chi = math.prod(c for k, c in enumerate(point_coords(x, n)) if mask >> k & 1)
        total += values[x] * chi
    return total / (1 << n)


def random_real(seed, n):
    return RealCubeFunction(np.random.default_rng(seed).standard_normal(1 << n))


@pytest.mark.parametrize("n", [1, 3, 5])
def test_fwht_matches_direct_sum(n):
    f = random_real(n, n)
    spec = fwht(f)
    for mask in range(1 << n):
        assert spec[mask] == pytest.approx(naive_coefficient(f.values, n, mask), abs=1e-12)


def test_dictator_spectrum():
    spec = fwht(dictator(1).to_real())
    assert spec.nonzero() == [(0, 0.5), (1, 0.5)]


def test_character_is_orthonormal():
    n = 4
    for a in range(1 << n):
        spec = fwht(character(n, a))
        expected = np.zeros(1 << n)
        expected[a] = 1.0
        assert np.allclose(spec.coefficients, expected)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_roundtrip_and_parseval(n, seed):
    f = random_real(seed, n)
    spec = fwht(f)
    assert np.allclose(inverse_fwht(spec).values, f.values, atol=1e-12)
    assert spec.norm2_squared() == pytest.approx(float(np.mean(f.values**2)), rel=1e-12)
    assert spec.variance() == pytest.approx(variance(f), rel=1e-10, abs=1e-14)


def test_level_weights_sum():
    f = random_real(2, 6)
    w = fwht(f).level_weights()
    assert w.sum() == pytest.approx(float(np.mean(f.values**2)))


def test_spectrum_text_roundtrip():
    spec = fwht(tribes(2, 2).to_real())
    back = parse_spectrum(format_spectrum(spec))
    assert np.array_equal(back.coefficients, spec.coefficients)


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0])
def test_semigroup_spectral_vs_integral(t):
    for seed in range(3):
        f = random_real(seed, 7)
        a = bonami_beckner(f, t).values
        b = bonami_beckner(f, t, method="integral").values
        assert np.max(np.abs(a - b)) <= 1e-10


def test_noise_kernel_is_stochastic():
    k = noise_kernel(5, 0.3)
    assert np.allclose(k.sum(axis=1), 1.0)
    assert np.all(k > 0)
    assert np.allclose(k, k.T)


def test_semigroup_closed_form_variances():
    t = 0.7
    assert variance(bonami_beckner(dictator(1).to_real(), t)) == pytest.approx(math.exp(-2 * t) / 4)
    assert variance(bonami_beckner(parity(2).to_real(), t)) == pytest.approx(math.exp(-4 * t) / 4)


def test_semigroup_errors():
    f = random_real(0, 3)
    with pytest.raises(ParameterError):
        bonami_beckner(f, -1.0)
    with pytest.raises(CapacityError):
        bonami_beckner(random_real(0, 11), 0.1, method="integral")
    with pytest.raises(ParameterError):
        bonami_beckner(f, 0.1, method="mystery")


def test_semigroup_at_zero_is_identity():
    f = random_real(4, 5)
    assert np.allclose(bonami_beckner(f, 0.0).values, f.values)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1), st.floats(0, 3), st.floats(0, 3))
def test_semigroup_laws_hold(n, seed, s, t):
    f = random_real(seed, n)
    assert check_semigroup_laws(f, s, t).worst() <= 1e-12 * max(1.0, float(np.abs(f.values).max()))
    for i in range(1, n + 1):
        assert check_commutation(f, i, t) <= 1e-12


def test_dirichlet_form_three_ways():
    f, g = random_real(1, 6), random_real(2, 6)
    spectral = dirichlet_form(f, g)
    by_generator = -float(np.mean(f.values * generator(g).values))
    df, dg = derivative_stack(f.values, 6), derivative_stack(g.values, 6)
    by_derivatives = 0.25 * float(np.sum(np.mean(df * dg, axis=1)))
    assert spectral == pytest.approx(by_generator, abs=1e-12)
    assert spectral == pytest.approx(by_derivatives, abs=1e-12)


def test_dirichlet_mismatched_dims():
    with pytest.raises(PreconditionError):
        dirichlet_form(random_real(0, 2), random_real(0, 3))


def test_generator_eigenvalues_on_characters():
    for mask in range(16):
        chi = character(4, mask)
        assert np.allclose(generator(chi).values, -bin(mask).count("1") * chi.values)


def test_exponential_decay_requires_centering():
    with pytest.raises(PreconditionError):
        exponential_decay_check(RealCubeFunction([1.0, 2.0]), 0.5)
    c = exponential_decay_check(RealCubeFunction([1.0, -1.0, 2.0, -2.0]), 0.5)
    assert c.holds


def test_hypercontractivity_examples():
    f = random_real(7, 6)
    for t in (0.1, 0.5, 1.0):
        for q in (2.0, 3.0, 4.0):
            c = hypercontractivity_check(f, t, q)
            assert c.holds
            assert c.params["p"] == pytest.approx(1 + (q - 1) * math.exp(-2 * t))
    # at t = 0 both sides coincide
    c = hypercontractivity_check(f, 0.0, 3.0)
    assert c.lhs == pytest.approx(c.rhs)


@pytest.mark.parametrize("f", [dictator(3, 2), parity(4), majority(5), tribes(2, 3)], ids=repr)
def test_variance_constant_is_one_half(f):
    rep = variance_representation_check(f.to_real())
    assert rep.constant == pytest.approx(0.5, abs=1e-12)
    assert rep.quadrature_error <= 1e-9


def test_dictator_variance_representation_values():
    rep = variance_representation_check(dictator(1).to_real())
    assert rep.lhs == 0.25
    assert rep.integral == pytest.approx(0.5)


@pytest.mark.parametrize("s", [0.0, 0.2, 1.5])
def test_tail_constant_is_one_half(s):
    for seed in range(5):
        rep = tail_identity_check(random_real(seed, 5), s)
        assert rep.constant == pytest.approx(0.5, abs=1e-10)
        assert rep.quadrature_error <= 1e-9


def test_tail_identity_parity_values():
    rep = tail_identity_check(parity(2).to_real(), 0.0)
    assert (rep.lhs, rep.integral) == (pytest.approx(2.0), pytest.approx(4.0))


def test_tail_identity_counts_diagonal_terms():
    # D_11 f = -2 D_1 f keeps a dictator non-degenerate
    rep = tail_identity_check(dictator(3).to_real(), 0.1)
    assert rep.constant == pytest.approx(0.5)
    flat = tail_identity_check(RealCubeFunction.constant(1.0, 3), 0.1)
    assert flat.degenerate
    assert math.isnan(flat.constant)


def test_constant_function_degenerate():
    rep = variance_representation_check(RealCubeFunction.constant(2.0, 3))
    assert rep.degenerate


def test_derivative_of_boolean_rejected():
    with pytest.raises(TypeError):
        discrete_derivative(BooleanFunction.from_string("01"), 1)
