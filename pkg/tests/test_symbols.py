import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amplituder.symbols import (
    MatrixPolynomial,
    PolynomialNonlinearity,
    conjugation_symmetric,
    differentiate,
    eval_at,
    eval_nonlinearity,
    eval_symbol,
)

from conftest import cel_symbol, cubic_first_component, cubic_scalar, oscillatory_symbol, swift_hohenberg_symbol


def random_poly(rng, d, m, degree=4, terms=6, real=False):
    coeffs = {}
    for _ in range(terms):
        alpha = tuple(int(a) for a in rng.multinomial(int(rng.integers(0, degree + 1)), [1 / d] * d))
        c = rng.standard_normal((m, m))
        if not real:
            c = c + 1j * rng.standard_normal((m, m))
        coeffs[alpha] = c
    return MatrixPolynomial(d, m, coeffs)


# eval_symbol ---------------------------------------------------------------


def test_sh_symbol_vanishes_at_critical_wavenumber():
    assert eval_symbol(swift_hohenberg_symbol(), [1.0])[0, 0] == 0


def test_sh_symbol_constant_term():
    assert eval_symbol(swift_hohenberg_symbol(), [0.0])[0, 0] == -1


def test_oscillatory_symbol_at_zero_is_rotation_generator():
    np.testing.assert_array_equal(eval_symbol(oscillatory_symbol(), [0.0]), [[0, 1], [-1, 0]])


def test_eval_symbol_batched_matches_pointwise(rng):
    P = random_poly(rng, 2, 3)
    xi = rng.standard_normal((5, 4, 2))
    batch = eval_symbol(P, xi)
    assert batch.shape == (5, 4, 3, 3)
    np.testing.assert_allclose(batch[2, 3], eval_symbol(P, xi[2, 3]), rtol=1e-14)


def test_eval_symbol_dimension_mismatch():
    with pytest.raises(ValueError):
        eval_symbol(cel_symbol(), [1.0])


def test_cel_symbol_spectrum_at_critical_point():
    vals = np.sort(np.linalg.eigvals(eval_symbol(cel_symbol(), [0.0, 1.0])).real)
    np.testing.assert_allclose(vals, [-1.5, 0.0], atol=1e-14)


# differentiate -------------------------------------------------------------


def test_second_derivative_of_sh_symbol():
    # -(x^2+1)^2 = -x^4 - 2x^2 - 1  =>  second derivative -12x^2 - 4
    expected = MatrixPolynomial.scalar(1, {(2,): -12.0, (0,): -4.0})
    assert differentiate(swift_hohenberg_symbol(), (2,)) == expected


def test_zero_order_derivative_is_identity(rng):
    P = random_poly(rng, 2, 2)
    assert differentiate(P, (0, 0)) == P


def test_second_derivative_of_sh_symbol_at_i():
    val = eval_at(differentiate(swift_hohenberg_symbol(), (2,)), [1j])[0, 0]
    assert val == pytest.approx(8.0, abs=1e-14)


def test_derivative_of_low_degree_terms_is_zero():
    P = MatrixPolynomial.scalar(1, {(1,): 2.0})
    assert differentiate(P, (2,)).is_zero


def test_differentiate_is_linear(rng):
    for _ in range(20):
        P, Q = random_poly(rng, 2, 2), random_poly(rng, 2, 2)
        alpha = tuple(int(a) for a in rng.integers(0, 3, size=2))
        diff = differentiate(P + Q, alpha) - differentiate(P, alpha) - differentiate(Q, alpha)
        assert all(np.abs(c).max() < 1e-12 for c in diff.coeffs.values())


def test_directional_finite_difference_matches_derivative(rng):
    """Central differences of P(i xi) along e against the exact gradient.

    d/dxi P(i xi) = i * sum_a e_a (d_a P)(i xi), so the oracle is built from
    differentiate() and compared with a purely numerical route.
    """
    for _ in range(200):
        d = int(rng.integers(1, 3))
        P = random_poly(rng, d, 2, degree=4)
        xi = rng.uniform(-1.5, 1.5, size=d)
        e = rng.standard_normal(d)
        e /= np.linalg.norm(e)
        exact = sum(
            1j * e[a] * eval_at(differentiate(P, tuple(int(b == a) for b in range(d))), 1j * xi) for a in range(d)
        )
        scale = 1.0 + np.abs(exact).max()
        errs = []
        for h in (1e-3, 1e-4):
            fd = (eval_symbol(P, xi + h * e) - eval_symbol(P, xi - h * e)) / (2 * h)
            errs.append(np.abs(fd - exact).max())
        assert errs[0] <= 1e-4 * scale
        assert errs[1] <= 1e-6 * scale
        if errs[0] > 1e-9 * scale:
            assert errs[0] / max(errs[1], 1e-300) > 30.0


# canonical form and arithmetic ---------------------------------------------


def test_zero_coefficients_are_dropped():
    P = MatrixPolynomial.scalar(1, {(2,): 0.0, (1,): 1.0})
    assert list(P.coeffs) == [(1,)]


def test_graded_lex_order():
    P = MatrixPolynomial.scalar(2, {(0, 2): 1, (2, 0): 1, (1, 1): 1, (0, 0): 1, (1, 0): 1})
    assert list(P.coeffs) == [(0, 0), (1, 0), (2, 0), (1, 1), (0, 2)]


def test_add_then_subtract_restores_coefficients(rng):
    P = random_poly(rng, 2, 2)
    T = MatrixPolynomial(2, 2, {(3, 1): rng.standard_normal((2, 2))})
    assert (P + T) - T == P


def test_real_coefficients_flag():
    assert swift_hohenberg_symbol().real_coefficients
    assert not MatrixPolynomial.scalar(1, {(1,): 1j}).real_coefficients


def test_bad_coefficient_shape():
    with pytest.raises(ValueError):
        MatrixPolynomial(1, 2, {(1,): np.ones((3, 3))})


def test_entries_round_trip():
    P = cel_symbol()
    assert MatrixPolynomial.from_entries(2, 2, P.entries()) == P


def test_degree():
    assert swift_hohenberg_symbol().degree == 4
    assert cel_symbol().degree == 2


# nonlinearity --------------------------------------------------------------


def test_cubic_at_zero():
    assert eval_nonlinearity(cubic_scalar(), [0.0])[0] == 0


def test_cubic_at_inverse_sqrt3():
    u = 1 / np.sqrt(3)
    assert eval_nonlinearity(cubic_scalar(), [u])[0] == pytest.approx(2 / (3 * np.sqrt(3)), abs=1e-15)


def test_two_component_cubic():
    np.testing.assert_array_equal(eval_nonlinearity(cubic_first_component(), [2.0, 5.0]), [-6.0, 0.0])


def test_nonlinearity_dimension_mismatch():
    with pytest.raises(ValueError):
        eval_nonlinearity(cubic_first_component(), [1.0])


def test_nonlinearity_on_fields():
    f = cubic_first_component()
    u = np.random.default_rng(0).standard_normal((2, 7, 3))
    out = eval_nonlinearity(f, u)
    np.testing.assert_allclose(out[0], u[0] - u[0] ** 3)
    assert np.all(out[1] == 0)


def test_as_table():
    exps, coeffs = cubic_first_component().as_table()
    assert exps.tolist() == [[1, 0], [3, 0]]
    np.testing.assert_array_equal(coeffs, [[1, 0], [-1, 0]])


# conjugation symmetry ------------------------------------------------------


def test_conjugation_symmetric_examples():
    assert conjugation_symmetric(swift_hohenberg_symbol())
    assert not conjugation_symmetric(MatrixPolynomial.scalar(1, {(1,): 1j}))
    assert conjugation_symmetric(cubic_scalar())


def test_conjugation_symmetric_rejects_other_types():
    with pytest.raises(TypeError):
        conjugation_symmetric(3.0)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.floats(-3, 3)), min_size=1, max_size=6),
    st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False), min_size=2, max_size=2),
)
def test_real_nonlinearity_commutes_with_conjugation(terms, u):
    f = PolynomialNonlinearity.from_entries(2, [((a, b), i % 2, c) for i, (a, b, c) in enumerate(terms)])
    u = np.array(u)
    np.testing.assert_allclose(eval_nonlinearity(f, np.conj(u)), np.conj(eval_nonlinearity(f, u)), atol=1e-14, rtol=0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_real_symbol_conjugation_identity(x1, x2):
    P = cel_symbol()
    xi = np.array([x1, x2])
    np.testing.assert_allclose(eval_symbol(P, xi), np.conj(eval_symbol(P, -xi)), atol=1e-12)
