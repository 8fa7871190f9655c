from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frobenius_like.errors import InputError, ShapeError, SingularityError
from frobenius_like.exact import (LinearForm, Matrix, Term, TermSum, det, format_scalar, parse_scalar,
                                  solve_linear)

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=30)


def square(size):
    return st.lists(st.lists(rationals, min_size=size, max_size=size), min_size=size, max_size=size)


# -- scalars -----------------------------------------------------------------

@pytest.mark.parametrize("text, value", [("3/4", F(3, 4)), ("-2", F(-2)), ("+6/8", F(3, 4)), (" 5 ", F(5)),
                                         (7, F(7)), (F(1, 3), F(1, 3))])
def test_parse_scalar(text, value):
    assert parse_scalar(text) == value


@pytest.mark.parametrize("bad", ["1.5", "1/0", "x", "", True, 0.5, None])
def test_parse_scalar_rejects(bad):
    with pytest.raises(InputError):
        parse_scalar(bad)


@given(rationals)
def test_scalar_text_roundtrip(x):
    assert parse_scalar(format_scalar(x)) == x


@given(rationals, rationals, rationals)
def test_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    if a:
        assert a * (1 / a) == 1


# -- matrices ------------------------------------------------------------------

@pytest.mark.parametrize("rows, value", [([[1, 0], [0, 1]], 1), ([[1, 1], [1, -1]], -2), ([[1, 1], [2, 2]], 0)])
def test_det_examples(rows, value):
    assert det(Matrix(rows)) == value


def test_det_non_square():
    with pytest.raises(ShapeError):
        det(Matrix([[1, 2, 3], [4, 5, 6]]))


def test_solve_examples():
    assert solve_linear(Matrix.identity(2), [F(3, 2), -1]) == (F(3, 2), F(-1))
    assert solve_linear(Matrix([[1, 0], [1, 1]]), [1, 0]) == (1, -1)
    with pytest.raises(SingularityError) as info:
        solve_linear(Matrix([[1, 1], [2, 2]]), [1, 2])
    assert info.value.witness == {"det": "0"}


def _laplace(rows):
    if len(rows) == 1:
        return rows[0][0]
    return sum((-1) ** j * rows[0][j] * _laplace([r[:j] + r[j + 1:] for r in rows[1:]])
               for j in range(len(rows)))


@settings(max_examples=60)
@given(st.integers(1, 4).flatmap(square))
def test_det_matches_laplace(rows):
    assert det(Matrix(rows)) == _laplace(rows)


@settings(max_examples=60)
@given(st.integers(2, 4).flatmap(square), st.data())
def test_det_alternating_and_multilinear(rows, data):
    n = len(rows)
    i, j = data.draw(st.integers(0, n - 1)), data.draw(st.integers(0, n - 1))
    swapped = [list(r) for r in rows]
    swapped[i], swapped[j] = swapped[j], swapped[i]
    assert det(Matrix(swapped)) == (det(Matrix(rows)) if i == j else -det(Matrix(rows)))
    lam = data.draw(rationals)
    extra = data.draw(st.lists(rationals, min_size=n, max_size=n))
    mixed = [list(r) for r in rows]
    mixed[i] = [lam * x + y for x, y in zip(rows[i], extra)]
    other = [list(r) for r in rows]
    other[i] = extra
    assert det(Matrix(mixed)) == lam * det(Matrix(rows)) + det(Matrix(other))


@settings(max_examples=60)
@given(st.integers(1, 4).flatmap(square), st.data())
def test_solve_and_inverse(rows, data):
    m = Matrix(rows)
    rhs = data.draw(st.lists(rationals, min_size=len(rows), max_size=len(rows)))
    if det(m) == 0:
        with pytest.raises(SingularityError):
            solve_linear(m, rhs)
        return
    x = solve_linear(m, rhs)
    assert m @ x == tuple(rhs)
    assert m @ m.inverse() == Matrix.identity(len(rows))


def test_matrix_arithmetic():
    a = Matrix([[1, F(1, 2)], [0, 3]])
    b = Matrix([[F(2, 3), 0], [1, 1]])
    assert a @ b == Matrix([[F(7, 6), F(1, 2)], [3, 3]])
    assert (a + b) - b == a
    assert (a * 2)[0, 1] == 1
    assert (-a).T == Matrix([[-1, 0], [F(-1, 2), -3]])
    assert a.rank() == 2 and Matrix([[1, 2], [2, 4]]).rank() == 1
    assert Matrix([[1, 2], [2, 1]]).is_symmetric() and not a.is_symmetric()
    assert Matrix.zeros(2).is_zero()
    assert a.max_abs() == 3


# -- linear forms and term sums ---------------------------------------------------

Z12 = LinearForm((1, -1))  # z1 - z2 in two variables


def test_linear_form_basics():
    f = LinearForm((2, 0, -1), 5)
    assert f((1, 7, 3)) == 4
    assert f.derivative(2) == -1 and not f.is_homogeneous
    lam, g = f.normalized()
    assert lam == 2 and g.coeffs[0] == 1 and g.scaled(lam) == f
    assert str(LinearForm((1, -1))) == "z0 - z1"


def test_derivative_of_reciprocal():
    # d/dz1 (z1 - z2)^-1 = -(z1 - z2)^-2
    assert TermSum.power(Z12, -1).derivative(0) == TermSum.power(Z12, -2, -1)


def test_derivative_of_log_term():
    # d/dz1 (1/2)(z1-z2)^2 log(z1-z2) = (z1-z2) log(z1-z2) + (1/2)(z1-z2)
    ts = TermSum.power(Z12, 2, F(1, 2), log=True)
    expected = TermSum([Term(F(1), Z12, 1, True), Term(F(1, 2), Z12, 1)], 2)
    assert ts.derivative(0) == expected


def test_third_derivative_of_log_term():
    # z1, z1, z2 derivative of (1/2)(z1-z2)^2 log(z1-z2) is -(z1-z2)^-1
    ts = TermSum.power(Z12, 2, F(1, 2), log=True)
    assert ts.derivative_multi([0, 0, 1]) == TermSum.power(Z12, -1, -1)


def test_merge_up_to_scalar_multiple():
    a = TermSum.power(LinearForm((2, -2)), -1)
    b = TermSum.power(Z12, -1, F(-1, 2))
    assert (a + b).is_zero()


def test_evaluate():
    ts = TermSum.power(Z12, -1, 3) + TermSum.constant(F(1, 2), 2)
    assert ts.evaluate((F(5), F(2))) == F(3, 2)
    with pytest.raises(SingularityError):
        ts.evaluate((1, 1))
    with pytest.raises(Exception):
        TermSum.power(Z12, 2, log=True).evaluate((3, 1))
    assert abs(TermSum.power(Z12, 2, log=True).evaluate_complex((3.0, 1.0)) - 4 * 0.6931471805599453) < 1e-14


forms = st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3), st.integers(-4, 4)).filter(
    lambda t: any(t[:3])).map(lambda t: LinearForm(t[:3], t[3]))
terms = st.builds(lambda c, f, m, lg: Term(c, f, m if not lg else abs(m), lg),
                  rationals.filter(bool), forms, st.integers(-3, 4), st.booleans())
termsums = st.lists(terms, max_size=5).map(lambda ts: TermSum(ts, 3))


@given(termsums, st.integers(0, 2), st.integers(0, 2))
def test_derivatives_commute(ts, i, j):
    assert ts.derivative(i).derivative(j) == ts.derivative(j).derivative(i)


@given(forms, st.integers(1, 3), st.data())
def test_log_power_top_derivative(form, k, data):
    # (2k+1)-fold derivative of F^{2k} log F is (2k)! prod(dF) F^-1
    J = data.draw(st.lists(st.integers(0, 2), min_size=2 * k + 1, max_size=2 * k + 1))
    ts = TermSum.power(form, 2 * k, log=True)
    coeff = F(1)
    for j in J:
        coeff *= form.coeffs[j]
    fact = 1
    for m in range(2, 2 * k + 1):
        fact *= m
    expected = TermSum.power(form, -1, fact * coeff) if coeff else TermSum.zero(3)
    assert ts.derivative_multi(J) == expected


@given(termsums, rationals, rationals)
def test_linearity(ts, x, y):
    other = TermSum.power(LinearForm((1, 2, 3), 1), 2)
    lhs = (ts * x + other * y).derivative(1)
    assert lhs == ts.derivative(1) * x + other.derivative(1) * y


def test_euler_scales_homogeneous_power():
    hom = TermSum.power(LinearForm((1, -1)), 3)
    assert hom.euler() == hom * 3
