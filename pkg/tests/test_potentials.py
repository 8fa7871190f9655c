import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frobenius_like.algebra import CanonicalBasis, gram, mult_operator
from frobenius_like.arrangement import Arrangement
from frobenius_like.exact import LinearForm, TermSum
from frobenius_like.potentials import (calibrate_epsilon, check_homogeneity, check_invariance, check_ll_der,
                                       check_pp_der, l_derivative_2k1, l_terms, q_derivative_2k, q_eval, q_terms,
                                       term_coefficient)
from frobenius_like.report import PASS

from conftest import R1_Z, R2_Z, random_arrangement


def test_q_r1(r1):
    assert q_eval(r1, R1_Z) == F(14, 27)
    # Q = (1/27) sum (z_i - z_j)^2
    z = (F(2), F(-1), F(5))
    assert q_eval(r1, z) == sum((z[i] - z[j]) ** 2 for i in range(3) for j in range(i + 1, 3)) / 27


def test_q_homogeneous(r2):
    z = (F(1), F(2), F(4), F(8))
    assert q_eval(r2, tuple(3 * x for x in z)) == 3 ** 4 * q_eval(r2, z)


def test_q_second_derivatives_r1(r1):
    assert q_derivative_2k(r1, (0, 1)) == F(-2, 27)
    assert q_derivative_2k(r1, (0, 0)) == F(4, 27)


def test_l_third_derivative_r1(r1):
    d = l_derivative_2k1(r1, (0, 0, 1))
    assert d == TermSum.power(LinearForm((1, -1, 0)), -1, -1)
    assert d.evaluate(R1_Z) == 1
    assert l_derivative_2k1(r1, (0, 1, 2)).is_zero()
    assert l_derivative_2k1(r1, (1, 0, 0)) == d


def test_l_derivative_matches_symbolic_chain(r2):
    L = l_terms(r2)
    for J in [(0, 1, 2, 3, 0), (2, 2, 1, 3, 0), (3, 3, 3, 1, 1)]:
        assert L.derivative_multi(J) == l_derivative_2k1(r2, J)


def test_coefficient_identity(r2):
    k = r2.k
    for T in r2.subsets(k + 1):
        c_l = term_coefficient(r2, T) / math.factorial(2 * k)
        c_q = term_coefficient(r2, T) / r2.a_sum ** (2 * k + 1)
        assert c_l * math.factorial(2 * k) == r2.a_sum ** (2 * k + 1) * c_q
    assert len(q_terms(r2)) == len(l_terms(r2)) == 4


def test_calibration_r1(r1_basis):
    eps, rep = calibrate_epsilon(r1_basis, R1_Z)
    assert eps == -1 and rep.passed


def test_calibration_r2(r2_basis):
    eps, rep = calibrate_epsilon(r2_basis, R2_Z)
    assert eps == 1 and rep.passed


def test_pp_der_r1_by_hand(r1, r1_basis):
    g = gram(r1_basis, -1)
    # S(p_1, p_2) = -1/3 = (9/2) * dQ/dz1dz2
    assert g.form((1, 0), (0, 1)) == F(-1, 3) == F(9, 2) * q_derivative_2k(r1, (0, 1))
    assert g.form((1, 0), (1, 0)) == F(2, 3) == F(9, 2) * q_derivative_2k(r1, (0, 0))
    assert check_pp_der(r1, r1_basis, R1_Z, -1).passed


def test_ll_der_r1_by_hand(r1, r1_basis):
    g = gram(r1_basis, -1)
    M1 = mult_operator(r1_basis, R1_Z, 0).matrix
    # eps S(p_1 * p_1, p_2) = d^3 L / dz1^2 dz2 at z*
    assert g.form(M1 @ (1, 0), (0, 1)) == l_derivative_2k1(r1, (0, 0, 1)).evaluate(R1_Z) == 1
    rep = check_ll_der(r1, r1_basis, R1_Z, -1)
    assert rep.statuses() == {PASS}


def test_wrong_sign_fails(r1, r1_basis):
    assert not check_pp_der(r1, r1_basis, R1_Z, 1).passed
    assert not check_ll_der(r1, r1_basis, R1_Z, 1).passed


def test_invariance(r1, r2):
    for arr in (r1, r2):
        rep = check_invariance(arr)
        assert rep.statuses() == {PASS}
    rep = check_invariance(r1, z_float=(3.0, 1.0, 0.0))
    assert rep.by_name("invariance_numeric")[0].residual < 1e-12


def test_homogeneity_r1(r1, r1_basis):
    rep = check_homogeneity(r1, r1_basis, R1_Z, -1)
    assert rep.statuses() == {PASS}
    assert rep.by_name("homogeneity_point")[0].witness["euler_minus_2kL"] == 7


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_potential_identities_random(seed, k):
    rng = random.Random(seed)
    arr = random_arrangement(rng, k + 2 + rng.randint(0, 1), k)
    basis = CanonicalBasis(arr)
    z = arr.random_point(rng)
    eps, rep = calibrate_epsilon(basis, z)
    assert eps == (-1) ** k and rep.passed
    for check in (check_pp_der, check_ll_der, check_homogeneity):
        assert check(arr, basis, z, eps).passed
    assert check_invariance(arr).by_name("invariance_reduced")[0].status == PASS


def test_calibration_with_vanishing_diagonal_gram_entry():
    arr = Arrangement([[-2, -1, -3], [2, 2, -1], [-3, -1, 0], [-3, 1, -2], [-2, 1, -2], [3, 0, -3]],
                      [-1, -1, -1, F(-1, 2), -1, F(3, 2)])
    basis = CanonicalBasis(arr)
    assert gram(basis).raw[0, 0] == 0
    eps, rep = calibrate_epsilon(basis, arr.random_point(random.Random(3)))
    assert eps == -1 and rep.passed
    assert rep.records[0].witness["entry"] != (0, 0)
