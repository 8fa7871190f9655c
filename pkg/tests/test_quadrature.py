import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sci
from scipy.special import betaln, gammaln

from frobenius_like.errors import QuadratureError
from frobenius_like.quadrature import integrate, integrate_log, integrate_simplex_log, tau_max_for


@pytest.mark.parametrize("p, q", [(1.0, 1.0), (0.75, 0.75), (-0.5, 0.25), (-0.9, -0.9), (3.0, 0.1)])
def test_beta_oracle(p, q):
    # int_0^1 t^p (1-t)^q dt = B(p+1, q+1)
    res = integrate_log(lambda t, la, lb: p * la + q * lb, 0.0, 1.0, alpha=min(p, q) + 1, tol=1e-12)
    assert res.value == pytest.approx(math.exp(betaln(p + 1, q + 1)), rel=1e-11)


def test_beta_kappa_one_is_one_sixth():
    res = integrate_log(lambda t, la, lb: la + lb, 0.0, 1.0)
    assert res.value == pytest.approx(1 / 6, rel=1e-13)


def test_shifted_interval_matches_scipy():
    f = lambda t: np.abs(t + 3) ** 0.75 * np.abs(t + 1) ** 0.75 * np.abs(t) ** 0.75
    ref, _ = sci.quad(f, -1, 0, epsabs=1e-14, epsrel=1e-13)
    res = integrate_log(lambda t, la, lb: 0.75 * (np.log(t + 3) + la + lb), -1.0, 0.0, alpha=1.75)
    assert res.value == pytest.approx(ref, rel=1e-10)


def test_generic_integrate_complex():
    res = integrate(lambda t, da, db: np.exp(1j * t), 0.0, math.pi)
    assert res.value == pytest.approx(2j, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_tolerance_halving_is_stable(p, q):
    f = lambda t, la, lb: (p - 1) * la + (q - 1) * lb
    a = integrate_log(f, 0.0, 1.0, alpha=min(p, q), tol=1e-10).value
    b = integrate_log(f, 0.0, 1.0, alpha=min(p, q), tol=5e-11).value
    assert abs(a - b) <= 10 * 1e-10 * abs(b)


@pytest.mark.parametrize("k, alphas", [(1, (0.75, 1.5)), (2, (1.0, 1.0, 1.0)), (2, (0.75, 1.25, 2.0)),
                                       (3, (1.0, 1.0, 1.0, 1.0)), (3, (1.5, 0.8, 1.0, 2.0))])
def test_dirichlet_oracle(k, alphas):
    # int over the standard simplex of prod lam_v^(alpha_v - 1) = prod Gamma(alpha_v) / Gamma(sum alpha)
    expo = np.array(alphas) - 1
    res = integrate_simplex_log(lambda lam: expo @ lam, k, alpha=min(alphas), tol=1e-9)
    expected = math.exp(sum(gammaln(a) for a in alphas) - gammaln(sum(alphas)))
    assert res.value == pytest.approx(expected, rel=1e-8)


def test_simplex_volume():
    for k in (1, 2, 3):
        res = integrate_simplex_log(lambda lam: np.zeros(lam.shape[1]), k)
        assert res.value == pytest.approx(1 / math.factorial(k), rel=1e-12)


def test_non_convergence_raises():
    with pytest.raises(QuadratureError):
        integrate_log(lambda t, la, lb: np.log(np.abs(np.sin(200 * t)) + 1e-300), 0.0, 1.0, max_level=4, tol=1e-14)
    with pytest.raises(QuadratureError):
        integrate_log(lambda t, la, lb: la, 1.0, 0.0)


def test_tau_max_grows_for_strong_singularities():
    assert tau_max_for(1.0) == pytest.approx(math.log(200 / math.pi))
    assert tau_max_for(100.0) == 3.0
    assert tau_max_for(0.01) > tau_max_for(1.0)
