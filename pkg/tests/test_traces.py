from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from almost_mathieu.measures import integrate_function, integrate_monomial
from almost_mathieu.traces import (
    BandedWindow,
    duality_bis_residual,
    fourier_duality_check,
    moment_four_traces,
    projection_residual,
    simplify_check,
    two_traces_integral,
    two_traces_routes,
)

reduced = st.tuples(st.integers(1, 15), st.integers(0, 14)).filter(
    lambda t: t[1] < t[0] and np.gcd(t[0], t[1]) == 1
).map(lambda t: Fraction(t[1], t[0]))


def test_zeroth_moment_is_measure():
    assert float(moment_four_traces(Fraction(2, 7), 0.25, 0)) == pytest.approx(3.0, abs=1e-12)
    assert float(moment_four_traces(0.6180339887498949, 0.25, 0)) == pytest.approx(3.0, abs=1e-12)


def test_second_moment_alpha_half():
    assert float(moment_four_traces(Fraction(1, 2), 0.5, 1)) == pytest.approx(14 / 3, abs=1e-12)


@given(reduced, st.sampled_from([0.3, 0.8, 1.7]), st.integers(0, 4))
def test_four_traces_match_bands(alpha, lam, k):
    assert float(moment_four_traces(alpha, lam, k)) == pytest.approx(
        float(integrate_monomial(alpha, lam, 2 * k)), abs=1e-8)


@given(reduced, st.sampled_from([0.4, 1.2]), st.integers(0, 5))
def test_simplification_identities(alpha, lam, k):
    assert simplify_check(alpha, lam, k)


@pytest.mark.parametrize("alpha", [Fraction(1, 3), Fraction(3, 7), 0.3819660112501051])
@pytest.mark.parametrize("k", [0, 2, 4])
def test_coupling_duality_of_shifted_trace(alpha, k):
    assert duality_bis_residual(alpha, 0.6, k) <= 1e-12


@given(reduced, st.sampled_from([0.5, 1.5]))
def test_two_traces_routes_agree(alpha, lam):
    alt, tr = two_traces_routes(alpha, lam, np.sin)
    assert float(alt) == pytest.approx(float(tr), abs=1e-9)
    assert float(alt) == pytest.approx(float(integrate_function(alpha, lam, np.sin)), abs=1e-9)


def test_two_traces_integral_polynomial():
    a, lam = Fraction(3, 8), 0.7
    val = two_traces_integral(a, lam, lambda E: E**3 / 3)
    assert float(val) == pytest.approx(float(integrate_monomial(a, lam, 2)), abs=1e-10)


@pytest.mark.parametrize("alpha", [Fraction(0), Fraction(1, 2), Fraction(2, 5), Fraction(5, 12)])
@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_fourier_duality(alpha, lam):
    assert fourier_duality_check(alpha, lam) < 1e-10


@pytest.mark.parametrize("boundary", ["periodic", "antiperiodic"])
@pytest.mark.parametrize("power", [0, 1, 3, 6])
def test_projection_identity(boundary, power):
    assert projection_residual(Fraction(3, 7), 0.9, Fraction(1, 5), power, boundary) <= 1e-10


def test_banded_window_power_matches_matrix_power():
    win = BandedWindow(Fraction(1, 3), 0.5, Fraction(0), 6, np.float64)
    M = win.matrix()
    assert np.allclose(win.power(4), np.linalg.matrix_power(M, 4), atol=1e-12)


def test_window_too_small_raises():
    with pytest.raises(ValueError):
        moment_four_traces(Fraction(1, 3), 0.5, 3, W=4)
