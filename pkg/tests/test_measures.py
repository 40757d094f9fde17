from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from almost_mathieu.measures import (
    atomic_limit,
    continued_fraction_convergents,
    convergence_experiment,
    gap_measure,
    integrate_function,
    integrate_monomial,
    normalized_moment,
    spectral_measure,
    uniform_limit_moment,
)
from almost_mathieu.spectral import spectrum_union
from almost_mathieu.sympoly import evaluate_moment

reduced = st.tuples(st.integers(1, 20), st.integers(0, 19)).filter(
    lambda t: t[1] < t[0] and np.gcd(t[0], t[1]) == 1
).map(lambda t: Fraction(t[1], t[0]))


def test_total_mass():
    sm = spectral_measure(Fraction(3, 7), 0.25)
    assert sm.total_mass == pytest.approx(3.0, abs=1e-12)
    assert float(sm.moment(0)) == pytest.approx(3.0, abs=1e-12)
    assert sm.regime == "subcritical"


@given(reduced, st.sampled_from([0.3, 1.6]), st.integers(0, 3))
def test_odd_moments_vanish(alpha, lam, k):
    assert abs(float(integrate_monomial(alpha, lam, 2 * k + 1))) < 1e-10


@given(reduced, st.sampled_from([0.3, 0.75, 1.6]), st.integers(0, 5))
def test_bands_match_polynomial(alpha, lam, k):
    assert float(integrate_monomial(alpha, lam, 2 * k)) == pytest.approx(
        float(evaluate_moment(k, alpha, lam)), abs=1e-8)


def test_integrate_sin_alpha_half():
    want = (np.sin(-1) - np.sin(-2)) + (np.sin(2) - np.sin(1))
    assert float(integrate_function(Fraction(1, 2), 0.5, np.sin)) == pytest.approx(want, abs=1e-15)


def test_integrate_constant_antiderivative():
    assert float(integrate_function(Fraction(2, 9), 0.4, lambda E: np.ones_like(E))) == 0.0


def test_atomic_limit_alpha_zero():
    m = atomic_limit(Fraction(0))
    assert m.atoms == [(pytest.approx(0.0, abs=1e-15), 1.0)]


def test_atomic_limit_alpha_half():
    m = atomic_limit(Fraction(1, 2))
    atoms = sorted(m.atoms)
    assert atoms[0][0] == pytest.approx(-2.0) and atoms[1][0] == pytest.approx(2.0)
    assert [w for _, w in atoms] == [pytest.approx(0.5), pytest.approx(0.5)]
    assert float(m.moment(2)) == pytest.approx(4.0)


@given(reduced)
def test_atomic_limit_matches_normalized_polynomial(alpha):
    m = atomic_limit(alpha)
    assert m.total_mass == pytest.approx(1.0)
    assert m.inverse_derivative_sum == pytest.approx(1 / alpha.denominator, rel=1e-8)
    for k in range(4):
        assert float(m.moment(2 * k)) == pytest.approx(float(normalized_moment(alpha, 1.0, k)), abs=1e-7)


def test_normalized_moment_alpha_half_criticality():
    assert float(normalized_moment(Fraction(1, 2), 1.0, 1)) == pytest.approx(4.0)


@pytest.mark.parametrize("k", range(4))
def test_normalized_moment_continuity_invariant(k):
    """|c~_2k(lam) - c~_2k(1)| <= 1e-3 for |lam - 1| = 1e-4.

    Checked as stated.  c~_2k is a polynomial in lam with slope of order
    4^k at lam = 1, so the step 1e-4 moves it by ~3.6e-3 (k=2) and ~3.2e-2
    (k=3): those two cases fail.
    """
    worst = 0.0
    for a in (Fraction(1, 3), Fraction(2, 5), Fraction(3, 8)):
        c1 = float(normalized_moment(a, 1.0, k))
        for lam in (1 - 1e-4, 1 + 1e-4):
            worst = max(worst, abs(float(normalized_moment(a, lam, k)) - c1))
    assert worst <= 1e-3


@pytest.mark.parametrize("k", range(1, 4))
def test_normalized_moment_jump_scales_linearly(k):
    for a in (Fraction(1, 3), Fraction(2, 5), Fraction(3, 8)):
        c1 = float(normalized_moment(a, 1.0, k))
        j4 = abs(float(normalized_moment(a, 1 + 1e-4, k)) - c1)
        j5 = abs(float(normalized_moment(a, 1 + 1e-5, k)) - c1)
        assert 8 <= j4 / j5 <= 12


def test_gap_measure_whole_spectrum():
    assert gap_measure(Fraction(1, 2), 0.5, -3.0, 3.0) == pytest.approx(2.0)


def test_gap_measure_between_gaps():
    a, lam = Fraction(1, 3), 0.5
    u = list(spectrum_union(a, lam))
    mids = [0.5 * (b1 + a2) for (_, b1), (a2, _) in zip(u, u[1:])]
    bands = spectral_measure(a, lam).bands.endpoints.astype(float)
    for lo, hi in zip(mids, mids[1:]):
        inside = [(x, y) for x, y in bands if lo <= x and y <= hi]
        assert gap_measure(a, lam, lo, hi) == pytest.approx(sum(y - x for x, y in inside), abs=1e-14)


def test_gap_measure_rejects_spectral_endpoint():
    with pytest.raises(ValueError):
        gap_measure(Fraction(1, 2), 0.5, -3.0, 0.0)
    with pytest.raises(ValueError):
        gap_measure(Fraction(1, 2), 0.5, 3.0, -3.0)


def test_convergents():
    golden = (np.sqrt(5) - 1) / 2
    c = continued_fraction_convergents(golden, 8)
    assert c == [Fraction(0), Fraction(1), Fraction(1, 2), Fraction(2, 3), Fraction(3, 5),
                 Fraction(5, 8), Fraction(8, 13), Fraction(13, 21)]
    assert continued_fraction_convergents(0.25, 10) == [Fraction(0), Fraction(1, 4)]


def test_uniform_limit_moment():
    assert uniform_limit_moment(0.5, 0) == pytest.approx(2.0)
    assert uniform_limit_moment(0.5, 1) == pytest.approx(2 / 3)


def test_convergence_constant_sequence():
    rows = convergence_experiment(Fraction(2, 5), [Fraction(2, 5)] * 3, 0.6, 2)
    assert len(rows) == 9
    assert max(r["diff"] for r in rows) < 1e-12


def test_convergence_reciprocal_decreases():
    rows = convergence_experiment(0, "reciprocal", 0.5, 1, 16)
    d = [r["diff"] for r in rows if r["k"] == 1]
    assert d[-1] < d[0]
    assert rows[0]["alpha"] == "1/2" and rows[-1]["alpha"] == "1/16"


def test_convergence_rejects_criticality():
    with pytest.raises(ValueError):
        convergence_experiment(0, "reciprocal", 1.0, 1, 8)
