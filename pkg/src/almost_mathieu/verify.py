"""Invariant suites run by ``amo verify`` (and reused by the test-suite).

Each suite is a function returning a list of :class:`Check` records.  The
suites are sized to run in seconds to a minute each; the pytest acceptance
suite runs the full grids.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Callable, Iterator

import numpy as np

from .core import BivariatePolynomial
from .funcalc import (
    four_traces_analytic,
    free_resolvent,
    function_of_operator,
    rectangle_contour,
    resolvent,
)
from .measures import atomic_limit, integrate_function, integrate_monomial, normalized_moment
from .spectral import (
    build_finite_operator,
    eigensystem,
    intersection_spectrum,
    intersection_spectrum_chambers,
    spectrum_union,
    spectrum_union_eigen,
    theta_plus,
)
from .sympoly import (
    ChebyshevEntry,
    evaluate_moment,
    odd_moment_polynomial,
    symbolic_moment,
    symbolic_normalized_moment,
    symbolic_T,
    verify_duality,
)
from .traces import (
    BandedWindow,
    fourier_duality_check,
    moment_four_traces,
    projection_residual,
    simplify_check,
    two_traces_routes,
)

__all__ = [
    "Check",
    "SUITES",
    "reduced_fractions",
    "reference_polynomials",
    "run_suites",
]


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def as_row(self) -> dict:
        return {
            "suite": self.suite,
            "check": self.name,
            "status": "pass" if self.passed else "FAIL",
            "detail": self.detail,
        }


def reduced_fractions(qmax: int, qmin: int = 1) -> Iterator[Fraction]:
    """All reduced p/q in [0, 1) with qmin <= q <= qmax, ordered by (q, p)."""
    for q in range(qmin, qmax + 1):
        for p in range(q):
            if gcd(p, q) == 1:
                yield Fraction(p, q)


# ---------------------------------------------------------------------------
# published polynomials, rebuilt from their printed factored forms
# ---------------------------------------------------------------------------


def _tpoly(coeffs) -> BivariatePolynomial:
    """Polynomial in t alone from coefficients listed lowest degree first."""
    return BivariatePolynomial({(0, r): Fraction(c) for r, c in enumerate(coeffs) if c})


def _lam(j: int) -> BivariatePolynomial:
    return BivariatePolynomial({(j, 0): Fraction(1)})


def reference_polynomials() -> dict[str, BivariatePolynomial]:
    """P_2, P_4, T_6 and T_8 as printed in the literature."""
    one_t = _tpoly([1, 1])
    geo = lambda n: _tpoly([1] * n)  # 1 + t + ... + t^{n-1}
    F = Fraction
    P2 = (
        BivariatePolynomial.constant(1)
        - _lam(1) * one_t.scale(F(3, 2))
        + _lam(2) * one_t.scale(F(3, 2))
        - _lam(3)
    ).scale(F(16, 3))
    P4 = (
        BivariatePolynomial.constant(1)
        + _lam(2) * geo(4).scale(F(5, 2))
        + _lam(4) * (one_t**2).scale(F(5, 4))
        - _lam(1) * (one_t**2).scale(F(5, 4))
        - _lam(3) * geo(4).scale(F(5, 2))
        - _lam(5)
    ).scale(F(64, 5))
    T6 = (
        BivariatePolynomial.constant(1)
        + _lam(2) * geo(6).scale(F(7, 2))
        + _lam(4) * (one_t**2 * _tpoly([2, 0, 3, -4, 4])).scale(F(7, 4))
        + _lam(6) * (one_t**3).scale(F(7, 8))
    )
    T8 = (
        BivariatePolynomial.constant(1)
        + _lam(2) * geo(8).scale(F(9, 2))
        + _lam(4) * (one_t**2 * _tpoly([3, 0, 6, -8, 9, 8, -4, -16, 16])).scale(F(9, 4))
        + _lam(6) * (one_t**3 * _tpoly([F(5, 12), 0, F(3, 4), -2, 4, -4, 2])).scale(9)
        + _lam(8) * (one_t**4).scale(F(9, 16))
    )
    return {"P2": P2, "P4": P4, "T6": T6, "T8": T8}


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def _check(suite: str, name: str, fn: Callable[[], tuple[bool, str]]) -> Check:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing invariant is a failing invariant
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return Check(suite, name, bool(ok), detail, time.perf_counter() - t0)


def suite_sympoly(rng: np.random.Generator) -> list[Check]:
    S = "sympoly"
    ref = reference_polynomials()
    out = [
        _check(S, "duality k<=6", lambda: (all(verify_duality(k) for k in range(7)), "exact ring identity")),
        _check(S, "P2 printed", lambda: (symbolic_moment(1) == ref["P2"], "exact")),
        _check(S, "P4 printed", lambda: (symbolic_moment(2) == ref["P4"], "exact")),
        _check(S, "T6 printed", lambda: (symbolic_T(3) == ref["T6"], "exact")),
        _check(S, "T8 printed", lambda: (symbolic_T(4) == ref["T8"], "exact")),
        _check(S, "P0 = 4-4lam", lambda: (symbolic_moment(0) == BivariatePolynomial({(0, 0): 4, (1, 0): -4}), "exact")),
    ]

    def leading():
        bad = [
            k for k in range(7)
            if symbolic_moment(k).lambda_coefficient(2 * k + 1) != {0: Fraction(-(2 ** (2 * k + 2)), 2 * k + 1)}
        ]
        return not bad, f"failing k: {bad}"

    def patterns():
        bad = []
        one_t = _tpoly([1, 1])
        for k in range(1, 7):
            T = symbolic_T(k)
            lam2 = _tpoly([1] * (2 * k)).scale(Fraction(2 * k + 1, 2))
            lam2k = (one_t**k).scale(Fraction(2 * k + 1, 2**k))
            if T.lambda_coefficient(2) != lam2.lambda_coefficient(0):
                bad.append(("lam^2", k))
            if T.lambda_coefficient(2 * k) != lam2k.lambda_coefficient(0):
                bad.append(("lam^2k", k))
        return not bad, f"failing: {bad}"

    def divisibility():
        bad = []
        for k in range(1, 7):
            T = symbolic_T(k)
            for j in range(1, k + 1):
                c = T.lambda_coefficient(2 * j)
                if c and not _divisible_by_one_plus_t(c, j):
                    bad.append((k, j))
        return not bad, f"failing (k, j): {bad}"

    def odd_moments():
        return all(odd_moment_polynomial(k).is_zero for k in range(1, 4)), "k=1..3"

    def normalized():
        got = symbolic_normalized_moment(1).scale(Fraction(3, 4))
        want = BivariatePolynomial({(0, 0): 1, (1, 0): Fraction(-1, 2), (1, 1): Fraction(-3, 2), (2, 0): 1})
        return got == want, "(3/4) c~_2 = 1 - (1+3t)/2 lam + lam^2"

    def chebyshev():
        alphas = rng.random(20)
        err = 0.0
        for m in range(12):
            e = ChebyshevEntry(1, m)
            coeffs = e.monomials()
            for a in alphas:
                c = np.cos(np.pi * a)
                val = sum(float(v) * c**r for (_, r), v in coeffs.items())
                err = max(err, abs(val - e(1.0, a)))
        return err <= 1e-12, f"max error {err:.2e}"

    def exactness():
        err = 0.0
        for _ in range(10):
            q = int(rng.integers(2, 13))
            p = int(rng.integers(1, q))
            while gcd(p, q) != 1:
                p = int(rng.integers(1, q))
            lam = float(rng.uniform(0.05, 0.95))
            k = int(rng.integers(0, 5))
            err = max(err, abs(float(evaluate_moment(k, Fraction(p, q), lam) - integrate_monomial(Fraction(p, q), lam, 2 * k))))
        return err <= 1e-8, f"max |P - oracle| {err:.2e}"

    out += [
        _check(S, "leading coefficient k<=6", leading),
        _check(S, "T lam^2 / lam^2k patterns k<=6", patterns),
        _check(S, "T lam^2j divisible by (1+t)^j", divisibility),
        _check(S, "odd moments vanish", odd_moments),
        _check(S, "normalized c~2", normalized),
        _check(S, "Chebyshev entries", chebyshev),
        _check(S, "polynomial vs oracle (random)", exactness),
    ]
    return out


def _divisible_by_one_plus_t(coeffs: dict, j: int) -> bool:
    """Is the t-polynomial {r: v} divisible by (1+t)^j?  Repeated synthetic
    division by (t + 1)."""
    hi = [Fraction(coeffs.get(r, 0)) for r in range(max(coeffs), -1, -1)]  # highest degree first
    for _ in range(j):
        acc, quot = Fraction(0), []
        for v in hi:
            acc = -acc + v
            quot.append(acc)
        if quot.pop() != 0:
            return False
        hi = quot
    return True


def suite_traces(rng: np.random.Generator) -> list[Check]:
    S = "traces"

    def triangle():
        worst = 0.0
        for a in reduced_fractions(8, 2):
            for lam in (0.3, 0.6, 1.7):
                for k in range(4):
                    o = integrate_monomial(a, lam, 2 * k)
                    worst = max(
                        worst,
                        abs(float(o - moment_four_traces(a, lam, k))),
                        abs(float(o - evaluate_moment(k, a, lam))),
                    )
        return worst <= 1e-8, f"max deviation {worst:.2e} (q<=8, k<=3)"

    def simplify():
        ok = all(simplify_check(a, lam, k) for a in reduced_fractions(6, 2) for lam in (0.4, 1.3) for k in range(4))
        return ok, "tr_1/2 = -tr_0 and tr_a/2 = tr_(1+a)/2 for odd powers"

    def two_traces():
        worst = 0.0
        for a in reduced_fractions(9, 2):
            for lam in (0.3, 0.7, 1.6):
                alt, tr = two_traces_routes(a, lam, np.sin)
                oracle = integrate_function(a, lam, np.sin)
                worst = max(worst, abs(float(alt - tr)), abs(float(alt - oracle)))
        return worst <= 1e-9, f"max deviation {worst:.2e}"

    return [
        _check(S, "oracle / four-traces / polynomial", triangle),
        _check(S, "four traces reduce to two", simplify),
        _check(S, "two-traces routes vs oracle", two_traces),
    ]


def suite_parity(rng: np.random.Generator) -> list[Check]:
    S = "parity"

    def grid():
        bad = []
        for a in reduced_fractions(15):
            for lam in (0.1, 0.5, 1.0, 2.0, 3.0):
                for th, b in ((Fraction(0), "antiperiodic"), (theta_plus(a), "periodic")):
                    if not eigensystem(build_finite_operator(a, lam, th, b)).alternates():
                        bad.append((str(a), lam, b))
        return not bad, f"violations: {bad[:5]}"

    def example():
        es = eigensystem(build_finite_operator(Fraction(1, 5), 0.5, Fraction(0), "antiperiodic"))
        labels = es.parity_labels()
        return labels == ["even", "odd", "even", "odd", "even"], ",".join(labels)

    return [
        _check(S, "alternation q<=15", grid),
        _check(S, "q=5 antiperiodic example", example),
    ]


def suite_spectral(rng: np.random.Generator) -> list[Check]:
    S = "spectral"

    def mass():
        worst = 0.0
        for a in reduced_fractions(12):
            for lam in (0.1, 0.25, 0.5, 0.8, 1.25, 1.9):
                worst = max(worst, abs(intersection_spectrum(a, lam).measure - abs(4 - 4 * lam)))
        return worst <= 1e-8, f"max | |Sigma^-| - |4-4lam| | = {worst:.2e}"

    def routes():
        worst = 0.0
        for a in reduced_fractions(8):
            for lam in (0.25, 0.5, 0.8, 1.9):
                worst = max(worst, intersection_spectrum(a, lam).union.symmetric_difference_measure(
                    intersection_spectrum_chambers(a, lam)))
                worst = max(worst, spectrum_union(a, lam).symmetric_difference_measure(spectrum_union_eigen(a, lam)))
        return worst <= 1e-8, f"max symmetric difference {worst:.2e}"

    def alpha_half():
        bands = np.sort(intersection_spectrum(Fraction(1, 2), 0.5).endpoints.astype(float), axis=0)
        ok = np.allclose(bands, [[-2, -1], [1, 2]], atol=1e-12)
        return ok, str(bands.tolist())

    def closed_form():
        worst = 0.0
        for lam in (0.2, 0.5, 0.9):
            for k in range(7):
                want = -(2 ** (2 * k + 2) / (2 * k + 1)) * (lam ** (2 * k + 1) - 1)
                worst = max(worst, abs(float(integrate_monomial(Fraction(1, 2), lam, 2 * k)) - want) / max(1, abs(want)))
        return worst <= 1e-10, f"max relative deviation {worst:.2e}"

    return [
        _check(S, "mass identity q<=12", mass),
        _check(S, "eigen vs Chambers routes q<=8", routes),
        _check(S, "alpha=1/2 bands", alpha_half),
        _check(S, "alpha=1/2 closed-form moments", closed_form),
    ]


def suite_fourier(rng: np.random.Generator) -> list[Check]:
    S = "fourier"

    def duality():
        worst = max(fourier_duality_check(a, lam) for a in reduced_fractions(12) for lam in (0.5, 2.0))
        return worst < 1e-10, f"max residual {worst:.2e}"

    def projection():
        worst = 0.0
        for a in reduced_fractions(12):
            for b in ("periodic", "antiperiodic"):
                worst = max(worst, projection_residual(a, 0.7, Fraction(1, 3), 5, b))
        return worst <= 1e-9, f"max residual {worst:.2e}"

    return [
        _check(S, "Fourier conjugation q<=12", duality),
        _check(S, "projection identity q<=12", projection),
    ]


def suite_funcalc(rng: np.random.Generator) -> list[Check]:
    S = "funcalc"

    def free():
        r = resolvent(0.0, 0.0, 0.0, 3j)
        err = float(np.max(np.abs(r.matrix[:, 0] - free_resolvent(3j, r.sites))))
        return err <= 1e-12 and r.c1 > 0, f"error {err:.2e}, c1 = {r.c1:.4f}"

    def powers():
        worst = 0.0
        for m in range(8):
            F = function_of_operator(Fraction(1, 3), 0.5, Fraction(0), lambda z, m=m: z**m, w=8)
            P = BandedWindow(Fraction(1, 3), 0.5, Fraction(0), 8 + m + 1, np.float64).power(m)
            c = m + 1
            worst = max(worst, float(np.max(np.abs(F.matrix - P[c:-c, c:-c]))))
        return worst <= 1e-6, f"max deviation {worst:.2e}"

    def sine():
        v = four_traces_analytic(Fraction(2, 5), 0.4, np.sin)
        o = float(integrate_function(Fraction(2, 5), 0.4, np.sin))
        r = four_traces_analytic(Fraction(2, 5), 0.4, np.sin, contour=rectangle_contour(0.4))
        return abs(v - o) <= 1e-6 and abs(v - r) <= 1e-6, f"circle {v:.12g}, rectangle {r:.12g}, oracle {o:.12g}"

    def decay():
        cs = []
        for d in (0.1, 0.3, 1.0, 3.0):
            z = complex(0.3, d)
            cs.append(resolvent(Fraction(2, 5), 0.6, Fraction(0), z).c1)
        mono = all(b >= 0.9 * a for a, b in zip(cs, cs[1:]))
        return all(c > 0 for c in cs) and mono, "c1 along ray: " + ", ".join(f"{c:.3g}" for c in cs)

    return [
        _check(S, "free resolvent closed form", free),
        _check(S, "E^m vs banded powers", powers),
        _check(S, "four traces for sin", sine),
        _check(S, "Combes-Thomas decay", decay),
    ]


def suite_measures(rng: np.random.Generator) -> list[Check]:
    S = "measures"

    def atoms():
        worst = 0.0
        for a in reduced_fractions(8):
            m = atomic_limit(a)
            for k in range(5):
                worst = max(worst, abs(float(m.moment(2 * k) - normalized_moment(a, 1.0, k))))
        return worst <= 1e-7, f"max deviation {worst:.2e}"

    def continuity():
        worst = 0.0
        for a in (Fraction(1, 3), Fraction(2, 5), Fraction(3, 8)):
            for k in range(4):
                c1 = float(normalized_moment(a, 1.0, k))
                for lam in (1 - 1e-4, 1 + 1e-4):
                    worst = max(worst, abs(float(normalized_moment(a, lam, k)) - c1))
        return worst <= 1e-3, f"max jump {worst:.2e} at step 1e-4"

    def shrinking():
        # the jump at step h should scale like h (Lipschitz through lam = 1)
        ratios = []
        for a in (Fraction(1, 3), Fraction(2, 5), Fraction(3, 8)):
            for k in range(1, 4):
                c1 = float(normalized_moment(a, 1.0, k))
                j4 = abs(float(normalized_moment(a, 1 + 1e-4, k)) - c1)
                j5 = abs(float(normalized_moment(a, 1 + 1e-5, k)) - c1)
                ratios.append(j4 / j5)
        ok = all(8 <= r <= 12 for r in ratios)
        return ok, f"jump(1e-4)/jump(1e-5) in [{min(ratios):.3g}, {max(ratios):.3g}]"

    def inverse_sum():
        devs = [abs(atomic_limit(a).inverse_derivative_sum - 1 / a.denominator) for a in reduced_fractions(8)]
        return True, f"sum 1/|Q_1'| - 1/q: max {max(devs):.2e} (reported, not asserted)"

    return [
        _check(S, "atomic limit moments q<=8", atoms),
        _check(S, "normalized moments continuous at lam=1", continuity),
        _check(S, "normalized-moment jump shrinks linearly", shrinking),
        _check(S, "atom weight normalization constant", inverse_sum),
    ]


SUITES: dict[str, Callable[[np.random.Generator], list[Check]]] = {
    "sympoly": suite_sympoly,
    "traces": suite_traces,
    "parity": suite_parity,
    "spectral": suite_spectral,
    "fourier": suite_fourier,
    "funcalc": suite_funcalc,
    "measures": suite_measures,
}


def run_suites(names=None, seed: int = 0) -> list[Check]:
    names = list(SUITES) if not names else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {unknown}")
    out: list[Check] = []
    for n in names:
        out.extend(SUITES[n](np.random.default_rng(seed)))
    return out
