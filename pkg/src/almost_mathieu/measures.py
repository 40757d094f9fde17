"""The intersection-spectrum measure mu^- (Lebesgue measure on Sigma^-) and
its normalisation mu~ = mu^- / |4 - 4 lam|.

Band-wise closed-form integration over the ordered bands is the reference
("oracle") against which the trace formulas and the moment polynomials are
checked.  At lam = 1, where Sigma^- collapses to q points, mu~ becomes an
atomic measure on the roots of Q_1; see :func:`atomic_limit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .cocycle import chambers_polynomial, trace_and_derivative
from .core import LD, RationalFrequency, as_alpha, as_frequency
from .spectral import OrderedBandList, chambers_preimage, intersection_spectrum, spectrum_union
from .sympoly import evaluate_moment, evaluate_normalized_moment

__all__ = [
    "SpectralMeasure",
    "AtomicMeasure",
    "spectral_measure",
    "integrate_monomial",
    "integrate_function",
    "normalized_moment",
    "atomic_limit",
    "gap_measure",
    "continued_fraction_convergents",
    "uniform_limit_moment",
    "convergence_experiment",
]


@dataclass(frozen=True)
class SpectralMeasure:
    """Lebesgue measure restricted to Sigma^- for rational alpha."""

    bands: OrderedBandList

    @property
    def regime(self) -> str:
        return self.bands.regime

    @property
    def total_mass(self) -> float:
        return self.bands.measure

    def integrate(self, Phi: Callable) -> object:
        """Integral of Phi' given the antiderivative Phi: sum of band increments."""
        e = self.bands.endpoints
        return np.sum(Phi(e[:, 1]) - Phi(e[:, 0]))

    def moment(self, k: int) -> object:
        """c_k = integral of E^k."""
        e = self.bands.endpoints
        return np.sum(e[:, 1] ** (k + 1) - e[:, 0] ** (k + 1)) / (k + 1)


def spectral_measure(alpha, lam) -> SpectralMeasure:
    return SpectralMeasure(intersection_spectrum(alpha, lam))


def integrate_monomial(alpha, lam, k: int):
    """c_k(alpha, lam) = sum over bands of (b^{k+1} - a^{k+1}) / (k+1), extended precision."""
    return spectral_measure(alpha, lam).moment(k)


def integrate_function(alpha, lam, Phi: Callable):
    """Integral of Phi' over Sigma^-, from the antiderivative ``Phi``."""
    return spectral_measure(alpha, lam).integrate(Phi)


def normalized_moment(alpha, lam, k: int):
    """c~_{2k} = c_{2k} / |4 - 4 lam|.

    Rational alpha away from lam = 1 uses band integration.  At lam = 1 (and
    for irrational alpha) the exactly divided polynomial P_{2k} / (4(1-lam))
    is evaluated instead.
    """
    lam = float(lam)
    a = as_alpha(alpha)
    if isinstance(a, RationalFrequency) and lam != 1:
        return integrate_monomial(a, lam, 2 * k) / LD(abs(4 - 4 * lam))
    return evaluate_normalized_moment(k, a, lam)


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite sum of point masses w_j delta_{E_j}.

    ``inverse_derivative_sum`` keeps sum_j 1/|Q_1'(E_j)| before normalising,
    so the constant relating it to q can be read off.
    """

    energies: np.ndarray
    weights: np.ndarray
    inverse_derivative_sum: float

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return [(float(e), float(w)) for e, w in zip(self.energies, self.weights)]

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def moment(self, k: int):
        return np.sum(self.weights * self.energies ** (k))


def atomic_limit(alpha, dtype=LD) -> AtomicMeasure:
    """mu~ at lam = 1: atoms at the q roots of Q_1 with weights proportional
    to 1/|Q_1'|, normalised to total mass 1."""
    a = as_frequency(alpha)
    cp = chambers_polynomial(a, 1.0)
    roots = np.array([lo for lo, _ in chambers_preimage(cp, 0.0, 0.0)], dtype=np.float64)
    if len(roots) != a.q:
        raise ArithmeticError(f"found {len(roots)} roots of Q_1 for alpha={a}, expected {a.q}")
    # polish each root with a few Newton steps in extended precision
    E = roots.astype(dtype)
    for _ in range(3):
        tr, dtr = trace_and_derivative(a, 1.0, Fraction(0), E, dtype=dtype)
        E = E - (tr + 2) / dtr
    _, dQ = trace_and_derivative(a, 1.0, Fraction(0), E, dtype=dtype)
    if np.any(np.abs(dQ) < 1e-10):
        raise ArithmeticError(f"degenerate root of Q_1 for alpha={a}")
    inv = 1 / np.abs(dQ)
    s = np.sum(inv)
    return AtomicMeasure(E, inv / s, float(s))


def gap_measure(alpha, lam, E_lo: float, E_hi: float) -> float:
    """|Sigma^- cap [E_lo, E_hi]|; both ends must lie in gaps of Sigma^+."""
    a = as_frequency(alpha)
    if E_hi < E_lo:
        raise ValueError("E_hi must be >= E_lo")
    plus = spectrum_union(a, lam)
    for x in (E_lo, E_hi):
        if plus.contains_point(x):
            raise ValueError(f"energy {x} lies in Sigma^+; the quantity is not gap-stable there")
    e = intersection_spectrum(a, lam).endpoints
    lo = np.clip(e[:, 0], LD(E_lo), LD(E_hi))
    hi = np.clip(e[:, 1], LD(E_lo), LD(E_hi))
    return float(np.sum(hi - lo))


# ---------------------------------------------------------------------------
# convergence experiments
# ---------------------------------------------------------------------------


def continued_fraction_convergents(x: float, n: int) -> list[Fraction]:
    """First ``n`` continued-fraction convergents of ``x`` (in [0, 1))."""
    out = []
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    y = x
    for _ in range(n):
        a = math.floor(y)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append(Fraction(h1, k1))
        frac = y - a
        if frac < 1e-15:
            break
        y = 1 / frac
    return out


def uniform_limit_moment(lam: float, k: int) -> float:
    """c_{2k} of Lebesgue measure on [-2|1-lam|, 2|1-lam|]: 2 a^{2k+1} / (2k+1)."""
    a = 2 * abs(1 - lam)
    return 2 * a ** (2 * k + 1) / (2 * k + 1)


def convergence_experiment(
    target,
    sequence: str | Sequence,
    lam: float,
    k_max: int,
    n_max: int = 64,
) -> list[dict]:
    """Moments c_{2k}(alpha_n, lam) along a sequence alpha_n -> target.

    ``sequence`` is ``"reciprocal"`` (alpha_n = 1/n, n = 2..n_max, target 0),
    ``"convergents"`` (continued-fraction convergents of ``target``, at most
    ``n_max`` of them), or an explicit list of frequencies.  The limit is
    the uniform-measure moment for the reciprocal sequence and the moment
    polynomial at ``target`` otherwise.  Rows are plain dicts for CSV/JSON.
    """
    lam = float(lam)
    if lam == 1:
        raise ValueError("lam must differ from 1")
    if sequence == "reciprocal":
        alphas = [Fraction(1, n) for n in range(2, n_max + 1)]
        limits = {k: uniform_limit_moment(lam, k) for k in range(k_max + 1)}
        target_label = "0"
    else:
        if sequence == "convergents":
            alphas = continued_fraction_convergents(float(target), n_max)
        else:
            alphas = [Fraction(x) if not isinstance(x, RationalFrequency) else x.fraction for x in sequence]
        limits = {k: float(evaluate_moment(k, as_alpha(target), lam)) for k in range(k_max + 1)}
        target_label = str(target)
    rows = []
    for idx, a in enumerate(alphas):
        a = Fraction(a) % 1
        bands = spectral_measure(a, lam)
        for k in range(k_max + 1):
            value = float(bands.moment(2 * k))
            rows.append(
                {
                    "n": idx + 1 if sequence != "reciprocal" else a.denominator,
                    "alpha": f"{a.numerator}/{a.denominator}",
                    "target": target_label,
                    "lambda": lam,
                    "k": k,
                    "value": value,
                    "limit": limits[k],
                    "diff": abs(value - limits[k]),
                    "method": "bands",
                }
            )
    return rows
