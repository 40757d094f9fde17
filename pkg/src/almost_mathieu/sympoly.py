"""Exact moment polynomials P_{2k}(lam, t) and T_{2k}(lam, t), t = cos(2 pi alpha).

With c = cos(pi alpha) the diagonal entries of H at the phases 0 and
alpha/2 are 2 lam T_{n'}(c) with n' = 2n and n' = 2n+1 respectively
(T_m the Chebyshev polynomials).  Writing u = exp(i pi alpha) this is
lam (u^{n'} + u^{-n'}), so every entry of a power of H is an integer
Laurent polynomial in u and a polynomial in lam.  Powers are propagated in
that representation, reflected traces are summed, and the result is
converted to c-monomials, checked to be even in c, and rewritten in t via
c^2 = (1 + t)/2.  All arithmetic is exact.

The four reflected traces reduce to two: negating the potential
(theta -> theta + 1/2) maps lam -> -lam, and for odd powers
tr_{1/2} = -tr_0, tr_{(1+alpha)/2} = tr_{alpha/2}.  Hence

    P_{2k} = 2 (tr_{alpha/2} - tr_0) / (2k+1),    T_{2k} = tr_{alpha/2} / 2^{2k+1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .core import LD, BivariatePolynomial, RationalFrequency, as_alpha, two_pi

__all__ = [
    "ChebyshevEntry",
    "SymbolicWindow",
    "chebyshev_t_coefficients",
    "symbolic_trace",
    "symbolic_moment",
    "symbolic_T",
    "symbolic_normalized_moment",
    "odd_moment_polynomial",
    "verify_duality",
    "evaluate_moment",
    "evaluate_normalized_moment",
    "cos_two_pi",
]


@lru_cache(maxsize=None)
def chebyshev_t_coefficients(m: int) -> tuple:
    """Integer monomial coefficients of T_m, lowest degree first."""
    if m == 0:
        return (1,)
    if m == 1:
        return (0, 1)
    a = list(chebyshev_t_coefficients(m - 2)) + [0, 0]
    b = [0] + [2 * x for x in chebyshev_t_coefficients(m - 1)]
    return tuple(bb - aa for aa, bb in zip(a, b))


@dataclass(frozen=True)
class ChebyshevEntry:
    """lam^d * 2 T_m(c) for d = 1 (a potential entry) or the constant 1 (d = 0, m = 0)."""

    lam_degree: int
    index: int

    def monomials(self) -> dict:
        """{(lam degree, c degree): integer coefficient}."""
        if self.lam_degree == 0:
            return {(0, 0): 1}
        return {(self.lam_degree, r): 2 * v for r, v in enumerate(chebyshev_t_coefficients(self.index)) if v}

    def __call__(self, lam, alpha) -> float:
        """Numeric value at c = cos(pi alpha)."""
        if self.lam_degree == 0:
            return 1.0
        return 2 * lam * np.cos(self.index * np.pi * float(alpha))


@dataclass(frozen=True)
class SymbolicWindow:
    """Sites -W..W of H at phase 0 ('0') or alpha/2 ('alpha/2') over Z[lam, c]."""

    W: int
    phase: str

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.W, self.W + 1)

    @property
    def harmonics(self) -> np.ndarray:
        """n' with V_n = 2 lam cos(n' pi alpha)."""
        n = self.sites
        if self.phase == "0":
            return 2 * n
        if self.phase == "alpha/2":
            return 2 * n + 1
        raise ValueError(f"phase must be '0' or 'alpha/2', got {self.phase!r}")

    def diagonal(self) -> list[ChebyshevEntry]:
        return [ChebyshevEntry(1, abs(int(h))) for h in self.harmonics]

    @property
    def center(self) -> int:
        return 0 if self.phase == "0" else -1


def _propagate_column(window: SymbolicWindow, start: int, m: int) -> np.ndarray:
    """Column H^m e_start as an integer array [site, lam degree, u exponent + E]."""
    S = 2 * window.W + 1
    h = window.harmonics
    E = m * int(np.max(np.abs(h)))
    U = 2 * E + 1
    v = np.zeros((S, m + 1, U), dtype=np.int64)
    v[start + window.W, 0, E] = 1
    for _ in range(m):
        new = np.zeros_like(v)
        new[1:] += v[:-1]
        new[:-1] += v[1:]
        # potential: lam (u^h + u^-h) times the current entry
        for i in range(S):
            s = abs(int(h[i]))
            src = v[i, :-1]
            if s == 0:
                new[i, 1:] += 2 * src
                continue
            new[i, 1:, s:] += src[:, : U - s]
            new[i, 1:, : U - s] += src[:, s:]
        v = new
    return v


def symbolic_trace(k_power: int, phase: str, W: int | None = None) -> np.ndarray:
    """tr(H^m R) at phase '0' or 'alpha/2' as an integer Laurent array
    [lam degree, u exponent + E], m = ``k_power``."""
    m = k_power
    if m > 24:
        raise ValueError("power too large for 64-bit path counts")
    if W is None:
        # a walk of length m between j and c - j (|j| <= (m+1)/2 + 1) never
        # leaves |n| <= m + 1, so the zero boundary beyond it is invisible
        W = m + 1
    win = SymbolicWindow(W, phase)
    c = win.center
    E = m * int(np.max(np.abs(win.harmonics)))
    total = np.zeros((m + 1, 2 * E + 1), dtype=np.int64)
    half = (m + 1) // 2 + 1
    for j in range(-half, half + 1):
        start = c - j
        if abs(2 * j - c) > m or abs(start) > W or abs(j) > W:
            continue
        col = _propagate_column(win, start, m)
        total += col[j + W]
    return total


def _laurent_to_c(arr: np.ndarray) -> dict:
    """Symmetric Laurent array -> {(lam degree, c degree): int} via u^e + u^-e = 2 T_e(c)."""
    L, U = arr.shape
    E = (U - 1) // 2
    if not np.array_equal(arr, arr[:, ::-1]):
        raise ArithmeticError("trace is not symmetric under alpha -> -alpha")
    out: dict = {}
    for d in range(L):
        row = arr[d]
        if not row.any():
            continue
        for e in range(0, E + 1):
            a = int(row[E + e])
            if a == 0:
                continue
            if e == 0:
                out[(d, 0)] = out.get((d, 0), 0) + a
                continue
            for r, v in enumerate(chebyshev_t_coefficients(e)):
                if v:
                    out[(d, r)] = out.get((d, r), 0) + 2 * a * v
    return {key: v for key, v in out.items() if v}


def _c_to_t(cpoly: dict) -> BivariatePolynomial:
    """Substitute c^2 = (1+t)/2 after asserting every c-power is even."""
    odd = [key for key, v in cpoly.items() if key[1] % 2 and v]
    if odd:
        raise ArithmeticError(f"odd powers of cos(pi alpha) survive: {sorted(odd)[:5]}")
    out: dict = {}
    for (d, r2), v in cpoly.items():
        r = r2 // 2
        scale = Fraction(v, 2**r)
        for i in range(r + 1):
            key = (d, i)
            out[key] = out.get(key, 0) + scale * comb(r, i)
    return BivariatePolynomial(out)


def _trace_poly(m: int, phase: str, negate_lam: bool = False) -> BivariatePolynomial:
    arr = symbolic_trace(m, phase)
    cpoly = _laurent_to_c(arr)
    if negate_lam:
        cpoly = {(d, r): (-v if d % 2 else v) for (d, r), v in cpoly.items()}
    return _c_to_t(cpoly)


@lru_cache(maxsize=None)
def symbolic_moment(k: int) -> BivariatePolynomial:
    """P_{2k}(lam, t): equals c_{2k} for lam < 1 and -c_{2k} for lam > 1."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    m = 2 * k + 1
    P = (_trace_poly(m, "alpha/2") - _trace_poly(m, "0")).scale(Fraction(2, m))
    lead = P.lambda_coefficient(m)
    expected = Fraction(-(2 ** (2 * k + 2)), m)
    if lead != {0: expected}:
        raise ArithmeticError(f"leading lam-coefficient {lead} != {expected}")
    return P


@lru_cache(maxsize=None)
def symbolic_T(k: int) -> BivariatePolynomial:
    """T_{2k} = tr(H^{2k+1}_{alpha/2} R_{alpha/2}) / 2^{2k+1}."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    m = 2 * k + 1
    return _trace_poly(m, "alpha/2").scale(Fraction(1, 2**m))


def odd_moment_polynomial(k: int) -> BivariatePolynomial:
    """The four-traces combination for the even power 2k, in (lam, c).

    tr_{(1+a)/2} + tr_{a/2} + tr_{1/2} - tr_0 with lam -> -lam for the two
    shifted phases.  For an even power the individual traces contain odd
    powers of c, so no reduction to t is attempted; the sum (the odd moment
    c_{2k-1} times 2k) vanishes identically.
    """
    m = 2 * k
    ta = _laurent_to_c(symbolic_trace(m, "alpha/2"))
    t0 = _laurent_to_c(symbolic_trace(m, "0"))
    out: dict = {}
    for (d, r), v in ta.items():
        out[(d, r)] = out.get((d, r), 0) + v + (-v if d % 2 else v)
    for (d, r), v in t0.items():
        out[(d, r)] = out.get((d, r), 0) + (-v if d % 2 else v) - v
    return BivariatePolynomial(out, names=("lam", "c"))


def symbolic_normalized_moment(k: int) -> BivariatePolynomial:
    """P_{2k} / (4 (1 - lam)), exactly; the moment of the normalised measure."""
    return symbolic_moment(k).divide_by_one_minus_lambda().scale(Fraction(1, 4))


def verify_duality(k: int) -> bool:
    """Exact check of P_{2k}(lam) = -lam^{2k+1} P_{2k}(1/lam)."""
    P = symbolic_moment(k)
    return P.dual(2 * k + 1) == P


def cos_two_pi(alpha, dtype=LD):
    """cos(2 pi alpha), with exact reduction for rational alpha."""
    a = as_alpha(alpha)
    if isinstance(a, RationalFrequency):
        x = dtype(a.p) / dtype(a.q)
    else:
        x = dtype(a % 1.0)
    return np.cos(two_pi(dtype) * x)


def evaluate_moment(k: int, alpha, lam, dtype=LD):
    """c_{2k}(alpha, lam) = +-P_{2k}(lam, cos 2 pi alpha) (minus for lam > 1)."""
    t = cos_two_pi(alpha, dtype)
    lam_d = dtype(lam)
    val = symbolic_moment(k).evaluate(lam_d, t)
    return -val if float(lam) > 1 else val


def evaluate_normalized_moment(k: int, alpha, lam, dtype=LD):
    """Moment of mu~ = mu^- / |4 - 4 lam|, continuous through lam = 1."""
    t = cos_two_pi(alpha, dtype)
    return symbolic_normalized_moment(k).evaluate(dtype(lam), t)
