"""Shared value types: frequencies, couplings, phases, interval unions and
exact bivariate polynomials over the rationals.

Everything here is immutable.  Floating point only enters through
:func:`potential`, which evaluates the almost Mathieu potential with the
phase reduced exactly whenever the frequency and phase are rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Union

import numpy as np

__all__ = [
    "LD",
    "RationalFrequency",
    "Coupling",
    "Phase",
    "IntervalUnion",
    "BivariatePolynomial",
    "interval_union_measure",
    "poly_dual_transform",
    "as_frequency",
    "as_alpha",
    "as_phase_value",
    "potential",
    "two_pi",
]

LD = np.longdouble

Number = Union[int, float, Fraction]


def two_pi(dtype=np.float64):
    """2*pi rounded in ``dtype`` (np.pi is only a double)."""
    if np.dtype(dtype) == np.dtype(LD):
        return 8 * np.arctan(LD(1))
    return np.asarray(2 * np.pi, dtype=dtype)[()]


# ---------------------------------------------------------------------------
# frequency / coupling / phase
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class RationalFrequency:
    """Reduced fraction p/q with 0 <= p < q (or 0/1)."""

    p: int
    q: int

    def __post_init__(self):
        p, q = int(self.p), int(self.q)
        if q < 1:
            raise ValueError(f"denominator must be positive, got {q}")
        p %= q
        g = math.gcd(p, q)
        object.__setattr__(self, "p", p // g)
        object.__setattr__(self, "q", q // g)

    @classmethod
    def parse(cls, text: str) -> "RationalFrequency":
        if "/" not in text:
            raise ValueError(f"expected 'p/q', got {text!r}")
        num, den = text.split("/", 1)
        return cls(int(num), int(den))

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.p, self.q)

    def __float__(self) -> float:
        return self.p / self.q

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"

    @property
    def theta_plus(self) -> Fraction:
        """The phase maximising the period trace: alpha/2 for odd p, (1+alpha)/2 otherwise."""
        a = self.fraction
        th = a / 2 if self.p % 2 else (1 + a) / 2
        # -theta_+ == theta_+ - alpha (mod 1)
        assert ((th - a) + th) % 1 == 0
        return th % 1


def as_frequency(alpha) -> RationalFrequency:
    """Coerce ``alpha`` to an exact frequency.  Floats are rejected."""
    if isinstance(alpha, RationalFrequency):
        return alpha
    if isinstance(alpha, str):
        return RationalFrequency.parse(alpha)
    if isinstance(alpha, Rational):
        f = Fraction(alpha)
        return RationalFrequency(f.numerator, f.denominator)
    if isinstance(alpha, tuple) and len(alpha) == 2:
        return RationalFrequency(*alpha)
    raise TypeError(f"rational frequency required, got {alpha!r}")


def as_alpha(alpha):
    """Exact frequency if possible, otherwise a float (irrational alpha allowed)."""
    if isinstance(alpha, (float, np.floating)):
        return float(alpha)
    if isinstance(alpha, str) and "/" not in alpha:
        return float(alpha)
    return as_frequency(alpha)


@dataclass(frozen=True)
class Coupling:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not v >= 0:
            raise ValueError(f"coupling must be nonnegative, got {self.value}")
        object.__setattr__(self, "value", v)

    @property
    def regime(self) -> str:
        if self.value < 1:
            return "subcritical"
        if self.value == 1:
            return "critical"
        return "supercritical"

    def __float__(self):
        return self.value


def _lam(lam) -> float:
    return Coupling(float(lam)).value


@dataclass(frozen=True)
class Phase:
    """Phase modulo 1; exact (Fraction) when built from rationals."""

    value: Union[Fraction, float]

    def __post_init__(self):
        v = self.value
        if isinstance(v, (float, np.floating)):
            v = float(v) % 1.0
        else:
            v = Fraction(v) % 1
        object.__setattr__(self, "value", v)

    def __float__(self):
        return float(self.value)

    @staticmethod
    def distinguished(alpha) -> dict[str, "Phase"]:
        """The four reflection-symmetric phases {0, a/2, 1/2, (1+a)/2}."""
        a = as_alpha(alpha)
        a = a.fraction if isinstance(a, RationalFrequency) else a
        return {
            "0": Phase(Fraction(0)),
            "alpha/2": Phase(a / 2),
            "1/2": Phase(Fraction(1, 2)),
            "(1+alpha)/2": Phase((1 + a) / 2),
        }


def as_phase_value(theta):
    if isinstance(theta, Phase):
        return theta.value
    return Phase(theta).value


def potential(lam, alpha, theta, n, dtype=np.float64):
    """2*lam*cos(2*pi*(theta + n*alpha)) for an integer array ``n``.

    With rational alpha and theta the phase is reduced modulo 1 exactly in
    integers before the cosine, so large ``n`` costs no accuracy.
    """
    n = np.asarray(n, dtype=np.int64)
    a = as_alpha(alpha)
    th = as_phase_value(theta)
    lam = np.asarray(lam, dtype=dtype)[()]
    if isinstance(a, RationalFrequency) and isinstance(th, Fraction):
        den = a.q * th.denominator
        num = (th.numerator * a.q + n * (a.p * th.denominator)) % den
        x = num.astype(dtype) / dtype(den)
    else:
        af = float(a)
        x = np.mod(dtype(float(th)) + n.astype(dtype) * dtype(af), dtype(1))
    return 2 * lam * np.cos(two_pi(dtype) * x)


# ---------------------------------------------------------------------------
# interval unions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted union of disjoint closed intervals.

    Overlapping or touching intervals are merged at construction; ``tol``
    merges across gaps narrower than it.
    """

    intervals: tuple = ()

    def __init__(self, intervals: Iterable = (), tol: float = 0.0):
        items = sorted((float(a), float(b)) for a, b in intervals)
        merged: list[list[float]] = []
        for a, b in items:
            if b < a:
                raise ValueError(f"interval with b < a: [{a}, {b}]")
            if merged and a <= merged[-1][1] + tol:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        object.__setattr__(self, "intervals", tuple((a, b) for a, b in merged))

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    @property
    def measure(self) -> float:
        return math.fsum(b - a for a, b in self.intervals)

    def normalized(self, tol: float = 0.0) -> "IntervalUnion":
        return IntervalUnion(self.intervals, tol=tol)

    def scaled(self, c: float) -> "IntervalUnion":
        c = float(c)
        return IntervalUnion((min(c * a, c * b), max(c * a, c * b)) for a, b in self.intervals)

    def clip(self, lo: float, hi: float) -> "IntervalUnion":
        out = []
        for a, b in self.intervals:
            a2, b2 = max(a, lo), min(b, hi)
            if a2 <= b2:
                out.append((a2, b2))
        return IntervalUnion(out)

    def contains_point(self, x: float, slack: float = 0.0) -> bool:
        return any(a - slack <= x <= b + slack for a, b in self.intervals)

    def issubset(self, other: "IntervalUnion", slack: float = 0.0) -> bool:
        """Every interval of ``self`` lies inside one interval of ``other``."""
        return all(
            any(c - slack <= a and b <= d + slack for c, d in other.intervals)
            for a, b in self.intervals
        )

    def symmetric_difference_measure(self, other: "IntervalUnion") -> float:
        """Lebesgue measure of (self \\ other) | (other \\ self)."""
        points = sorted({x for iv in self.intervals + other.intervals for x in iv})
        total = 0.0
        for lo, hi in zip(points[:-1], points[1:]):
            mid = 0.5 * (lo + hi)
            if self.contains_point(mid) != other.contains_point(mid):
                total += hi - lo
        return total

    @property
    def bounds(self) -> tuple[float, float]:
        if not self.intervals:
            raise ValueError("empty union")
        return self.intervals[0][0], self.intervals[-1][1]


def interval_union_measure(u: IntervalUnion) -> float:
    return u.measure


# ---------------------------------------------------------------------------
# exact bivariate polynomials
# ---------------------------------------------------------------------------


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, Rational):
        return Fraction(x)
    raise TypeError(f"exact rational required, got {type(x).__name__}")


@dataclass(frozen=True)
class BivariatePolynomial:
    """Polynomial sum q[j, r] * lam**j * t**r with exact rational coefficients.

    The second variable is ``t = cos(2*pi*alpha)`` by default; ``names`` only
    affects printing.  Zero coefficients are never stored.
    """

    coefficients: Mapping = field(default_factory=dict)
    names: tuple = ("lam", "t")

    def __post_init__(self):
        clean = {}
        for (j, r), v in dict(self.coefficients).items():
            if j < 0 or r < 0:
                raise ValueError(f"negative exponent {(j, r)}")
            v = _frac(v)
            if v:
                clean[(int(j), int(r))] = v
        object.__setattr__(self, "coefficients", dict(sorted(clean.items())))

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, c, names=("lam", "t")):
        return cls({(0, 0): c}, names)

    @classmethod
    def lam(cls, names=("lam", "t")):
        return cls({(1, 0): 1}, names)

    @classmethod
    def t(cls, names=("lam", "t")):
        return cls({(0, 1): 1}, names)

    # structure --------------------------------------------------------
    def __hash__(self):
        return hash(tuple(self.coefficients.items()))

    def __eq__(self, other):
        if not isinstance(other, BivariatePolynomial):
            try:
                other = self._coerce(other)
            except TypeError:
                return NotImplemented
        return self.coefficients == other.coefficients

    def __bool__(self):
        return bool(self.coefficients)

    def is_zero(self) -> bool:
        return not self.coefficients

    @property
    def degree_lambda(self) -> int:
        return max((j for j, _ in self.coefficients), default=-1)

    @property
    def degree_t(self) -> int:
        return max((r for _, r in self.coefficients), default=-1)

    def coefficient(self, j: int, r: int) -> Fraction:
        return self.coefficients.get((j, r), Fraction(0))

    def lambda_coefficient(self, j: int) -> dict[int, Fraction]:
        """Coefficient of lam**j as a {t-degree: value} map."""
        return {r: v for (jj, r), v in self.coefficients.items() if jj == j}

    # ring operations --------------------------------------------------
    def _coerce(self, other) -> "BivariatePolynomial":
        if isinstance(other, BivariatePolynomial):
            return other
        return BivariatePolynomial({(0, 0): _frac(other)}, self.names)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.coefficients)
        for k, v in other.coefficients.items():
            out[k] = out.get(k, 0) + v
        return BivariatePolynomial(out, self.names)

    __radd__ = __add__

    def __neg__(self):
        return BivariatePolynomial({k: -v for k, v in self.coefficients.items()}, self.names)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for (j1, r1), v1 in self.coefficients.items():
            for (j2, r2), v2 in other.coefficients.items():
                k = (j1 + j2, r1 + r2)
                out[k] = out.get(k, 0) + v1 * v2
        return BivariatePolynomial(out, self.names)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = BivariatePolynomial.constant(1, self.names)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c) -> "BivariatePolynomial":
        c = _frac(c)
        return BivariatePolynomial({k: c * v for k, v in self.coefficients.items()}, self.names)

    def divide_by_one_minus_lambda(self) -> "BivariatePolynomial":
        """Exact quotient by (1 - lam); raises ArithmeticError on a remainder."""
        out: dict = {}
        for r in {r for _, r in self.coefficients}:
            # synthetic division of sum_j a_j lam^j by (lam - 1), then negate
            a = [self.coefficient(j, r) for j in range(self.degree_lambda + 1)]
            quot = [Fraction(0)] * max(len(a) - 1, 0)
            carry = Fraction(0)
            for j in range(len(a) - 1, 0, -1):
                carry = a[j] + carry
                quot[j - 1] = carry
            remainder = a[0] + carry if a else Fraction(0)
            if remainder != 0:
                raise ArithmeticError(f"(1 - lam) does not divide the t^{r} part (remainder {remainder})")
            for j, v in enumerate(quot):
                if v:
                    out[(j, r)] = -v
        return BivariatePolynomial(out, self.names)

    # evaluation -------------------------------------------------------
    def __call__(self, lam, t):
        return self.evaluate(lam, t)

    def evaluate(self, lam, t):
        """Evaluate by nested Horner; exact for Fraction inputs.

        Float-like inputs keep their type, so numpy longdouble arguments give
        an extended precision result.
        """
        if not self.coefficients:
            return 0 * lam * t
        exact = isinstance(lam, (Fraction, int)) and isinstance(t, (Fraction, int))
        conv = (lambda v: v) if exact else (lambda v: _to_like(v, lam, t))
        total = 0 * lam * t
        for j in range(self.degree_lambda, -1, -1):
            row = self.lambda_coefficient(j)
            inner = 0 * t
            for r in range(max(row, default=0), -1, -1):
                inner = inner * t + conv(row.get(r, 0))
            total = total * lam + inner
        return total

    # duality / printing -----------------------------------------------
    def dual(self, d: int) -> "BivariatePolynomial":
        return poly_dual_transform(self, d)

    def to_json(self) -> dict[str, str]:
        return {f"{j},{r}": f"{v.numerator}/{v.denominator}" for (j, r), v in self.coefficients.items()}

    @classmethod
    def from_json(cls, data: Mapping[str, str], names=("lam", "t")):
        coeffs = {}
        for key, v in data.items():
            j, r = (int(s) for s in key.split(","))
            coeffs[(j, r)] = Fraction(v)
        return cls(coeffs, names)

    def __str__(self):
        if not self.coefficients:
            return "0"
        lname, tname = self.names
        terms = []
        for j in range(self.degree_lambda, -1, -1):
            row = self.lambda_coefficient(j)
            if not row:
                continue
            inner = " + ".join(
                _mono(v, tname, r) for r, v in sorted(row.items(), reverse=True)
            ).replace("+ -", "- ")
            lam_part = "" if j == 0 else (f"*{lname}" if j == 1 else f"*{lname}^{j}")
            terms.append(f"({inner}){lam_part}")
        return " + ".join(terms)

    def __repr__(self):
        return f"BivariatePolynomial({self!s})"


def _mono(v: Fraction, name: str, r: int) -> str:
    c = str(v)
    if r == 0:
        return c
    var = name if r == 1 else f"{name}^{r}"
    if v == 1:
        return var
    if v == -1:
        return f"-{var}"
    return f"{c}*{var}"


def _to_like(v: Fraction, lam, t):
    """Convert a Fraction to the float type of the evaluation point."""
    for x in (lam, t):
        if isinstance(x, np.ndarray):
            dt = x.dtype
            return dt.type(v.numerator) / dt.type(v.denominator)
        if isinstance(x, np.floating):
            return type(x)(v.numerator) / type(x)(v.denominator)
    return float(v)


def poly_dual_transform(P: BivariatePolynomial, d: int) -> BivariatePolynomial:
    """-lam**d * P(1/lam, t); requires deg_lam(P) <= d."""
    if P.degree_lambda > d:
        raise ValueError(f"lambda degree {P.degree_lambda} exceeds {d}")
    return BivariatePolynomial({(d - j, r): -v for (j, r), v in P.coefficients.items()}, P.names)
