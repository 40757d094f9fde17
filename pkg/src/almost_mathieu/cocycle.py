"""Transfer matrices of the almost Mathieu cocycle and the Chambers polynomial.

For a rational frequency p/q the trace of the period-q transfer matrix
splits into a phase part and an energy part,

    tr T_{q,theta}(E) = -2 lam^q cos(2 pi q theta) + Q(E),

with Q monic of degree q.  :func:`chambers_polynomial` recovers Q from
traces at Chebyshev nodes; :func:`trace_and_derivative` evaluates traces
directly (vectorised over energies) and is what root finders should use.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial import Chebyshev

from .core import LD, RationalFrequency, as_alpha, as_frequency, as_phase_value, potential

__all__ = [
    "TransferMatrix",
    "ChambersPolynomial",
    "transfer_matrix",
    "trace",
    "trace_and_derivative",
    "trace_with_condition",
    "chambers_polynomial",
    "chambers_theta_spread",
]


@dataclass(frozen=True)
class TransferMatrix:
    """A 2x2 cocycle product; ``matrix`` may be real or complex."""

    matrix: np.ndarray

    @property
    def trace(self):
        return self.matrix[0, 0] + self.matrix[1, 1]

    @property
    def det(self):
        m = self.matrix
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def _step_dtype(E, dtype):
    if np.iscomplexobj(E):
        return np.clongdouble if np.dtype(dtype) == np.dtype(LD) else np.complex128
    return dtype


def transfer_matrix(alpha, lam, theta, E, n: int, dtype=np.float64) -> TransferMatrix:
    """T_{n,theta}(E) = Pi_{theta+(n-1)alpha} ... Pi_theta with
    Pi_theta = [[E - V(theta), -1], [1, 0]].

    ``alpha`` may be a float (irrational frequency); ``E`` may be complex.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    V = potential(lam, alpha, theta, np.arange(n), dtype)
    ct = _step_dtype(E, dtype)
    E = np.asarray(E, dtype=ct)[()]
    T = np.eye(2, dtype=ct)
    for v in V:
        Pi = np.array([[E - v, -1], [1, 0]], dtype=ct)
        T = Pi @ T
    return TransferMatrix(T)


def _propagate(alpha, lam, theta, E, n, dtype):
    a = as_alpha(alpha)
    if n is None:
        n = as_frequency(a).q
    V = potential(lam, a, theta, np.arange(n), dtype)
    E = np.asarray(E)
    ct = _step_dtype(E, dtype)
    E = E.astype(ct)
    one = np.ones_like(E)
    zero = np.zeros_like(E)
    # T = [[a, b], [c, d]], left-multiplied by Pi at every step
    ta, tb, tc, td = one, zero, zero, one
    da, db, dc, dd = zero, zero, zero, zero
    for v in V:
        x = E - v
        da, db, dc, dd = ta + x * da - dc, tb + x * db - dd, da, db
        ta, tb, tc, td = x * ta - tc, x * tb - td, ta, tb
    return (ta, tb, tc, td), (da, db, dc, dd)


def trace_and_derivative(alpha, lam, theta, E, n: int | None = None, dtype=np.float64):
    """Traces tr T_{n,theta}(E) and their E-derivatives for an array of energies.

    ``n`` defaults to the denominator q of a rational ``alpha``.  The
    product is propagated entrywise so the cost is O(n * len(E)).
    """
    (ta, _, _, td), (da, _, _, dd) = _propagate(alpha, lam, theta, E, n, dtype)
    return ta + td, da + dd


def trace_with_condition(alpha, lam, theta, E, n: int | None = None, dtype=np.float64):
    """Trace, E-derivative and a condition number of tr T_n(E).

    The condition number is sum_k |T_{n<-k+1}| |T_{k<-0}| (max-entry norms
    of the partial products on either side of factor k).  Perturbing one
    factor by eps moves the trace by at most about eps times this, so it
    bounds both the rounding error of the trace and the trace change caused
    by an energy error -- partial products may grow far beyond the final
    product when the cocycle is hyperbolic.
    """
    a = as_alpha(alpha)
    if n is None:
        n = as_frequency(a).q
    V = potential(lam, a, theta, np.arange(n), dtype)
    E = np.asarray(E)
    ct = _step_dtype(E, dtype)
    E = E.astype(ct)

    def size(m):
        return np.maximum.reduce([np.abs(x) for x in m])

    # forward partial products P_k = Pi_{k-1} ... Pi_0
    fwd = []
    ta, tb, tc, td = np.ones_like(E), np.zeros_like(E), np.zeros_like(E), np.ones_like(E)
    for v in V:
        fwd.append(size((ta, tb, tc, td)))
        x = E - v
        ta, tb, tc, td = x * ta - tc, x * tb - td, ta, tb
    # backward partial products B_k = Pi_{n-1} ... Pi_{k+1}, right-multiplied
    cond = np.zeros(E.shape, dtype=fwd[0].dtype if fwd else np.float64)
    ba, bb, bc, bd = np.ones_like(E), np.zeros_like(E), np.zeros_like(E), np.ones_like(E)
    for k in range(n - 1, -1, -1):
        cond = cond + size((ba, bb, bc, bd)) * fwd[k]
        x = E - V[k]
        # B <- B @ [[x, -1], [1, 0]]
        ba, bb, bc, bd = ba * x + bb, -ba, bc * x + bd, -bc
    tr, dtr = trace_and_derivative(a, lam, theta, E, n, dtype)
    return tr, dtr, cond


def trace(alpha, lam, theta, E, n: int | None = None, dtype=np.float64):
    return trace_and_derivative(alpha, lam, theta, E, n, dtype)[0]


@dataclass(frozen=True)
class ChambersPolynomial:
    """The energy part Q of the period-q trace for fixed (p/q, lam).

    ``chebyshev`` is the interpolant on [-(2+2 lam), 2+2 lam]; calling the
    object evaluates Q directly from the transfer matrix (more accurate
    than the interpolant for large q).
    """

    alpha: RationalFrequency
    lam: float
    chebyshev: Chebyshev

    @property
    def q(self) -> int:
        return self.alpha.q

    @property
    def degree(self) -> int:
        return self.chebyshev.degree()

    @property
    def coefficients(self) -> np.ndarray:
        """Power-basis coefficients, lowest degree first."""
        return self.chebyshev.convert(kind=np.polynomial.Polynomial).coef

    @property
    def leading_coefficient(self) -> float:
        c = self.chebyshev
        lo, hi = c.domain
        half = (hi - lo) / 2
        # leading Chebyshev coefficient times 2^(q-1), undo the domain map
        scale = 2.0 ** (self.q - 1) if self.q >= 1 else 1.0
        return float(c.coef[-1] * scale / half**self.q) if self.q else float(c.coef[0])

    @property
    def offset(self):
        """2 lam^q, the shift between Q and the theta = 0 trace."""
        return 2 * self.lam**self.q

    def __call__(self, E, dtype=np.float64):
        lam = np.asarray(self.lam, dtype=dtype)[()]
        return trace(self.alpha, self.lam, Fraction(0), E, dtype=dtype) + 2 * lam**self.q

    def derivative(self, E, dtype=np.float64):
        return trace_and_derivative(self.alpha, self.lam, Fraction(0), E, dtype=dtype)[1]

    def interpolated(self, E):
        return self.chebyshev(E)

    def critical_points(self) -> np.ndarray:
        """The q-1 real critical points of Q, sorted increasingly.

        Seeds come from the interpolant's derivative; each seed is polished
        by bracketed bisection on the exactly evaluated derivative.
        """
        q = self.q
        if q <= 1:
            return np.zeros(0)
        d = self.chebyshev.deriv()
        seeds = d.roots()
        seeds = np.sort(seeds[np.abs(seeds.imag) < 1e-6 * (1 + np.abs(seeds.real))].real)
        lo, hi = self.chebyshev.domain
        if len(seeds) != q - 1:
            seeds = _critical_points_by_scan(self, lo, hi)
        if len(seeds) != q - 1:
            raise ArithmeticError(
                f"found {len(seeds)} critical points of Q for alpha={self.alpha}, lam={self.lam}; expected {q - 1}"
            )
        # brackets: midpoints between neighbouring seeds
        edges = np.concatenate([[lo], (seeds[1:] + seeds[:-1]) / 2, [hi]])
        return _polish_critical(self, seeds, edges[:-1], edges[1:])


def _critical_points_by_scan(cp: ChambersPolynomial, lo, hi, n_grid: int | None = None):
    n_grid = n_grid or 64 * cp.q + 1
    x = np.linspace(lo, hi, n_grid)
    d = cp.derivative(x)
    idx = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) <= 0)[0]
    return np.unique(np.round(x[idx], 14))


def _polish_critical(cp: ChambersPolynomial, seeds, a, b, iters: int = 200):
    """Vectorised bisection of Q' on the brackets [a_i, b_i]; brackets
    without a sign change keep their seed."""
    a = np.array(a, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    da = cp.derivative(a)
    db = cp.derivative(b)
    ok = np.sign(da) != np.sign(db)
    act = ok.copy()
    for _ in range(iters):
        if not act.any():
            break
        m = 0.5 * (a + b)
        dm = cp.derivative(m)
        moving = act & (m != a) & (m != b)
        left = np.sign(dm) == np.sign(da)
        a = np.where(moving & left, m, a)
        da = np.where(moving & left, dm, da)
        b = np.where(moving & ~left, m, b)
        act = moving
    return np.where(ok, 0.5 * (a + b), np.asarray(seeds, dtype=np.float64))


def chambers_polynomial(alpha, lam) -> ChambersPolynomial:
    """Interpolate Q at q+1 Chebyshev nodes on [-(2+2 lam), 2+2 lam].

    The theta = 0 trace is used, so Q(E) = tr T_{q,0}(E) + 2 lam^q.
    """
    a = as_frequency(alpha)
    lam = float(lam)
    q = a.q
    R = 2 + 2 * lam
    shift = 2 * lam**q

    def f(E):
        return trace(a, lam, Fraction(0), E) + shift

    cheb = Chebyshev.interpolate(f, q, domain=[-R, R])
    return ChambersPolynomial(a, lam, cheb)


def chambers_theta_spread(alpha, lam, E, thetas) -> float:
    """max over E of the spread (max - min) across ``thetas`` of
    tr T_{q,theta}(E) + 2 lam^q cos(2 pi q theta)."""
    a = as_frequency(alpha)
    E = np.atleast_1d(np.asarray(E, dtype=float))
    rows = []
    for th in thetas:
        th = as_phase_value(th)
        phase = float(th) * a.q
        rows.append(trace(a, lam, th, E) + 2 * lam**a.q * np.cos(2 * np.pi * (phase % 1.0)))
    rows = np.array(rows)
    return float(np.max(rows.max(axis=0) - rows.min(axis=0)))

