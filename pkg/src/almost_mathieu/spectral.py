"""Periodic / antiperiodic restrictions, their eigenvalues and parities, and
the spectra Sigma_theta, Sigma^+ (union over phases) and Sigma^- (intersection
over phases) of the almost Mathieu operator at rational frequency.

Two independent routes are provided for every set:

* eigenvalues of q x q (anti)periodic matrices, refined to extended
  precision with a Rayleigh quotient;
* bracketed bisection of the Chambers polynomial Q on its monotone pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Optional

import numpy as np

from .cocycle import ChambersPolynomial, chambers_polynomial, trace_with_condition
from .core import LD, IntervalUnion, RationalFrequency, as_frequency, as_phase_value, potential

__all__ = [
    "Boundary",
    "FiniteOperator",
    "EigenSystem",
    "Band",
    "OrderedBandList",
    "theta_plus",
    "build_finite_operator",
    "reflection_matrix",
    "reflection_center",
    "eigensystem",
    "chambers_preimage",
    "spectrum_union",
    "spectrum_union_eigen",
    "spectrum_at_phase",
    "spectrum_at_phase_chambers",
    "intersection_spectrum",
    "intersection_spectrum_chambers",
]

Boundary = Literal["periodic", "antiperiodic"]


def theta_plus(alpha) -> Fraction:
    """alpha/2 for odd p, (1+alpha)/2 for even p; satisfies -theta = theta - alpha mod 1."""
    return as_frequency(alpha).theta_plus


def _sign(boundary: str) -> int:
    if boundary in ("periodic", "per", "+"):
        return 1
    if boundary in ("antiperiodic", "anti", "-"):
        return -1
    raise ValueError(f"unknown boundary {boundary!r}")


# ---------------------------------------------------------------------------
# finite operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteOperator:
    """H restricted to q-periodic (psi_{n+q} = psi_n) or q-antiperiodic
    (psi_{n+q} = -psi_n) sequences, written in the basis psi_0..psi_{q-1}."""

    alpha: RationalFrequency
    lam: float
    theta: Fraction
    boundary: str
    matrix: np.ndarray = field(repr=False)

    @property
    def q(self) -> int:
        return self.alpha.q

    @property
    def sign(self) -> int:
        return _sign(self.boundary)


def _finite_matrix(alpha: RationalFrequency, lam, theta, sign: int, dtype) -> np.ndarray:
    q = alpha.q
    M = np.zeros((q, q), dtype=dtype)
    M[np.arange(q), np.arange(q)] = potential(lam, alpha, theta, np.arange(q), dtype)
    # hopping n -> n+1; the wrap from q-1 to q picks up the boundary sign.
    # Adding (rather than assigning) gives the right q = 1 and q = 2 matrices:
    # [V +- 2] and off-diagonals 1 + sign.
    for n in range(q):
        m = (n + 1) % q
        s = sign if n == q - 1 else 1
        M[n, m] += s
        M[m, n] += s
    return M


def build_finite_operator(alpha, lam, theta, boundary: str, dtype=np.float64) -> FiniteOperator:
    """Symmetric q x q matrix of H^per_theta or H^anti_theta."""
    a = as_frequency(alpha)
    th = as_phase_value(theta)
    M = _finite_matrix(a, lam, th, _sign(boundary), dtype)
    return FiniteOperator(a, float(lam), th, "periodic" if _sign(boundary) > 0 else "antiperiodic", M)


def reflection_center(alpha, theta) -> Optional[int]:
    """c in {0, -1} with psi_n -> psi_{c-n} commuting with H_theta, or None.

    The reflection about c is a symmetry iff 2 theta + c alpha is an integer.
    """
    a = as_frequency(alpha).fraction
    th = as_phase_value(theta)
    if not isinstance(th, Fraction):
        return None
    for c in (0, -1):
        if (2 * th + c * a).denominator == 1:
            return c
    return None


def reflection_matrix(q: int, center: int, boundary: str, dtype=np.float64) -> np.ndarray:
    """(R psi)_n = psi_{c-n} on (anti)periodic sequences; wrapping the index
    back into [0, q) costs a factor of the boundary sign per period."""
    sign = _sign(boundary)
    R = np.zeros((q, q), dtype=dtype)
    for n in range(q):
        m = center - n
        k, r = divmod(m, q)
        R[n, r] = sign ** abs(k)
    return R


def _parity_basis(q: int, center: int, boundary: str, dtype):
    """Orthonormal bases of the +1 and -1 eigenspaces of the reflection,
    built from orbit pairs so they are exact up to 1/sqrt(2)."""
    R = reflection_matrix(q, center, boundary, dtype=np.float64)
    inv_sqrt2 = 1 / np.sqrt(dtype(2))
    even, odd = [], []
    seen = set()
    for n in range(q):
        if n in seen:
            continue
        m = int(np.nonzero(R[n])[0][0])
        s = int(R[n, m])
        seen.update((n, m))
        if m == n:
            v = np.zeros(q, dtype=dtype)
            v[n] = 1
            (even if s > 0 else odd).append(v)
            continue
        v = np.zeros(q, dtype=dtype)
        w = np.zeros(q, dtype=dtype)
        v[n], v[m] = inv_sqrt2, s * inv_sqrt2
        w[n], w[m] = inv_sqrt2, -s * inv_sqrt2
        even.append(v)
        odd.append(w)

    def stack(vs):
        return np.array(vs, dtype=dtype).T if vs else np.zeros((q, 0), dtype=dtype)

    return stack(even), stack(odd)


@dataclass(frozen=True)
class EigenSystem:
    """Eigenpairs sorted by decreasing eigenvalue.

    ``parities`` holds +1 (even), -1 (odd) or 0 (no reflection symmetry) per
    eigenvector, relative to the reflection about ``center``.
    """

    operator: FiniteOperator
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    parities: tuple
    center: Optional[int]
    residual: float
    trace_residual: float

    def parity_labels(self) -> list[str]:
        return [{1: "even", -1: "odd", 0: "none"}[p] for p in self.parities]

    def alternates(self) -> bool:
        """True if parities read even, odd, even, ... in decreasing order."""
        return list(self.parities) == [(-1) ** j for j in range(len(self.parities))]


def _refined_eigh(M: np.ndarray, dtype):
    """Double-precision eigh followed by a Rayleigh quotient in ``dtype``."""
    if M.shape[0] == 0:
        return np.zeros(0, dtype=dtype), np.zeros((0, 0), dtype=dtype)
    w, V = np.linalg.eigh(np.asarray(M, dtype=np.float64))
    if np.dtype(dtype) == np.dtype(np.float64):
        return w, V
    V = V.astype(dtype)
    Md = np.asarray(M, dtype=dtype)
    num = np.einsum("ij,ik,kj->j", V, Md, V)
    den = np.einsum("ij,ij->j", V, V)
    return num / den, V


def eigensystem(op: FiniteOperator, dtype=LD, center: Optional[int] | str = "auto", check: bool = True) -> EigenSystem:
    """Eigenvalues (decreasing), eigenvectors and reflection parities.

    When the phase admits a reflection symmetry the matrix is block
    diagonalised over its even and odd subspaces first, so parities are
    exact even for nearly degenerate eigenvalues.

    With ``check`` the pairs are validated: residual ||Mv - Ev|| relative to
    ||M||, and |tr T_q(E) - 2 sign| relative to 1 + the trace condition number (see
    :func:`~almost_mathieu.cocycle.trace_with_condition`).
    """
    q = op.q
    if center == "auto":
        center = reflection_center(op.alpha, op.theta)
    M = _finite_matrix(op.alpha, op.lam, op.theta, op.sign, dtype)
    if center is None:
        w, V = _refined_eigh(M, dtype)
        par = np.zeros(q, dtype=int)
    else:
        Be, Bo = _parity_basis(q, center, op.boundary, dtype)
        ws, Vs, ps = [], [], []
        for B, s in ((Be, 1), (Bo, -1)):
            if B.shape[1] == 0:
                continue
            wb, Vb = _refined_eigh(B.T @ M @ B, dtype)
            ws.append(wb)
            Vs.append(B @ Vb)
            ps.append(np.full(len(wb), s))
        w = np.concatenate(ws)
        V = np.concatenate(Vs, axis=1)
        par = np.concatenate(ps)
    order = np.argsort(-np.asarray(w, dtype=np.float64), kind="stable")
    w, V, par = w[order], V[:, order], par[order]

    normM = float(np.max(np.abs(np.linalg.eigvalsh(np.asarray(M, dtype=np.float64))))) if q else 0.0
    res = 0.0
    if q:
        R = np.asarray(M @ V - V * w, dtype=np.float64)
        res = float(np.max(np.linalg.norm(R, axis=0))) / max(normM, 1.0)
    tr, _, cond = trace_with_condition(op.alpha, op.lam, op.theta, np.asarray(w, dtype=LD), dtype=LD)
    tres = float(np.max(np.abs(tr - 2 * op.sign) / (1 + cond))) if q else 0.0
    if check:
        if res > 1e-9:
            raise ArithmeticError(f"eigen-residual {res:.3e} for {op.boundary} q={q} lam={op.lam}")
        if tres > 1e-7:
            raise ArithmeticError(f"trace check failed ({tres:.3e}) for {op.boundary} q={q} lam={op.lam}")
    return EigenSystem(op, w, V, tuple(int(p) for p in par), center, res, tres)


# ---------------------------------------------------------------------------
# spectra as interval unions
# ---------------------------------------------------------------------------


def _bisect_levels(cp: ChambersPolynomial, a, b, level, iters: int = 200):
    """Vectorised bisection of Q(E) = level on brackets [a_i, b_i] where Q is
    monotone, in extended precision.  If the level lies outside
    Q([a_i, b_i]) the nearer bracket end is returned (a band edge at a
    critical point, i.e. a closed gap)."""
    a = np.array(a, dtype=LD)
    b = np.array(b, dtype=LD)
    level = np.broadcast_to(np.asarray(level, dtype=LD), a.shape).copy()
    fa = cp(a, dtype=LD) - level
    fb = cp(b, dtype=LD) - level
    # a critical value equal to the level up to rounding is a double root;
    # bisection would only resolve it to sqrt(eps), so snap to the bracket end
    snap = 1e-16 * (1 + np.abs(level))
    fa = np.where(np.abs(fa) <= snap, 0, fa)
    fb = np.where(np.abs(fb) <= snap, 0, fb)
    out = np.empty_like(a)
    no_change = (np.sign(fa) * np.sign(fb) > 0) | (fa == 0) | (fb == 0)
    out[no_change] = np.where(np.abs(fa) <= np.abs(fb), a, b)[no_change]
    act = ~no_change
    lo, hi, flo = a.copy(), b.copy(), fa.copy()
    for _ in range(iters):
        if not act.any():
            break
        mid = (lo + hi) / 2
        fm = cp(mid, dtype=LD) - level
        moving = act & (mid != lo) & (mid != hi)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(moving & left, mid, lo)
        flo = np.where(moving & left, fm, flo)
        hi = np.where(moving & ~left, mid, hi)
        act = moving
    out[~no_change] = ((lo + hi) / 2)[~no_change]
    return out


def chambers_preimage(cp: ChambersPolynomial, low: float, high: float, tol: float = 0.0) -> IntervalUnion:
    """Q^{-1}([low, high]) for |low|, |high| <= 2 + 2 lam^q.

    Q is split into its q monotone pieces at the critical points; each
    piece contributes exactly one interval since every critical value has
    modulus at least 2 + 2 lam^q.
    """
    q = cp.q
    R = 2 + 2 * cp.lam
    crit = cp.critical_points()
    edges = np.concatenate([[-R], crit, [R]])
    a, b = edges[:-1], edges[1:]
    x_lo = _bisect_levels(cp, a, b, low)
    x_hi = _bisect_levels(cp, a, b, high)
    lo = np.minimum(x_lo, x_hi).astype(np.float64)
    hi = np.maximum(x_lo, x_hi).astype(np.float64)
    if len(lo) != q:
        raise ArithmeticError(f"expected {q} monotone pieces, got {len(lo)}")
    return IntervalUnion(zip(lo, hi), tol=tol)


def _pair_sorted(values) -> IntervalUnion:
    v = np.sort(np.asarray(values, dtype=np.float64))
    return IntervalUnion(zip(v[0::2], v[1::2]))


def spectrum_union(alpha, lam) -> IntervalUnion:
    """Sigma^+ = Q^{-1}([-2-2 lam^q, 2+2 lam^q]) by bisection on Q."""
    a = as_frequency(alpha)
    lam = float(lam)
    L = 2 + 2 * lam**a.q
    return chambers_preimage(chambers_polynomial(a, lam), -L, L)


def spectrum_union_eigen(alpha, lam) -> IntervalUnion:
    """Sigma^+ from eigenvalues: its edges are the periodic eigenvalues at
    theta = 0 (Q = 2 + 2 lam^q) and the antiperiodic ones at theta = 1/(2q)
    (Q = -2 - 2 lam^q)."""
    a = as_frequency(alpha)
    e1 = eigensystem(build_finite_operator(a, lam, Fraction(0), "periodic"), center=None).eigenvalues
    e2 = eigensystem(build_finite_operator(a, lam, Fraction(1, 2 * a.q), "antiperiodic"), center=None).eigenvalues
    return _pair_sorted(np.concatenate([e1, e2]).astype(np.float64))


def spectrum_at_phase(alpha, lam, theta) -> IntervalUnion:
    """Sigma_theta: bands between periodic and antiperiodic eigenvalues."""
    a = as_frequency(alpha)
    ep = eigensystem(build_finite_operator(a, lam, theta, "periodic"), check=False).eigenvalues
    ea = eigensystem(build_finite_operator(a, lam, theta, "antiperiodic"), check=False).eigenvalues
    return _pair_sorted(np.concatenate([ep, ea]).astype(np.float64))


def spectrum_at_phase_chambers(alpha, lam, theta) -> IntervalUnion:
    """Sigma_theta = Q^{-1}([-2 + s, 2 + s]) with s = 2 lam^q cos(2 pi q theta)."""
    a = as_frequency(alpha)
    lam = float(lam)
    th = as_phase_value(theta)
    s = 2 * lam**a.q * np.cos(2 * np.pi * (float(th * a.q) % 1.0))
    return chambers_preimage(chambers_polynomial(a, lam), -2 + s, 2 + s)


@dataclass(frozen=True)
class Band:
    """One band J_j with the origin of each endpoint ('per' or 'anti')."""

    j: int
    lo: float
    hi: float
    lo_source: str
    hi_source: str

    @property
    def length(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class OrderedBandList:
    """The intersection spectrum as ordered bands J_1, ..., J_q (decreasing energy).

    For lam < 1, odd j gives J_j = [E^anti_j(0), E^per_j(theta_+)], even j
    the reverse.  For lam > 1 the bands are those at coupling 1/lam scaled
    by lam (``scale``).  At lam = 1 every band has length zero.
    """

    alpha: RationalFrequency
    lam: float
    bands: tuple
    scale: float = 1.0

    @property
    def regime(self) -> str:
        return "subcritical" if self.lam < 1 else ("critical" if self.lam == 1 else "supercritical")

    def __iter__(self):
        return iter(self.bands)

    def __len__(self):
        return len(self.bands)

    @property
    def endpoints(self) -> np.ndarray:
        """(q, 2) array of [lo, hi] in extended precision."""
        return np.array([[b.lo, b.hi] for b in self.bands], dtype=LD).reshape(-1, 2)

    @property
    def union(self) -> IntervalUnion:
        return IntervalUnion((float(b.lo), float(b.hi)) for b in self.bands)

    @property
    def measure(self) -> float:
        e = self.endpoints
        return float(np.sum(e[:, 1] - e[:, 0]))


def intersection_spectrum(alpha, lam, dtype=LD) -> OrderedBandList:
    """Sigma^- as ordered bands from H^anti_0 and H^per_{theta_+} eigenvalues."""
    a = as_frequency(alpha)
    lam = float(lam)
    if lam < 0:
        raise ValueError("coupling must be nonnegative")
    if lam > 1:
        inner = intersection_spectrum(a, 1 / lam, dtype)
        s = dtype(lam)
        bands = tuple(Band(b.j, b.lo * s, b.hi * s, b.lo_source, b.hi_source) for b in inner.bands)
        return OrderedBandList(a, lam, bands, scale=lam)
    ea = eigensystem(build_finite_operator(a, lam, Fraction(0), "antiperiodic"), dtype=dtype).eigenvalues
    ep = eigensystem(build_finite_operator(a, lam, theta_plus(a), "periodic"), dtype=dtype).eigenvalues
    bands = []
    for idx in range(a.q):
        j = idx + 1
        if lam == 1:
            # both eigenvalue lists are the roots of Q_1; use their mean
            x = (ea[idx] + ep[idx]) / 2
            bands.append(Band(j, x, x, "anti", "per"))
            continue
        if j % 2:
            lo, hi, ls, hs = ea[idx], ep[idx], "anti", "per"
        else:
            lo, hi, ls, hs = ep[idx], ea[idx], "per", "anti"
        if hi < lo - 1e-9 * (1 + abs(float(lo))):
            raise ArithmeticError(f"band J_{j} inverted for alpha={a}, lam={lam}: [{lo}, {hi}]")
        bands.append(Band(j, lo, hi, ls, hs))
    return OrderedBandList(a, lam, tuple(bands))


def intersection_spectrum_chambers(alpha, lam) -> IntervalUnion:
    """Sigma^- = Q^{-1}([-2|1 - lam^q|, 2|1 - lam^q|]) by bisection on Q."""
    a = as_frequency(alpha)
    lam = float(lam)
    h = 2 * abs(1 - lam**a.q)
    return chambers_preimage(chambers_polynomial(a, lam), -h, h)
