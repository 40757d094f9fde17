"""Trace formulas for integrals against the intersection-spectrum measure.

* Two traces (rational alpha): the alternating sum of Phi over band edges
  equals tr(Phi(H^per_{theta_+}) R_{theta_+}) - tr(Phi(H^anti_0) R_0).
* Four traces (any alpha): (2k+1) c_{2k} is a signed sum of reflected
  traces of H^{2k+1} at the four phases {0, alpha/2, 1/2, (1+alpha)/2} of the
  whole-line operator, computed on a finite window.
* Fourier duality: the discrete Fourier map conjugates the periodic problem
  at coupling 1/lam into the antiperiodic one at lam.

A reflected trace tr(A R) sums A along an anti-diagonal: entries (j, -j) for
reflections centred on a site and (j, -1-j) for reflections centred on a bond.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .core import LD, RationalFrequency, as_alpha, as_frequency, as_phase_value, potential
from .spectral import (
    build_finite_operator,
    eigensystem,
    reflection_matrix,
    theta_plus,
)

__all__ = [
    "ReflectionKind",
    "BandedWindow",
    "distinguished_phases",
    "reflected_trace",
    "four_trace_terms",
    "two_traces_integral",
    "two_traces_routes",
    "moment_four_traces",
    "simplify_check",
    "duality_bis_residual",
    "fourier_matrix",
    "fourier_duality_residuals",
    "fourier_duality_check",
    "fold_window",
    "projection_residual",
]


class ReflectionKind(enum.Enum):
    """Site-centred (psi_n -> psi_{-n}) or bond-centred (psi_n -> psi_{-1-n})."""

    DIAG = 0
    OFFSET = -1

    @property
    def center(self) -> int:
        return self.value


def distinguished_phases(alpha):
    """(phase, reflection kind, sign) for the four-traces combination."""
    a = as_alpha(alpha)
    a = a.fraction if isinstance(a, RationalFrequency) else a
    return [
        ((1 + a) / 2, ReflectionKind.OFFSET, 1),
        (a / 2, ReflectionKind.OFFSET, 1),
        (Fraction(1, 2), ReflectionKind.DIAG, 1),
        (Fraction(0), ReflectionKind.DIAG, -1),
    ]


@dataclass(frozen=True)
class BandedWindow:
    """H_{alpha,lam,theta} on sites n = -W..W with zero boundary conditions.

    Powers are built with the three-point stencil, so entry (i, j) of the
    m-th power equals the whole-line value whenever |i|, |j| <= W - m.
    """

    alpha: object
    lam: float
    theta: object
    W: int
    dtype: type = LD
    diagonal: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = np.arange(-self.W, self.W + 1)
        object.__setattr__(self, "diagonal", potential(self.lam, self.alpha, self.theta, n, self.dtype))

    @property
    def size(self) -> int:
        return 2 * self.W + 1

    def index(self, n: int) -> int:
        return n + self.W

    def apply(self, A: np.ndarray) -> np.ndarray:
        """H @ A via the stencil (H A)_i = V_i A_i + A_{i-1} + A_{i+1}."""
        out = self.diagonal[:, None] * A
        out[1:] += A[:-1]
        out[:-1] += A[1:]
        return out

    def matrix(self) -> np.ndarray:
        return self.apply(np.eye(self.size, dtype=self.dtype))

    def power(self, m: int) -> np.ndarray:
        P = np.eye(self.size, dtype=self.dtype)
        for _ in range(m):
            P = self.apply(P)
        return P

    def exact_radius(self, m: int) -> int:
        return self.W - m

    def reflected_sum(self, A: np.ndarray, kind: ReflectionKind) -> object:
        """sum_j A[j, c - j] over the window (c = 0 or -1)."""
        c = kind.center
        j = np.arange(-self.W, self.W + 1)
        jj = c - j
        ok = (jj >= -self.W) & (jj <= self.W)
        return A[j[ok] + self.W, jj[ok] + self.W].sum()


def _check_window(W: int, m: int, kind: ReflectionKind):
    # A nonzero anti-diagonal entry (j, c - j) of H^m needs |2j - c| <= m, and
    # it is exact when |j|, |c - j| <= W - m.
    need = (m + 1) // 2 + (1 if kind is ReflectionKind.OFFSET else 0)
    if W - m < need:
        raise ValueError(f"window W={W} too small for power {m}: need W >= {m + need}")


def reflected_trace(alpha, lam, theta, m: int, kind: ReflectionKind | None = None, W: int | None = None, dtype=LD):
    """tr(H^m R) for the whole-line operator, summed along the anti-diagonal."""
    th = as_phase_value(theta)
    if kind is None:
        kind = _kind_for(alpha, th)
    if W is None:
        W = m + (m + 1) // 2 + 3
    _check_window(W, m, kind)
    win = BandedWindow(alpha, lam, th, W, dtype)
    return win.reflected_sum(win.power(m), kind)


def _kind_for(alpha, theta) -> ReflectionKind:
    a = as_alpha(alpha)
    af = a.fraction if isinstance(a, RationalFrequency) else a
    for ph, kind, _ in distinguished_phases(alpha):
        if ph == theta or (isinstance(af, float) and abs(float(ph) - float(theta)) < 1e-15):
            return kind
    raise ValueError(f"theta={theta} is not one of the reflection-symmetric phases")


def four_trace_terms(alpha, lam, m: int, W: int | None = None, dtype=LD) -> dict:
    """The four reflected traces of H^m keyed by phase label."""
    labels = ["(1+alpha)/2", "alpha/2", "1/2", "0"]
    out = {}
    for label, (ph, kind, _) in zip(labels, distinguished_phases(alpha)):
        out[label] = reflected_trace(alpha, lam, ph, m, kind, W, dtype)
    return out


def moment_four_traces(alpha, lam, k: int, W: int | None = None, dtype=LD) -> float:
    """c_{2k}(alpha, lam) from the four reflected traces of H^{2k+1}.

    (2k+1) c_{2k} = tr_{(1+a)/2} + tr_{a/2} + tr_{1/2} - tr_0, negated for
    lam > 1.  ``alpha`` may be an irrational float.  Returned in ``dtype``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    m = 2 * k + 1
    if W is None:
        W = 3 * k + 4
    lam = float(lam)
    total = dtype(0)
    for ph, kind, s in distinguished_phases(alpha):
        total += s * reflected_trace(alpha, lam, ph, m, kind, W, dtype)
    c = total / m
    return -c if lam > 1 else c


def simplify_check(alpha, lam, k: int, tol: float = 1e-10) -> bool:
    """Check tr_{1/2} = -tr_0 and tr_{a/2} = tr_{(1+a)/2} for the power 2k+1.

    Flipping theta -> theta + 1/2 negates the potential; for an odd power the
    reflected trace is odd in the potential except for hopping-only paths,
    which the two identities account for.
    """
    t = four_trace_terms(alpha, lam, 2 * k + 1)
    scale = 1 + max(abs(float(v)) for v in t.values())
    r1 = abs(float(t["1/2"] + t["0"]))
    r2 = abs(float(t["alpha/2"] - t["(1+alpha)/2"]))
    return r1 <= tol * scale and r2 <= tol * scale


def duality_bis_residual(alpha, lam, k: int) -> float:
    """Relative residual of tr_{a/2}(H^{2k+1}_lam) = lam^{2k+1} tr_0(H^{2k+1}_{1/lam})."""
    m = 2 * k + 1
    lam = LD(lam)
    lhs = reflected_trace(alpha, lam, _phase(alpha, "alpha/2"), m, ReflectionKind.OFFSET)
    rhs = lam**m * reflected_trace(alpha, 1 / lam, Fraction(0), m, ReflectionKind.DIAG)
    return float(abs(lhs - rhs) / max(abs(lhs), abs(rhs), LD(1)))


def _phase(alpha, label):
    a = as_alpha(alpha)
    a = a.fraction if isinstance(a, RationalFrequency) else a
    return {"0": Fraction(0), "alpha/2": a / 2, "1/2": Fraction(1, 2), "(1+alpha)/2": (1 + a) / 2}[label]


# ---------------------------------------------------------------------------
# two-traces formula
# ---------------------------------------------------------------------------


def _phi_of(es, Phi):
    """Phi(H) = V diag(Phi(w)) V^T from an eigensystem."""
    V = es.eigenvectors
    return (V * Phi(es.eigenvalues)) @ V.T


def two_traces_routes(alpha, lam, Phi: Callable, dtype=LD) -> tuple:
    """Both evaluations of the two-traces formula.

    Returns (alternating eigenvalue sum, reflected-trace difference).  For
    lam > 1 both are negated so that each equals the integral of Phi'
    against the intersection-spectrum measure.
    """
    a = as_frequency(alpha)
    lam = float(lam)
    tp = theta_plus(a)
    ep = eigensystem(build_finite_operator(a, lam, tp, "periodic"), dtype=dtype)
    ea = eigensystem(build_finite_operator(a, lam, Fraction(0), "antiperiodic"), dtype=dtype)
    signs = np.array([(-1) ** j for j in range(a.q)], dtype=dtype)  # (-1)^{j+1}, j from 1
    alt = np.sum(signs * (Phi(ep.eigenvalues) - Phi(ea.eigenvalues)))
    Rp = reflection_matrix(a.q, -1, "periodic", dtype)
    Ra = reflection_matrix(a.q, 0, "antiperiodic", dtype)
    tr = np.trace(_phi_of(ep, Phi) @ Rp) - np.trace(_phi_of(ea, Phi) @ Ra)
    if lam > 1:
        alt, tr = -alt, -tr
    return alt, tr


def two_traces_integral(alpha, lam, Phi: Callable, dtype=LD, tol: float = 1e-7) -> float:
    """Integral of Phi' against mu^- via the two-traces formula.

    The alternating eigenvalue sum is returned; the reflected-trace form is
    computed alongside and a disagreement beyond ``tol`` (relative) raises,
    as it would indicate misassigned parities.
    """
    alt, tr = two_traces_routes(alpha, lam, Phi, dtype)
    if abs(alt - tr) > tol * max(1.0, abs(float(alt))):
        raise ArithmeticError(f"two-traces routes disagree: {alt} vs {tr}")
    return alt


# ---------------------------------------------------------------------------
# Fourier duality
# ---------------------------------------------------------------------------


def fourier_matrix(alpha, dtype=np.complex128) -> np.ndarray:
    """Unitary F_q with columns (f_j)_n = exp(2 pi i (j alpha + theta_+) n) / sqrt(q)."""
    a = as_frequency(alpha)
    tp = theta_plus(a)
    q = a.q
    n = np.arange(q)
    F = np.empty((q, q), dtype=dtype)
    for j in range(q):
        # phase reduced exactly before exponentiating
        ph = [((j * a.fraction + tp) * int(x)) % 1 for x in n]
        F[:, j] = np.exp(2j * np.pi * np.array([float(p) for p in ph]))
    return F / np.sqrt(q)


def _diag_op(alpha, theta):
    a = as_frequency(alpha)
    return np.diag(potential(1.0, a, theta, np.arange(a.q)))


def fourier_duality_residuals(alpha, lam) -> dict:
    """Frobenius residuals of the Fourier conjugation identities.

    1. F R_{theta_+} = R_0 F
    2. F Laplacian^per = D_0 F
    3. F D_{theta_+} = Laplacian^anti F
    4. F (lam H^per_{theta_+} at 1/lam) = H^anti_0 at lam F
    5. lam H^anti_0 at 1/lam F = F H^per_{theta_+} at lam
    """
    a = as_frequency(alpha)
    lam = float(lam)
    q = a.q
    tp = theta_plus(a)
    F = fourier_matrix(a)
    Rp = reflection_matrix(q, -1, "periodic")
    Ra = reflection_matrix(q, 0, "antiperiodic")
    Lp = build_finite_operator(a, 0.0, 0, "periodic").matrix
    La = build_finite_operator(a, 0.0, 0, "antiperiodic").matrix
    D0 = _diag_op(a, Fraction(0))
    Dp = _diag_op(a, tp)
    Hp_inv = build_finite_operator(a, 1 / lam, tp, "periodic").matrix
    Ha = build_finite_operator(a, lam, Fraction(0), "antiperiodic").matrix
    Ha_inv = build_finite_operator(a, 1 / lam, Fraction(0), "antiperiodic").matrix
    Hp = build_finite_operator(a, lam, tp, "periodic").matrix

    def nrm(X):
        return float(np.linalg.norm(X))

    return {
        "reflection": nrm(F @ Rp - Ra @ F),
        "laplacian_per": nrm(F @ Lp - D0 @ F),
        "potential_theta_plus": nrm(F @ Dp - La @ F),
        "conj_per_to_anti": nrm(F @ (lam * Hp_inv) - Ha @ F),
        "conj_anti_to_per": nrm((lam * Ha_inv) @ F - F @ Hp),
    }


def fourier_duality_check(alpha, lam) -> float:
    """Maximum residual over :func:`fourier_duality_residuals`."""
    if float(lam) <= 0:
        raise ValueError("coupling must be positive")
    return max(fourier_duality_residuals(alpha, lam).values())


# ---------------------------------------------------------------------------
# projection (folding) identity
# ---------------------------------------------------------------------------


def fold_window(A: np.ndarray, W: int, q: int, boundary: str) -> np.ndarray:
    """q x q matrix B[j, l] = sum_m s^m A[j + m q, l] with s = +-1.

    ``A`` is a whole-line matrix window on sites -W..W; columns l = 0..q-1
    must lie well inside it.
    """
    s = 1 if boundary.startswith("per") else -1
    B = np.zeros((q, q), dtype=A.dtype)
    rows = np.arange(-W, W + 1)
    for j in range(q):
        for i in rows:
            if (i - j) % q:
                continue
            m = (i - j) // q
            B[j] += (s**abs(m)) * A[i + W, W : W + q]
    return B


def projection_residual(alpha, lam, theta, power: int, boundary: str) -> float:
    """max |fold(H^power) - (H^{per/anti})^power| for Phi(E) = E^power.

    The window is wide enough that every entry feeding the fold is exact.
    """
    a = as_frequency(alpha)
    th = as_phase_value(theta)
    q = a.q
    W = q + 2 * power + 2
    win = BandedWindow(a, lam, th, W, np.float64)
    P = win.power(power)
    B = fold_window(P, W, q, boundary)
    M = build_finite_operator(a, lam, th, boundary).matrix
    ref = np.linalg.matrix_power(M, power)
    return float(np.max(np.abs(B - ref)))
