"""Almost Mathieu operator: spectra, intersection-spectrum measures, trace
formulas, exact moment polynomials and the Cauchy functional calculus.

    (H psi)_n = psi_{n+1} + psi_{n-1} + 2 lam cos(2 pi (theta + n alpha)) psi_n
"""

from .core import (
    BivariatePolynomial,
    Coupling,
    IntervalUnion,
    Phase,
    RationalFrequency,
    interval_union_measure,
    poly_dual_transform,
)
from .cocycle import ChambersPolynomial, TransferMatrix, chambers_polynomial, trace, transfer_matrix
from .spectral import (
    Band,
    EigenSystem,
    FiniteOperator,
    OrderedBandList,
    build_finite_operator,
    eigensystem,
    intersection_spectrum,
    intersection_spectrum_chambers,
    spectrum_at_phase,
    spectrum_union,
    theta_plus,
)
from .traces import (
    fourier_duality_check,
    moment_four_traces,
    projection_residual,
    reflected_trace,
    two_traces_integral,
)
from .sympoly import (
    evaluate_moment,
    evaluate_normalized_moment,
    symbolic_moment,
    symbolic_normalized_moment,
    symbolic_T,
    verify_duality,
)
from .funcalc import ContourSpec, ResolventWindow, four_traces_analytic, function_of_operator, resolvent
from .measures import (
    AtomicMeasure,
    SpectralMeasure,
    atomic_limit,
    convergence_experiment,
    gap_measure,
    integrate_function,
    integrate_monomial,
    normalized_moment,
)

__version__ = "0.1.0"

import types as _types

__all__ = sorted(n for n, v in globals().items() if not n.startswith("_") and not isinstance(v, _types.ModuleType))
