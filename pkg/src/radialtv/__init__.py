"""Exact recovery of point sources from Fourier samples on radial lines.

Each radial line gives a one-dimensional total-variation problem whose dual
is a small semidefinite program.  The points where the dual polynomials
reach modulus one define hyperplanes; their intersection is a candidate
support on which the amplitudes are fitted by least squares.
"""

__version__ = "0.1.0"

from .certificates import NondegeneracyReport, Precertificate, is_nondegenerate, vanishing_derivatives
from .exceptions import *  # noqa: F401,F403
from .geometry import CandidateSupport, candidate_support
from .model import (
    DiscreteMeasure,
    SamplingScheme,
    adjoint_apply,
    arc_min_separation,
    forward_sample,
    min_separation,
    torus_distance,
)
from .recovery import RecoveryConfig, RecoveryResult, recover, recover_noisy, recovery_errors
from .rooting import TrigPolynomial, extremal_points, sup_norm
from .sdp import DualSolution, UnivariateDualProblem, solve_univariate_dual

__all__ = [
    "__version__",
    "DiscreteMeasure",
    "SamplingScheme",
    "forward_sample",
    "adjoint_apply",
    "arc_min_separation",
    "min_separation",
    "torus_distance",
    "UnivariateDualProblem",
    "DualSolution",
    "solve_univariate_dual",
    "TrigPolynomial",
    "extremal_points",
    "sup_norm",
    "CandidateSupport",
    "candidate_support",
    "RecoveryConfig",
    "RecoveryResult",
    "recover",
    "recover_noisy",
    "recovery_errors",
    "Precertificate",
    "NondegeneracyReport",
    "vanishing_derivatives",
    "is_nondegenerate",
]
