"""Exact and numerical checks of correlation inequalities for monotone
Boolean functions and their Gaussian analogues."""

from .boolean_core import (
    BooleanFunction,
    SpectralSummary,
    correlation,
    discrete_derivative,
    evaluate,
    is_antipodal,
    is_monotone,
    spectral_summary,
)
from .bounds import PairBoundReport, WorstCaseReport, analyze_pair, anneal_search, scan_pairs
from .gaussian_core import (
    HalfSpace,
    HermiteSeries,
    SignComposed,
    bridge,
    gaussian_correlation,
    hermite_tensor,
    moment,
    ou_apply,
)
from .level_ineq import GaussianMixture, ReweightedGaussian, run_suite
from .monotone_enum import enumerate_antipodal_monotone, enumerate_monotone
from .ode_gronwall import integrate_extremal, run_sweep, verify_conclusion
from .process_sim import check_derivative_chain, conditional_moment, cov_curve, estimate_pk

__version__ = "0.1.0"

__all__ = [
    "BooleanFunction",
    "GaussianMixture",
    "HalfSpace",
    "HermiteSeries",
    "PairBoundReport",
    "ReweightedGaussian",
    "SignComposed",
    "SpectralSummary",
    "WorstCaseReport",
    "analyze_pair",
    "anneal_search",
    "bridge",
    "check_derivative_chain",
    "conditional_moment",
    "correlation",
    "cov_curve",
    "discrete_derivative",
    "enumerate_antipodal_monotone",
    "enumerate_monotone",
    "estimate_pk",
    "evaluate",
    "gaussian_correlation",
    "hermite_tensor",
    "integrate_extremal",
    "is_antipodal",
    "is_monotone",
    "moment",
    "ou_apply",
    "run_suite",
    "run_sweep",
    "scan_pairs",
    "spectral_summary",
    "verify_conclusion",
]
