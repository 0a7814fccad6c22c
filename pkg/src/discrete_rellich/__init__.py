"""Numerical and exact verification of discrete Hardy and Rellich inequalities on the half-line."""

from .combinatorics import IdentityReport, exact_series_coefficient, positivity_check, stirling2, verify_identity
from .factorization import (
    RellichRemainder,
    SandwichViolation,
    apply_R1,
    apply_R2,
    hardy_a,
    identity_trials,
    kernel_solution,
    rellich_coeffs,
    zeta,
)
from .operators import (
    BandedMatrix,
    FiniteSequence,
    apply_neg_laplacian,
    apply_power,
    build_matrix,
    quadratic_form,
    rayleigh_quotient,
)
from .optimality import CutoffProfile, ExperimentReport, build_cutoff, distance_experiment, experiment, mollifier
from .spectral import SpectralEstimate, TruncationSweep, min_gen_eig
from .weights import WeightSpec, ground_state, leading_constant, rho1, rho2, rho_k, series_coefficient_rho2

__version__ = "0.1.0"

__all__ = [
    "BandedMatrix",
    "CutoffProfile",
    "ExperimentReport",
    "FiniteSequence",
    "IdentityReport",
    "RellichRemainder",
    "SandwichViolation",
    "SpectralEstimate",
    "TruncationSweep",
    "WeightSpec",
    "apply_R1",
    "apply_R2",
    "apply_neg_laplacian",
    "apply_power",
    "build_cutoff",
    "build_matrix",
    "distance_experiment",
    "exact_series_coefficient",
    "experiment",
    "ground_state",
    "hardy_a",
    "identity_trials",
    "kernel_solution",
    "leading_constant",
    "min_gen_eig",
    "mollifier",
    "positivity_check",
    "quadratic_form",
    "rayleigh_quotient",
    "rellich_coeffs",
    "rho1",
    "rho2",
    "rho_k",
    "series_coefficient_rho2",
    "stirling2",
    "verify_identity",
    "zeta",
]
