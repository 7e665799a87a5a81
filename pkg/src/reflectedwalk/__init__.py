"""Reflected random walks on the non-negative integers.

Exact lattice dynamic programming for fluctuation theory (first-passage
laws, ladder heights, renewal functions), the reflection-time kernel with
its stationary measure and spectrum, an operator renewal sequence, closed
form scaling-limit laws, and reproducible Monte Carlo verification of the
invariance principle towards reflected Brownian motion.
"""

from .errors import (ConfigError, EmptySupport, HorizonTooLarge, ImpossibleBridge,
                     InvariantViolation, MassNotNormalizable, NegativeWeight,
                     NoConvergence, QuadratureFailure, ReflectedWalkError,
                     SlowConvergence, TruncationTooSevere, WindowMismatch)
from .lattice_dp import (FluctuationTables, LatticePmf, bridge_expectation, build_tables,
                         c1, confined_step, delta_pmf, ladder_epoch_renewal,
                         ladder_height_law, meander_expectation, potential_and_renewal,
                         survival_law, tau_law)
from .montecarlo import (PathFunctionalSample, SimPlan, estimate_fdd,
                         ks_against_half_normal, modulus_check, simulate, slln_trace)
from .reflection_kernel import (OperatorSequence, SpectralReport, StationaryMeasure,
                                TruncatedKernel, build_R, reflection_time_kernels,
                                renewal_operators_T, sigma_hat, sigma_limit_check,
                                sigma_tilde, spectral_report, stationary_nu_eig,
                                stationary_nu_formula)
from .report import ConvergenceReport
from .step_dist import (MomentSummary, StepDistribution, ValidationReport, from_table,
                        lazy_walk, load_distribution, mirrored, moments,
                        parse_distribution_text, skew_walk, validate)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "EmptySupport", "HorizonTooLarge", "ImpossibleBridge",
    "InvariantViolation", "MassNotNormalizable", "NegativeWeight", "NoConvergence",
    "QuadratureFailure", "ReflectedWalkError", "SlowConvergence", "TruncationTooSevere",
    "WindowMismatch",
    "FluctuationTables", "LatticePmf", "bridge_expectation", "build_tables", "c1",
    "confined_step", "delta_pmf", "ladder_epoch_renewal", "ladder_height_law",
    "meander_expectation", "potential_and_renewal", "survival_law", "tau_law",
    "PathFunctionalSample", "SimPlan", "estimate_fdd", "ks_against_half_normal",
    "modulus_check", "simulate", "slln_trace",
    "OperatorSequence", "SpectralReport", "StationaryMeasure", "TruncatedKernel",
    "build_R", "reflection_time_kernels", "renewal_operators_T", "sigma_hat",
    "sigma_limit_check", "sigma_tilde", "spectral_report", "stationary_nu_eig",
    "stationary_nu_formula",
    "ConvergenceReport",
    "MomentSummary", "StepDistribution", "ValidationReport", "from_table", "lazy_walk",
    "load_distribution", "mirrored", "moments", "parse_distribution_text", "skew_walk",
    "validate",
    "__version__",
]
