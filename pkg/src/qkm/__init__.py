"""Spectral curve and planar two-point / 1+1-point cumulants of the quartic
analogue of the Kontsevich matrix model."""

__version__ = "0.1.0"

from .cauchy import CauchyInverse, CauchyNodes, cauchy_inverse, cauchy_matrix, cauchy_sums, verify_schechter
from .correlators import CorrelatorValue, G0_diag, G0_oneone, G0_pair, G_matrix
from .curve import AlphaRoots, PreimageFan, RationalR, alpha_roots, check_factorization, eval_R, eval_R_prime, hat_fan, preimages
from .jets import SeriesJet
from .spectral import ModelInput, SolverOptions, SpectralData, jacobian, residuals, series_spectral, solve_spectral

__all__ = [
    "AlphaRoots", "CauchyInverse", "CauchyNodes", "CorrelatorValue", "G0_diag", "G0_oneone", "G0_pair",
    "G_matrix", "ModelInput", "PreimageFan", "RationalR", "SeriesJet", "SolverOptions", "SpectralData",
    "alpha_roots", "cauchy_inverse", "cauchy_matrix", "cauchy_sums", "check_factorization", "eval_R",
    "eval_R_prime", "hat_fan", "jacobian", "preimages", "residuals", "series_spectral", "solve_spectral",
    "verify_schechter",
]
