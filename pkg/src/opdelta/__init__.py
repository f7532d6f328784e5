"""Regularized functional canonical correlation with operator delta-method inference."""
from .asymptotics import asymptotic_report, empirical_hs_quadform, influence_kernel, limit_map
from .brownian import BrownianModel, mc_study, simulate, true_rho2
from .calculus import AnalyticFn, apply_fn, frechet_derivative, inverse_power, perturb_eigen
from .fcca import FunctionalSample, build_r, fit, fit_cov, rayleigh_oracle, regularize, sample_moments
from .operators import BlockStructure, block, hs_inner, spectral, tensor

__version__ = "0.1.0"
